#pragma once

#include <iosfwd>
#include <vector>

namespace casc {

// Piecewise-linear function on [0, inf). Piece k holds on (start_k, start_{k+1}]
// (the first piece also at t = 0, the last one up to infinity), so a jump at a
// breakpoint takes the left piece's value there.
class PiecewiseLinear {
 public:
  struct Piece {
    double start = 0.0;
    double slope = 0.0;
    double intercept = 0.0;
    double at(double t) const { return slope * t + intercept; }
  };

  PiecewiseLinear() : pieces_{Piece{}} {}
  explicit PiecewiseLinear(std::vector<Piece> pieces);

  static PiecewiseLinear linear(double slope, double intercept = 0.0);
  static PiecewiseLinear constant(double value) { return linear(0.0, value); }

  double operator()(double t) const;
  double right_limit(double t) const;
  const std::vector<Piece>& pieces() const { return pieces_; }
  std::vector<double> breakpoints() const;  // piece starts after 0
  std::size_t piece_count() const { return pieces_.size(); }

  bool nondecreasing(double tol = 1e-9) const;
  // Largest |left - right| over breakpoints, relative to max(1, |value|).
  double max_jump() const;
  bool continuous(double tol = 1e-9) const { return max_jump() <= tol; }

  // Pieces active on (lo, hi], re-based so the first starts at lo.
  std::vector<Piece> window(double lo, double hi) const;

  friend PiecewiseLinear sum(const PiecewiseLinear& f, const PiecewiseLinear& g);
  friend PiecewiseLinear max(const PiecewiseLinear& f, const PiecewiseLinear& g);

 private:
  std::size_t index(double t) const;
  void simplify();

  std::vector<Piece> pieces_;
};

PiecewiseLinear sum(const PiecewiseLinear& f, const PiecewiseLinear& g);
PiecewiseLinear max(const PiecewiseLinear& f, const PiecewiseLinear& g);
// t -> f(a t), a > 0.
PiecewiseLinear pre_compose_scale(const PiecewiseLinear& f, double a);
// Equal to f on [0, t_star], constant f(t_star) afterwards.
PiecewiseLinear clip_constant(const PiecewiseLinear& f, double t_star);

/// CSV `t,value`: the origin, every breakpoint (both sides of a jump) and one
/// point past the last breakpoint.
void write_pwl(const PiecewiseLinear& f, std::ostream& out);

}  // namespace casc
