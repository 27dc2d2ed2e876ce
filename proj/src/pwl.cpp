#include "casc/pwl.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "casc/grid.hpp"

namespace casc {
namespace {

constexpr double kMerge = 1e-12;
constexpr double kInf = std::numeric_limits<double>::infinity();

bool close(double a, double b) {
  return std::abs(a - b) <= kMerge * std::max({1.0, std::abs(a), std::abs(b)});
}

std::vector<double> merged_starts(const PiecewiseLinear& f, const PiecewiseLinear& g) {
  std::vector<double> s;
  for (const auto& p : f.pieces()) s.push_back(p.start);
  for (const auto& p : g.pieces()) s.push_back(p.start);
  std::sort(s.begin(), s.end());
  std::vector<double> out;
  for (double x : s)
    if (out.empty() || x - out.back() > kMerge * std::max(1e-300, std::abs(x))) out.push_back(x);
  return out;
}

double interior(const std::vector<double>& starts, std::size_t k) {
  if (k + 1 < starts.size()) return 0.5 * (starts[k] + starts[k + 1]);
  return starts[k] + std::max(1.0, starts[k]);
}

}  // namespace

PiecewiseLinear::PiecewiseLinear(std::vector<Piece> pieces) : pieces_(std::move(pieces)) {
  if (pieces_.empty() || pieces_.front().start != 0.0)
    throw std::invalid_argument("piecewise-linear: first piece must start at 0");
  for (std::size_t k = 1; k < pieces_.size(); ++k)
    if (!(pieces_[k].start >= pieces_[k - 1].start))
      throw std::invalid_argument("piecewise-linear: piece starts must increase");
  simplify();
}

PiecewiseLinear PiecewiseLinear::linear(double slope, double intercept) {
  return PiecewiseLinear({Piece{0.0, slope, intercept}});
}

std::size_t PiecewiseLinear::index(double t) const {
  auto it = std::lower_bound(pieces_.begin(), pieces_.end(), t,
                             [](const Piece& p, double x) { return p.start < x; });
  const auto k = static_cast<std::size_t>(it - pieces_.begin());
  return k == 0 ? 0 : k - 1;
}

double PiecewiseLinear::operator()(double t) const { return pieces_[index(t)].at(t); }

double PiecewiseLinear::right_limit(double t) const {
  auto it = std::upper_bound(pieces_.begin(), pieces_.end(), t,
                             [](double x, const Piece& p) { return x < p.start; });
  const auto k = static_cast<std::size_t>(it - pieces_.begin());
  return pieces_[k == 0 ? 0 : k - 1].at(t);
}

std::vector<double> PiecewiseLinear::breakpoints() const {
  std::vector<double> out;
  for (std::size_t k = 1; k < pieces_.size(); ++k) out.push_back(pieces_[k].start);
  return out;
}

bool PiecewiseLinear::nondecreasing(double tol) const {
  for (std::size_t k = 0; k < pieces_.size(); ++k) {
    if (pieces_[k].slope < -tol) return false;
    if (k > 0) {
      const double t = pieces_[k].start;
      const double left = pieces_[k - 1].at(t);
      if (pieces_[k].at(t) - left < -tol * std::max(1.0, std::abs(left))) return false;
    }
  }
  return true;
}

double PiecewiseLinear::max_jump() const {
  double jump = 0.0;
  for (std::size_t k = 1; k < pieces_.size(); ++k) {
    const double t = pieces_[k].start;
    const double left = pieces_[k - 1].at(t);
    jump = std::max(jump, std::abs(pieces_[k].at(t) - left) / std::max(1.0, std::abs(left)));
  }
  return jump;
}

std::vector<PiecewiseLinear::Piece> PiecewiseLinear::window(double lo, double hi) const {
  std::vector<Piece> out;
  for (std::size_t k = 0; k < pieces_.size(); ++k) {
    const double s = pieces_[k].start;
    const double e = k + 1 < pieces_.size() ? pieces_[k + 1].start : kInf;
    if (s < hi && e > lo) {
      Piece p = pieces_[k];
      p.start = std::max(s, lo);
      out.push_back(p);
    }
  }
  return out;
}

void PiecewiseLinear::simplify() {
  std::vector<Piece> out;
  for (const auto& p : pieces_) {
    if (!out.empty() && p.start <= out.back().start) {
      // Zero-length predecessor: the later piece governs from here on.
      out.back().slope = p.slope;
      out.back().intercept = p.intercept;
    } else if (!out.empty() && close(p.slope, out.back().slope) &&
               close(p.intercept, out.back().intercept)) {
      continue;
    } else {
      out.push_back(p);
    }
    while (out.size() >= 2 && close(out.back().slope, out[out.size() - 2].slope) &&
           close(out.back().intercept, out[out.size() - 2].intercept))
      out.pop_back();
  }
  pieces_ = std::move(out);
}

PiecewiseLinear sum(const PiecewiseLinear& f, const PiecewiseLinear& g) {
  const auto starts = merged_starts(f, g);
  std::vector<PiecewiseLinear::Piece> out;
  for (std::size_t k = 0; k < starts.size(); ++k) {
    const double t = interior(starts, k);
    const auto& a = f.pieces_[f.index(t)];
    const auto& b = g.pieces_[g.index(t)];
    out.push_back({starts[k], a.slope + b.slope, a.intercept + b.intercept});
  }
  return PiecewiseLinear(std::move(out));
}

PiecewiseLinear max(const PiecewiseLinear& f, const PiecewiseLinear& g) {
  const auto starts = merged_starts(f, g);
  std::vector<PiecewiseLinear::Piece> out;
  for (std::size_t k = 0; k < starts.size(); ++k) {
    const double lo = starts[k];
    const double hi = k + 1 < starts.size() ? starts[k + 1] : kInf;
    const double t = interior(starts, k);
    const auto a = f.pieces_[f.index(t)];
    const auto b = g.pieces_[g.index(t)];
    std::vector<double> cuts{lo};
    if (a.slope != b.slope) {
      const double x = (b.intercept - a.intercept) / (a.slope - b.slope);
      if (x > lo && x < hi && !close(x, lo) && (hi == kInf || !close(x, hi))) cuts.push_back(x);
    }
    for (std::size_t c = 0; c < cuts.size(); ++c) {
      const double u = c + 1 < cuts.size() ? 0.5 * (cuts[c] + cuts[c + 1])
                       : (hi < kInf ? 0.5 * (cuts[c] + hi) : cuts[c] + std::max(1.0, cuts[c]));
      const auto& pick = b.at(u) > a.at(u) ? b : a;
      out.push_back({cuts[c], pick.slope, pick.intercept});
    }
  }
  return PiecewiseLinear(std::move(out));
}

PiecewiseLinear pre_compose_scale(const PiecewiseLinear& f, double a) {
  if (!(a > 0.0)) throw std::invalid_argument("pre_compose_scale: factor must be > 0");
  std::vector<PiecewiseLinear::Piece> out;
  for (const auto& p : f.pieces()) out.push_back({p.start / a, p.slope * a, p.intercept});
  return PiecewiseLinear(std::move(out));
}

PiecewiseLinear clip_constant(const PiecewiseLinear& f, double t_star) {
  auto out = f.window(0.0, t_star);
  if (t_star > 0.0) out.push_back({t_star, 0.0, f(t_star)});
  else out = {{0.0, 0.0, f(0.0)}};
  return PiecewiseLinear(std::move(out));
}

void write_pwl(const PiecewiseLinear& f, std::ostream& out) {
  out << "t,value\n";
  out << "0," << format_double(f(0.0)) << '\n';
  const auto bps = f.breakpoints();
  for (double t : bps) {
    const double left = f(t), right = f.right_limit(t);
    out << format_double(t) << ',' << format_double(left) << '\n';
    if (right != left) out << format_double(t) << ',' << format_double(right) << '\n';
  }
  const double last = bps.empty() ? 1.0 : 1.5 * bps.back();
  out << format_double(last) << ',' << format_double(f(last)) << '\n';
}

}  // namespace casc
