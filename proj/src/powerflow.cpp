#include "casc/powerflow.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>
#include <algorithm>
#include <cmath>

#include "casc/errors.hpp"

namespace casc {
namespace {

constexpr double kImbalanceTolerance = 1e-6;
constexpr double kResidualTolerance = 1e-8;
constexpr int kRefinementSteps = 3;
constexpr std::size_t kMaxCachedIslands = 4096;

std::uint64_t mix(std::uint64_t h, std::uint64_t v) {
  h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  return h;
}

std::uint64_t island_key(const Island& island) {
  std::uint64_t h = mix(0xcbf29ce484222325ULL, island.buses.size());
  h = mix(h, island.buses.front());
  for (int j : island.lines) h = mix(h, static_cast<std::uint64_t>(j));
  return h;
}

}  // namespace

struct FlowSolver::Factor {
  std::vector<int> buses;
  std::vector<int> lines;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>, Eigen::Lower,
                        Eigen::AMDOrdering<int>>
      ldlt;
  std::uint64_t stamp = 0;
};

FlowSolver::FlowSolver(const Grid& grid)
    : grid_(&grid), admittance_(grid.line_count()), local_(grid.bus_count(), -1) {
  for (int j = 0; j < grid.line_count(); ++j) {
    const double x = grid.lines()[j].reactance;
    admittance_[j] = x != 0.0 ? 1.0 / x : 0.0;
  }
}

FlowSolver::~FlowSolver() = default;
FlowSolver::FlowSolver(FlowSolver&&) noexcept = default;
FlowSolver& FlowSolver::operator=(FlowSolver&&) noexcept = default;

FlowSolver::Factor& FlowSolver::factor_for(const Island& island) {
  const auto key = island_key(island);
  auto it = cache_.find(key);
  if (it != cache_.end() && it->second->lines == island.lines &&
      it->second->buses == island.buses) {
    it->second->stamp = generation_;
    return *it->second;
  }
  if (cache_.size() >= kMaxCachedIslands) cache_.clear();

  auto factor = std::make_unique<Factor>();
  factor->buses = island.buses;
  factor->lines = island.lines;
  factor->stamp = generation_;

  const int k = static_cast<int>(island.buses.size());
  for (int a = 0; a < k; ++a) local_[island.buses[a]] = a;
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(4 * island.lines.size());
  for (int j : island.lines) {
    if (admittance_[j] == 0.0)
      throw CaseError("line " + std::to_string(grid_->lines()[j].id) +
                      " has zero reactance");
    const int a = local_[grid_->tail(j)] - 1;
    const int b = local_[grid_->head(j)] - 1;
    const double w = admittance_[j];
    if (a >= 0) triplets.emplace_back(a, a, w);
    if (b >= 0) triplets.emplace_back(b, b, w);
    if (a >= 0 && b >= 0) {
      triplets.emplace_back(std::max(a, b), std::min(a, b), -w);
    }
  }
  for (int v : island.buses) local_[v] = -1;

  Eigen::SparseMatrix<double> reduced(k - 1, k - 1);
  reduced.setFromTriplets(triplets.begin(), triplets.end());
  factor->ldlt.compute(reduced);
  if (factor->ldlt.info() != Eigen::Success)
    throw std::logic_error("singular reduced Laplacian on a connected island");
  ++factorizations_;
  auto& ref = *factor;
  cache_[key] = std::move(factor);
  return ref;
}

void FlowSolver::solve_island(const Island& island, int island_id,
                              std::span<const double> beta,
                              std::span<double> flows, std::span<double> phases) {
  const int k = static_cast<int>(island.buses.size());
  double sum = 0.0, sum_abs = 0.0;
  for (int v : island.buses) {
    sum += beta[v];
    sum_abs += std::abs(beta[v]);
  }
  if (std::abs(sum) > kImbalanceTolerance * sum_abs + 1e-12)
    throw ImbalanceError(island_id, sum);
  if (k == 1 || island.lines.empty()) {
    for (int v : island.buses) phases[v] = 0.0;
    return;
  }
  if (sum_abs == 0.0) {
    for (int v : island.buses) phases[v] = 0.0;
    for (int j : island.lines) flows[j] = 0.0;
    return;
  }

  auto& factor = factor_for(island);
  for (int a = 0; a < k; ++a) local_[island.buses[a]] = a;

  Eigen::VectorXd rhs(k - 1);
  for (int a = 1; a < k; ++a) rhs[a - 1] = beta[island.buses[a]];
  Eigen::VectorXd theta = factor.ldlt.solve(rhs);

  auto assemble = [&] {
    phases[island.buses[0]] = 0.0;
    for (int a = 1; a < k; ++a) phases[island.buses[a]] = theta[a - 1];
    for (int j : island.lines)
      flows[j] = (phases[grid_->tail(j)] - phases[grid_->head(j)]) * admittance_[j];
  };
  assemble();

  const double tol = kResidualTolerance * std::max(1.0, sum_abs);
  for (int step = 0; step < kRefinementSteps; ++step) {
    Eigen::VectorXd residual = rhs;
    for (int j : island.lines) {
      const int a = local_[grid_->tail(j)];
      const int b = local_[grid_->head(j)];
      if (a > 0) residual[a - 1] -= flows[j];
      if (b > 0) residual[b - 1] += flows[j];
    }
    if (residual.cwiseAbs().maxCoeff() <= tol) break;
    theta += factor.ldlt.solve(residual);
    assemble();
  }
  for (int v : island.buses) local_[v] = -1;
}

void FlowSolver::solve(const IslandPartition& part, std::span<const double> beta,
                       std::span<double> flows, std::span<double> phases) {
  ++generation_;
  for (int i = 0; i < part.count(); ++i)
    solve_island(part.islands[i], i, beta, flows, phases);
  // Keep factorizations of this call and the previous one: a cascade round
  // solves the same topology twice before outages change it.
  for (auto it = cache_.begin(); it != cache_.end();) {
    if (it->second->stamp + 1 < generation_) it = cache_.erase(it);
    else ++it;
  }
}

Grid scale_reactances(const Grid& grid, double target_max) {
  if (grid.line_count() == 0) throw CaseError("scale_reactances: grid has no lines");
  double largest = 0.0;
  for (const auto& l : grid.lines()) largest = std::max(largest, l.reactance);
  if (!(largest > 0.0)) throw CaseError("scale_reactances: reactances must be positive");
  const double factor = target_max / largest;
  std::vector<Line> lines(grid.lines().begin(), grid.lines().end());
  for (auto& l : lines) l.reactance = l.reactance == largest ? target_max : l.reactance * factor;
  return grid.with_lines(std::move(lines));
}

PowerFlowSolution solve_island(const Grid& grid, const Island& island,
                               std::span<const double> beta) {
  PowerFlowSolution sol{std::vector<double>(grid.line_count(), 0.0),
                        std::vector<double>(grid.bus_count(), 0.0)};
  FlowSolver solver(grid);
  solver.solve_island(island, 0, beta, sol.flows, sol.phases);
  return sol;
}

PowerFlowSolution solve_grid(const Grid& grid, std::span<const double> beta) {
  std::vector<char> active(grid.line_count(), 1);
  auto part = islands(grid, active, beta);
  PowerFlowSolution sol{std::vector<double>(grid.line_count(), 0.0),
                        std::vector<double>(grid.bus_count(), 0.0)};
  FlowSolver solver(grid);
  solver.solve(part, beta, sol.flows, sol.phases);
  return sol;
}

}  // namespace casc
