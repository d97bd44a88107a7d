#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "flexdc/milp.hpp"

namespace flexdc {

enum class SolveStatus : std::uint8_t {
  Optimal,
  Infeasible,
  Unbounded,
  IterationLimit,
  NodeLimit,
  TimeLimit,
};

std::string_view to_string(SolveStatus s);

struct SolveOptions {
  double feasibility_tol = 1e-7;
  double optimality_tol = 1e-9;
  double integrality_tol = 1e-6;
  double gap_tol = 1e-6;  // relative
  long iteration_limit = 50'000;  // per LP
  long node_limit = 5'000'000;
  double time_limit = 1e30;  // seconds
  /// Run a fractional-diving heuristic every `dive_interval` nodes (0 = off).
  int dive_interval = 64;
  std::function<void(std::string_view)> log;
};

struct SolveStats {
  long iterations = 0;
  long nodes = 0;
  double wall_seconds = 0.0;
  double max_row_violation = 0.0;
};

struct Incumbent {
  double objective = 0.0;
  long node = 0;
};

struct SolveResult {
  SolveStatus status = SolveStatus::Infeasible;
  double objective = 0.0;
  double best_bound = 0.0;
  double gap = 0.0;
  std::vector<double> values;  // indexed by VarRef::index
  /// LP only: row multipliers and structural reduced costs of the final basis.
  std::vector<double> row_duals;
  std::vector<double> reduced_costs;
  std::vector<Incumbent> incumbents;
  SolveStats stats;

  bool has_solution() const { return !values.empty(); }
  double value(VarRef v) const { return values.at(static_cast<std::size_t>(v.index)); }
};

/// Solves the continuous relaxation (binaries relaxed to [0, 1]).
SolveResult solve_lp(const MilpModel& model, const SolveOptions& options = {});

/// Best-bound branch and bound over the model's binary variables.
SolveResult solve_milp(const MilpModel& model, const SolveOptions& options = {});

}  // namespace flexdc
