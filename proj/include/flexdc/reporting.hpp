#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "flexdc/branch_model.hpp"
#include "flexdc/formulations.hpp"
#include "flexdc/solver.hpp"

namespace flexdc {

/// 64-bit FNV-1a of the bytes, as 16 hex digits.
std::string fingerprint(std::string_view content);

struct DispatchSolution {
  Formulation formulation = Formulation::Ed;
  SolveStatus status = SolveStatus::Optimal;
  int n_periods = 0;
  std::vector<std::string> generator_labels;  // "G1", "G2", ...
  std::vector<std::string> branch_labels;  // "1-2"; parallels get "#2", "#3"
  std::vector<double> outputs_mw;  // t * N_G + g
  std::vector<int> commitment;  // t * N_G + g; empty unless NCUC
  std::vector<BranchState> branches;  // t * N_K + k
  double objective = 0.0;  // $
  double gap = 0.0;
  SolveStats stats;
  std::string case_fingerprint;
  std::string overlay_fingerprint;
  // Quadratic costs are replaced by this many linear pieces per unit.
  int cost_segments = 1;
  int linearized_generators = 0;

  int n_generators() const { return static_cast<int>(generator_labels.size()); }
  int n_branches() const { return static_cast<int>(branch_labels.size()); }
  double output_mw(int t, int g) const { return outputs_mw[static_cast<std::size_t>(t * n_generators() + g)]; }
  const BranchState& branch(int t, int k) const { return branches[static_cast<std::size_t>(t * n_branches() + k)]; }
};

std::vector<std::string> branch_labels(const SystemCase& c);

/// Collects outputs, commitments and branch states of a solved problem.
DispatchSolution make_solution(const Problem& problem, const SystemCase& c, const SolveResult& result);

/// Dispatch cost recomputed from outputs and commitment states alone.
double recompute_cost(const DispatchSolution& sol, const SystemCase& c);

enum class RenderFormat : std::uint8_t { Csv, Json };

/// CSV: the branch flow table, "period,<branch labels>", one row per period,
/// OFF for open branches. Json: everything in DispatchSolution.
std::string render_solution(const DispatchSolution& sol, RenderFormat format);
/// CSV of generator outputs, "period,<generator labels>".
std::string render_generation(const DispatchSolution& sol);

// ---------------------------------------------------------------------------
// Reference tables

class DimensionMismatch : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class CellKind : std::uint8_t { Exact, OffFlag, OrderingOnly };

struct ReferenceCell {
  int row = 0;  // period index, 0-based
  std::string column;
  CellKind kind = CellKind::Exact;
  double value = 0.0;  // Exact cells
  bool off = false;  // OffFlag cells
};

/// Checks applied to a table: every cell, only the open/closed pattern, or
/// only the per-period sums of the cells.
enum class CheckMode : std::uint8_t { Cells, OffPattern, RowTotals };

struct OrderingLink {
  std::string member;
  bool strict = false;  // strict decrease to the next member
};

struct ReferenceTable {
  enum class Subject : std::uint8_t { Flows, Generation, Ordering } subject = Subject::Flows;
  CheckMode mode = CheckMode::Cells;
  double tolerance = 0.0;
  int n_rows = 0;
  std::vector<std::string> columns;
  std::vector<ReferenceCell> cells;
  // Ordering tables: costs must decrease along the chain.
  std::vector<OrderingLink> chain;
  std::map<std::string, std::string> member_overlays;  // member -> overlay path
  std::string formulation;
};

/// Reference files are CSV with "# key: value" directives (subject, check,
/// tolerance) or, for orderings, directive lines only:
///   # subject: ordering
///   # chain: a > b >= c
///   # member a: case_a.toml
ReferenceTable parse_reference(std::string_view text);

struct CellReport {
  std::string row;
  std::string column;
  bool pass = true;
  std::string detail;
};

struct VerifyReport {
  std::vector<CellReport> cells;
  int mismatches = 0;
  bool pass() const { return mismatches == 0; }
  std::string summary() const;
};

/// Compares `sol` against `ref`. Ordering tables read the chain costs from
/// `chain_costs` (member -> $). Throws DimensionMismatch when the table's
/// shape does not fit the solution.
VerifyReport verify(const DispatchSolution& sol, const ReferenceTable& ref,
                    const std::map<std::string, double>& chain_costs = {});

/// Re-solves with the cost held at its optimum (within the gap) to pick, in
/// turn, the fewest open branches and then the least total |phi|. Returns the
/// last stage's result; its objective is the original cost.
SolveResult solve_tie_broken(const Problem& problem, const SolveResult& optimum, const SolveOptions& options = {});

}  // namespace flexdc
