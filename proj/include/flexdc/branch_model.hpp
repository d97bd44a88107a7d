#pragma once

#include <array>
#include <optional>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>

#include "flexdc/milp.hpp"
#include "flexdc/network.hpp"
#include "flexdc/solver.hpp"

namespace flexdc {

// Constraint families of the branch model, numbered as in the row names
// "eqN[...]". With theta = dtheta + phi, per period t and branch k:
//   1  nex(n) = sum of f over branches leaving n minus those entering n
//   2  f = p_br - p_top
//   3  b_min theta - M z - p_c (1 - tra) <= p_br <= b_max theta + M z + p_c (1 - tra)
//   4  b_max theta - M (1 - z) - p_c (1 - tra) <= p_br <= b_min theta + M (1 - z) + p_c (1 - tra)
//   5  |dtheta| <= delta_max + M_angle tra
//   6  phi_min (1 - tra) <= phi <= phi_max (1 - tra)
//   7  |f| <= f_max (1 - tra)
//   8  |p_top| <= M tra
// tra = 1 opens the branch; z picks which of 3/4 is the binding pair.

/// A block quantity: either a model variable or the constant it was
/// substituted by (tra of a fixed branch, z of a fixed-B branch, ...).
struct Slot {
  VarRef var;
  double constant = 0.0;

  bool is_var() const { return var.valid(); }
  LinExpr expr() const { return is_var() ? LinExpr(var) : LinExpr(constant); }
  double value(const SolveResult& r) const { return is_var() ? r.value(var) : constant; }
};

struct BranchVars {
  Slot f, p_br, p_top, phi, tra, z;  // f and p_br share a variable when p_top is absent
};

/// Big-M values in p.u.: m_flow per (t, k) and the angle-spread bound that
/// relaxes the angle limit of an open branch.
struct BigM {
  Eigen::MatrixXd m_flow;  // N_T x N_K
  double m_angle = 0.0;
};

/// 1.01 * max(f_max, p_c, b_max * (delta_eff + max|phi|)) in p.u., where
/// delta_eff is the angle spread for branches that can open. Infinite
/// capacities are left out.
double branch_big_m(const BranchParams& b, double base_mva, double angle_spread);
BigM compute_big_m(const SystemCase& c, const Horizon& h);

struct BlockOptions {
  /// Drop families 3-5: flows limited by capacity and KCL only.
  bool transportation = false;
  double big_m_scale = 1.0;
};

/// Row indices per constraint family 1-8; entry 0 unused.
using EquationRows = std::array<std::vector<int>, 9>;

struct BranchBlock {
  int n_periods = 0;
  int n_branches = 0;
  int n_buses = 0;
  double base_mva = 100.0;
  bool transportation = false;
  std::vector<BranchParams> params;
  std::vector<int> from, to;  // bus indices
  std::vector<BranchVars> branch;  // t * N_K + k
  std::vector<VarRef> delta;  // t * N_N + n; empty in transportation mode
  std::vector<VarRef> nex;  // t * N_N + n
  BigM big_m;
  EquationRows rows;

  const BranchVars& at(int t, int k) const { return branch[static_cast<std::size_t>(t * n_branches + k)]; }
  VarRef delta_at(int t, int n) const { return delta[static_cast<std::size_t>(t * n_buses + n)]; }
  VarRef nex_at(int t, int n) const { return nex[static_cast<std::size_t>(t * n_buses + n)]; }
  int num_switch_binaries() const;
};

/// Emits families 1-8 for every period and branch. Per-unit throughout;
/// the reference angle is fixed to 0. Names: "pbr[t=1,k=2]", "eq3lo[t=1,k=2]",
/// "delta[t=1,n=4]", all indices 1-based.
BranchBlock build_branch_block(MilpModel& model, const SystemCase& c, const Horizon& h,
                               const BlockOptions& options = {});

class NonIntegralBinary : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct BranchState {
  double flow_mw = 0.0;
  double shift_deg = 0.0;
  std::optional<double> b_effective;  // p.u.; empty when |dtheta + phi| <= 1e-8
  bool is_open = false;
};

/// Per (t, k), t-major. Throws NonIntegralBinary when a tra or z value sits
/// more than 1e-4 from an integer.
std::vector<BranchState> extract_branch_state(const BranchBlock& block, const SolveResult& result);

}  // namespace flexdc
