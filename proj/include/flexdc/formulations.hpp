#pragma once

#include <string_view>
#include <vector>

#include "flexdc/branch_model.hpp"
#include "flexdc/milp.hpp"
#include "flexdc/network.hpp"

namespace flexdc {

enum class Formulation : std::uint8_t { Ed, Ncuc, Transportation };

std::string_view to_string(Formulation f);

/// One convex piece of a linearized cost curve.
struct CostSegment {
  double width_mw = 0.0;
  double slope = 0.0;  // $/MWh
};

/// Pieces of equal width over [0, p_max]. One piece takes the derivative at
/// p_max / 2; several take secant slopes. Linear costs give one piece.
std::vector<CostSegment> cost_segments(const Generator& g, int segments);
/// Cost in $/h of producing p_mw under the same linearization.
double generation_cost(const Generator& g, double p_mw, int segments);

struct EdProblem {
  int n_periods = 0;
  int n_generators = 0;
  double base_mva = 100.0;
  std::vector<VarRef> p;  // t * N_G + g, p.u.

  VarRef p_at(int t, int g) const { return p[static_cast<std::size_t>(t * n_generators + g)]; }
};

struct UcProblem : EdProblem {
  std::vector<VarRef> u, y, w;  // t * N_G + g

  VarRef u_at(int t, int g) const { return u[static_cast<std::size_t>(t * n_generators + g)]; }
  VarRef y_at(int t, int g) const { return y[static_cast<std::size_t>(t * n_generators + g)]; }
  VarRef w_at(int t, int g) const { return w[static_cast<std::size_t>(t * n_generators + g)]; }
};

/// min sum c p  s.t.  0 <= p <= p_max,  nex = M_g p - d.
EdProblem build_ed(MilpModel& model, const SystemCase& c, const Horizon& h, const BranchBlock& block);

/// ED plus commitment u/y/w, ramping (relaxed into period 1), spinning
/// reserve and fixed/startup/shutdown costs. u(0) is `initially_on`.
UcProblem build_ncuc(MilpModel& model, const SystemCase& c, const Horizon& h, const BranchBlock& block);

struct TransportationProblem {
  BranchBlock block;
  EdProblem ed;
};

/// ED over a block without the angle equations.
TransportationProblem build_transportation(MilpModel& model, const SystemCase& c, const Horizon& h);

/// Model, block and dispatch variables for one formulation. For ED and
/// transportation the u/y/w vectors stay empty.
struct Problem {
  Formulation kind = Formulation::Ed;
  MilpModel model;
  BranchBlock block;
  UcProblem dispatch;
};

Problem build_problem(const SystemCase& c, const Horizon& h, Formulation kind, const BlockOptions& options = {});

}  // namespace flexdc
