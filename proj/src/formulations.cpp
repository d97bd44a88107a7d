#include "flexdc/formulations.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

namespace flexdc {

std::string_view to_string(Formulation f) {
  switch (f) {
    case Formulation::Ed: return "ed";
    case Formulation::Ncuc: return "ncuc";
    case Formulation::Transportation: return "transportation";
  }
  return "?";
}

std::vector<CostSegment> cost_segments(const Generator& g, int segments) {
  if (g.quadratic_cost == 0.0 || segments <= 1) {
    return {{g.p_max, g.variable_cost + g.quadratic_cost * g.p_max}};
  }
  std::vector<CostSegment> out;
  const double width = g.p_max / segments;
  for (int i = 0; i < segments; ++i) {
    const double a = width * i;
    const double b = width * (i + 1);
    out.push_back({width, g.variable_cost + g.quadratic_cost * (a + b)});
  }
  return out;
}

double generation_cost(const Generator& g, double p_mw, int segments) {
  double cost = 0.0;
  double left = p_mw;
  for (const auto& s : cost_segments(g, segments)) {
    const double used = std::clamp(left, 0.0, s.width_mw);
    cost += s.slope * used;
    left -= used;
  }
  return cost + std::max(left, 0.0) * cost_segments(g, segments).back().slope;
}

namespace {

std::string tg(int t, int g) { return fmt::format("[t={},g={}]", t + 1, g + 1); }

// Output variables, their cost and the nodal balance (11). Costs in $ for a
// one-hour period; p in p.u.
EdProblem add_dispatch(MilpModel& model, const SystemCase& c, const Horizon& h, const BranchBlock& block) {
  EdProblem ed;
  ed.n_periods = h.n_periods;
  ed.n_generators = static_cast<int>(c.generators.size());
  ed.base_mva = c.base_mva;
  const double base = c.base_mva;
  LinExpr objective;
  for (int t = 0; t < h.n_periods; ++t) {
    for (int g = 0; g < ed.n_generators; ++g) {
      const Generator& gen = c.generators[static_cast<std::size_t>(g)];
      const double pmax = gen.in_service ? gen.p_max / base : 0.0;
      const VarRef p = model.add_variable("p" + tg(t, g), 0.0, pmax);
      ed.p.push_back(p);
      const auto segs = cost_segments(gen, c.cost_segments);
      if (segs.size() == 1) {
        objective.add(p, segs.front().slope * base);
        continue;
      }
      LinExpr sum;
      for (std::size_t s = 0; s < segs.size(); ++s) {
        const VarRef piece = model.add_variable(fmt::format("pseg[t={},g={},s={}]", t + 1, g + 1, s + 1), 0.0,
                                                segs[s].width_mw / base);
        sum.add(piece, 1.0);
        objective.add(piece, segs[s].slope * base);
      }
      model.add_constraint(LinExpr(p), Sense::Equal, sum, "pwl" + tg(t, g));
    }
  }
  model.add_to_objective(objective);

  std::vector<std::vector<int>> at_bus(c.buses.size());
  for (int g = 0; g < ed.n_generators; ++g) {
    const int n = c.bus_index(c.generators[static_cast<std::size_t>(g)].bus);
    if (n >= 0) at_bus[static_cast<std::size_t>(n)].push_back(g);
  }
  for (int t = 0; t < h.n_periods; ++t) {
    const double mult = h.load_multipliers[static_cast<std::size_t>(t)];
    for (int n = 0; n < block.n_buses; ++n) {
      LinExpr injection;
      for (int g : at_bus[static_cast<std::size_t>(n)]) injection.add(ed.p_at(t, g), 1.0);
      const double d = mult * c.buses[static_cast<std::size_t>(n)].base_load / base;
      model.add_constraint(LinExpr(block.nex_at(t, n)), Sense::Equal, injection - d,
                           fmt::format("eq11[t={},n={}]", t + 1, n + 1));
    }
  }
  return ed;
}

}  // namespace

EdProblem build_ed(MilpModel& model, const SystemCase& c, const Horizon& h, const BranchBlock& block) {
  return add_dispatch(model, c, h, block);
}

UcProblem build_ncuc(MilpModel& model, const SystemCase& c, const Horizon& h, const BranchBlock& block) {
  UcProblem uc;
  static_cast<EdProblem&>(uc) = add_dispatch(model, c, h, block);
  const double base = c.base_mva;
  const int G = uc.n_generators;
  LinExpr objective;
  for (int t = 0; t < h.n_periods; ++t) {
    for (int g = 0; g < G; ++g) {
      uc.u.push_back(model.add_binary("u" + tg(t, g)));
      uc.y.push_back(model.add_binary("y" + tg(t, g)));
      uc.w.push_back(model.add_binary("w" + tg(t, g)));
    }
  }
  for (int t = 0; t < h.n_periods; ++t) {
    LinExpr reserve;
    for (int g = 0; g < G; ++g) {
      const Generator& gen = c.generators[static_cast<std::size_t>(g)];
      const VarRef p = uc.p_at(t, g), u = uc.u_at(t, g), y = uc.y_at(t, g), w = uc.w_at(t, g);
      if (!gen.in_service) model.set_bounds(u, 0.0, 0.0);
      const std::string idx = tg(t, g);
      model.add_constraint(LinExpr(p), Sense::LessEqual, gen.p_max / base * LinExpr(u), "pmax" + idx);
      if (gen.p_min > 0.0) model.add_constraint(LinExpr(p), Sense::GreaterEqual, gen.p_min / base * LinExpr(u), "pmin" + idx);

      const LinExpr u_prev = t == 0 ? LinExpr(gen.initially_on ? 1.0 : 0.0) : LinExpr(uc.u_at(t - 1, g));
      model.add_constraint(LinExpr(u) - u_prev, Sense::Equal, LinExpr(y) - w, "commit" + idx);
      model.add_constraint(LinExpr(y) + w, Sense::LessEqual, 1.0, "startstop" + idx);
      if (t > 0) {
        const VarRef p_prev = uc.p_at(t - 1, g);
        if (std::isfinite(gen.ramp_up) || std::isfinite(gen.startup_ramp)) {
          const double ru = std::isfinite(gen.ramp_up) ? gen.ramp_up / base : gen.p_max / base;
          const double su = std::isfinite(gen.startup_ramp) ? gen.startup_ramp / base : gen.p_max / base;
          model.add_constraint(LinExpr(p) - p_prev, Sense::LessEqual, ru * LinExpr(uc.u_at(t - 1, g)) + su * LinExpr(y),
                               "rampup" + idx);
        }
        if (std::isfinite(gen.ramp_down) || std::isfinite(gen.shutdown_ramp)) {
          const double rd = std::isfinite(gen.ramp_down) ? gen.ramp_down / base : gen.p_max / base;
          const double sd = std::isfinite(gen.shutdown_ramp) ? gen.shutdown_ramp / base : gen.p_max / base;
          model.add_constraint(LinExpr(p_prev) - p, Sense::LessEqual, rd * LinExpr(u) + sd * LinExpr(w), "rampdown" + idx);
        }
      }
      reserve.add(u, gen.p_max / base);
      reserve.add(p, -1.0);
      objective.add(u, gen.fixed_cost);
      objective.add(y, gen.startup_cost);
      objective.add(w, gen.shutdown_cost);
    }
    const double load = h.load_multipliers[static_cast<std::size_t>(t)] * c.total_load() / base;
    if (h.reserve_fraction > 0.0) {
      model.add_constraint(reserve, Sense::GreaterEqual, h.reserve_fraction * load, fmt::format("reserve[t={}]", t + 1));
    }
  }
  model.add_to_objective(objective);
  return uc;
}

TransportationProblem build_transportation(MilpModel& model, const SystemCase& c, const Horizon& h) {
  TransportationProblem tp;
  tp.block = build_branch_block(model, c, h, {.transportation = true});
  tp.ed = build_ed(model, c, h, tp.block);
  return tp;
}

Problem build_problem(const SystemCase& c, const Horizon& h, Formulation kind, const BlockOptions& options) {
  Problem pr;
  pr.kind = kind;
  BlockOptions opt = options;
  opt.transportation = kind == Formulation::Transportation;
  pr.block = build_branch_block(pr.model, c, h, opt);
  if (kind == Formulation::Ncuc) {
    pr.dispatch = build_ncuc(pr.model, c, h, pr.block);
  } else {
    static_cast<EdProblem&>(pr.dispatch) = build_ed(pr.model, c, h, pr.block);
  }
  return pr;
}

}  // namespace flexdc
