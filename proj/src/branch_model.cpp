#include "flexdc/branch_model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <fmt/format.h>

namespace flexdc {

double branch_big_m(const BranchParams& b, double base_mva, double angle_spread) {
  const bool can_open = b.switchable || !b.in_service;
  const double delta_eff = can_open ? std::max(b.delta_max, angle_spread) : b.delta_max;
  const double phi = std::max(std::abs(b.phi_min), std::abs(b.phi_max));
  double m = std::max(b.b_max, b.b_min) * (delta_eff + phi);
  if (std::isfinite(b.p_c)) m = std::max(m, b.p_c / base_mva);
  if (std::isfinite(b.f_max)) m = std::max(m, b.f_max / base_mva);
  return 1.01 * m;
}

BigM compute_big_m(const SystemCase& c, const Horizon& h) {
  BigM m;
  m.m_angle = c.angle_spread();
  m.m_flow.resize(h.n_periods, static_cast<Eigen::Index>(c.branches.size()));
  for (std::size_t k = 0; k < c.branches.size(); ++k) {
    m.m_flow.col(static_cast<Eigen::Index>(k)).setConstant(branch_big_m(c.branches[k], c.base_mva, m.m_angle));
  }
  return m;
}

int BranchBlock::num_switch_binaries() const {
  return static_cast<int>(std::ranges::count_if(branch, [](const BranchVars& v) { return v.tra.is_var(); }));
}

namespace {

std::string tk(int t, int k) { return fmt::format("[t={},k={}]", t + 1, k + 1); }
std::string tn(int t, int n) { return fmt::format("[t={},n={}]", t + 1, n + 1); }

class BlockBuilder {
 public:
  BlockBuilder(MilpModel& model, BranchBlock& block, const BlockOptions& opt) : m_(model), b_(block), opt_(opt) {}

  int row(int eq, const LinExpr& lhs, Sense s, const LinExpr& rhs, std::string name) {
    const int r = m_.add_constraint(lhs, s, rhs, std::move(name));
    b_.rows[static_cast<std::size_t>(eq)].push_back(r);
    return r;
  }

  void branch(int t, int k) {
    const BranchParams& p = b_.params[static_cast<std::size_t>(k)];
    BranchVars& v = b_.branch[static_cast<std::size_t>(t * b_.n_branches + k)];
    const double base = b_.base_mva;
    const double M = b_.big_m.m_flow(t, k) * opt_.big_m_scale;
    const double pc = p.p_c / base;
    const double fmax = p.f_max / base;
    const std::string idx = tk(t, k);

    if (!p.in_service) {
      v.tra.constant = 1.0;
    } else if (p.switchable && !b_.transportation) {
      v.tra.var = m_.add_binary("tra" + idx);
    }
    const LinExpr tra = v.tra.expr();
    const LinExpr open_complement = 1.0 - tra;  // (1 - tra)
    const bool has_ptop = p.switchable || !p.in_service;

    // f, p_br, p_top
    v.p_br.var = m_.add_variable("pbr" + idx, -M, M);
    if (has_ptop) {
      v.f.var = m_.add_variable("f" + idx, -M, M);
      v.p_top.var = m_.add_variable("ptop" + idx, -M, M);
      row(2, LinExpr(v.f.var) - v.p_br.var + v.p_top.var, Sense::Equal, 0.0, "eq2" + idx);
    } else {
      v.f = v.p_br;
    }

    // (7) capacity, or f = 0 when open
    if (v.tra.is_var()) {
      const double cap = std::isfinite(fmax) ? fmax : M;
      row(7, LinExpr(v.f.var), Sense::LessEqual, cap * open_complement, "eq7up" + idx);
      row(7, LinExpr(v.f.var), Sense::GreaterEqual, -cap * open_complement, "eq7lo" + idx);
      // (8) p_top only moves when the branch is open
      row(8, LinExpr(v.p_top.var), Sense::LessEqual, M * tra, "eq8up" + idx);
      row(8, LinExpr(v.p_top.var), Sense::GreaterEqual, -M * tra, "eq8lo" + idx);
    } else if (v.tra.constant == 1.0) {
      m_.set_bounds(v.f.var, 0.0, 0.0);
    } else {
      m_.tighten_bounds(v.f.var, -fmax, fmax);
      if (has_ptop) m_.set_bounds(v.p_top.var, 0.0, 0.0);
    }
    if (b_.transportation) {
      // Without (3)-(4) a susceptance-free branch still keeps its p_c limit.
      if (p.b_max == 0.0 && v.tra.constant != 1.0) m_.tighten_bounds(v.p_br.var, -pc, pc);
      return;
    }

    // (6) shift angle
    if (p.phi_min < p.phi_max && v.tra.constant != 1.0) {
      v.phi.var = m_.add_variable("phi" + idx, p.phi_min, p.phi_max);
      if (v.tra.is_var()) {
        if (p.phi_max != 0.0) row(6, LinExpr(v.phi.var), Sense::LessEqual, p.phi_max * open_complement, "eq6up" + idx);
        if (p.phi_min != 0.0) row(6, LinExpr(v.phi.var), Sense::GreaterEqual, p.phi_min * open_complement, "eq6lo" + idx);
      }
    } else if (v.tra.constant != 1.0) {
      v.phi.constant = p.phi_min;  // degenerate range {phi_min}
    }

    const int nf = b_.from[static_cast<std::size_t>(k)];
    const int nt = b_.to[static_cast<std::size_t>(k)];
    const LinExpr dtheta = LinExpr(b_.delta_at(t, nf)) - b_.delta_at(t, nt);
    const LinExpr theta = dtheta + v.phi.expr();
    const LinExpr pbr(v.p_br.var);
    const LinExpr cap_c = pc * open_complement;  // (1 - tra) o p_c

    // (3)-(4)
    if (p.b_min < p.b_max) {
      v.z.var = m_.add_binary("z" + idx);
      const LinExpr z(v.z.var);
      row(3, pbr, Sense::GreaterEqual, -M * z - cap_c + p.b_min * theta, "eq3lo" + idx);
      row(3, pbr, Sense::LessEqual, M * z + cap_c + p.b_max * theta, "eq3up" + idx);
      row(4, pbr, Sense::GreaterEqual, -M * (1.0 - z) - cap_c + p.b_max * theta, "eq4lo" + idx);
      row(4, pbr, Sense::LessEqual, M * (1.0 - z) + cap_c + p.b_min * theta, "eq4up" + idx);
    } else if (pc == 0.0) {
      // Fixed B: both bounds of (3) coincide, (4) repeats them.
      row(3, pbr, Sense::Equal, p.b_max * theta, "eq3" + idx);
    } else if (p.b_max == 0.0 && !v.tra.is_var()) {
      const double cap = pc * (1.0 - v.tra.constant);
      m_.tighten_bounds(v.p_br.var, -cap, cap);
    } else {
      row(3, pbr, Sense::GreaterEqual, -cap_c + p.b_min * theta, "eq3lo" + idx);
      row(3, pbr, Sense::LessEqual, cap_c + p.b_max * theta, "eq3up" + idx);
    }

    // (5) angle limit; an open branch may reach the network angle spread.
    const double relax = std::max(b_.big_m.m_angle * opt_.big_m_scale - p.delta_max, 0.0);
    const LinExpr slack = relax * tra;
    if (p.delta_max == 0.0 && !v.tra.is_var() && v.tra.constant == 0.0) {
      row(5, dtheta, Sense::Equal, 0.0, "eq5" + idx);
    } else {
      row(5, dtheta, Sense::GreaterEqual, -p.delta_max - slack, "eq5lo" + idx);
      row(5, dtheta, Sense::LessEqual, p.delta_max + slack, "eq5up" + idx);
    }
  }

 private:
  MilpModel& m_;
  BranchBlock& b_;
  const BlockOptions& opt_;
};

}  // namespace

BranchBlock build_branch_block(MilpModel& model, const SystemCase& c, const Horizon& h, const BlockOptions& options) {
  BranchBlock b;
  b.n_periods = h.n_periods;
  b.n_branches = static_cast<int>(c.branches.size());
  b.n_buses = static_cast<int>(c.buses.size());
  b.base_mva = c.base_mva;
  b.transportation = options.transportation;
  b.params = c.branches;
  for (const auto& br : c.branches) {
    b.from.push_back(c.bus_index(br.from_bus));
    b.to.push_back(c.bus_index(br.to_bus));
  }
  b.big_m = compute_big_m(c, h);
  b.branch.resize(static_cast<std::size_t>(b.n_periods * b.n_branches));

  const int ref = c.reference_index();
  for (int t = 0; t < b.n_periods; ++t) {
    for (int n = 0; n < b.n_buses; ++n) {
      b.nex.push_back(model.add_variable("nex" + tn(t, n), -kInf, kInf));
      if (!options.transportation) {
        const double bound = n == ref ? 0.0 : kInf;
        b.delta.push_back(model.add_variable("delta" + tn(t, n), -bound, bound));
      }
    }
  }

  BlockBuilder builder(model, b, options);
  for (int t = 0; t < b.n_periods; ++t) {
    for (int k = 0; k < b.n_branches; ++k) builder.branch(t, k);
  }

  // (1) nex = f * Cft
  const Eigen::SparseMatrix<double> cft = c.cft();  // column-major: column n lists the branches at bus n
  for (int t = 0; t < b.n_periods; ++t) {
    for (int n = 0; n < b.n_buses; ++n) {
      LinExpr sum;
      for (Eigen::SparseMatrix<double>::InnerIterator it(cft, n); it; ++it) {
        sum.add(b.at(t, static_cast<int>(it.row())).f.var, it.value());
      }
      builder.row(1, LinExpr(b.nex_at(t, n)), Sense::Equal, sum, "eq1" + tn(t, n));
    }
  }
  return b;
}

std::vector<BranchState> extract_branch_state(const BranchBlock& block, const SolveResult& result) {
  std::vector<BranchState> out;
  out.reserve(block.branch.size());
  auto integral = [](const Slot& s, const SolveResult& r, const char* what, int t, int k) {
    const double v = s.value(r);
    if (std::abs(v - std::round(v)) > 1e-4) {
      throw NonIntegralBinary(fmt::format("{}{} = {} is not integral", what, tk(t, k), v));
    }
    return std::round(v);
  };
  for (int t = 0; t < block.n_periods; ++t) {
    for (int k = 0; k < block.n_branches; ++k) {
      const BranchVars& v = block.at(t, k);
      BranchState s;
      s.is_open = integral(v.tra, result, "tra", t, k) == 1.0;
      integral(v.z, result, "z", t, k);
      s.flow_mw = v.f.value(result) * block.base_mva;
      const double phi = v.phi.value(result);
      s.shift_deg = phi * 180.0 / std::numbers::pi;
      if (!block.transportation) {
        const double dtheta = result.value(block.delta_at(t, block.from[static_cast<std::size_t>(k)])) -
                              result.value(block.delta_at(t, block.to[static_cast<std::size_t>(k)]));
        const double theta = dtheta + phi;
        if (std::abs(theta) > 1e-8) s.b_effective = v.p_br.value(result) / theta;
      }
      out.push_back(s);
    }
  }
  return out;
}

}  // namespace flexdc
