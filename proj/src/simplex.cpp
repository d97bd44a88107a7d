#include "simplex.hpp"

#include <algorithm>
#include <cmath>

namespace flexdc::detail {
namespace {

constexpr int kRefactorInterval = 64;
constexpr double kPivotTol = 1e-9;
constexpr double kDropTol = 1e-14;
constexpr int kDegenerateStreakForBland = 50;

bool finite(double v) { return std::isfinite(v); }

}  // namespace

BoundedSimplex::BoundedSimplex(const MilpModel& model, const SolveOptions& options)
    : n_(model.num_variables()),
      m_(model.num_constraints()),
      ptol_(options.feasibility_tol),
      dtol_(options.optimality_tol) {
  const std::size_t total = static_cast<std::size_t>(n_ + m_);
  cost_.assign(total, 0.0);
  lo_.assign(total, 0.0);
  up_.assign(total, 0.0);
  x_.assign(total, 0.0);

  std::vector<Eigen::Triplet<double>> triplets;
  const auto rows = model.constraints();
  for (int i = 0; i < m_; ++i) {
    const auto& row = rows[static_cast<std::size_t>(i)];
    for (const auto& [v, c] : row.terms) triplets.emplace_back(i, v.index, c);
    const std::size_t s = static_cast<std::size_t>(n_ + i);
    switch (row.sense) {
      case Sense::LessEqual: lo_[s] = -kInf; up_[s] = row.rhs; break;
      case Sense::GreaterEqual: lo_[s] = row.rhs; up_[s] = kInf; break;
      case Sense::Equal: lo_[s] = row.rhs; up_[s] = row.rhs; break;
    }
  }
  a_.resize(m_, n_);
  a_.setFromTriplets(triplets.begin(), triplets.end());
  a_.makeCompressed();

  const auto vars = model.variables();
  for (int j = 0; j < n_; ++j) {
    lo_[static_cast<std::size_t>(j)] = vars[static_cast<std::size_t>(j)].lower;
    up_[static_cast<std::size_t>(j)] = vars[static_cast<std::size_t>(j)].upper;
  }
  double cmax = 0.0;
  for (const auto& [v, c] : model.objective()) cmax = std::max(cmax, std::abs(c));
  cost_scale_ = cmax > 0.0 ? cmax : 1.0;
  for (const auto& [v, c] : model.objective()) {
    cost_[static_cast<std::size_t>(v.index)] = c / cost_scale_;
  }
  reset_to_slack_basis();
}

void BoundedSimplex::reset_to_slack_basis() {
  const std::size_t total = static_cast<std::size_t>(n_ + m_);
  status_.assign(total, BasisStatus::AtLower);
  head_.resize(static_cast<std::size_t>(m_));
  for (int i = 0; i < m_; ++i) {
    status_[static_cast<std::size_t>(n_ + i)] = BasisStatus::Basic;
    head_[static_cast<std::size_t>(i)] = n_ + i;
  }
  factor_valid_ = false;
}

void BoundedSimplex::set_bounds(int j, double lower, double upper) {
  lo_[static_cast<std::size_t>(j)] = lower;
  up_[static_cast<std::size_t>(j)] = upper;
}

void BoundedSimplex::load_basis(const Basis& basis) {
  status_ = basis;
  head_.clear();
  for (int j = 0; j < n_ + m_; ++j) {
    if (status_[static_cast<std::size_t>(j)] == BasisStatus::Basic) head_.push_back(j);
  }
  if (static_cast<int>(head_.size()) != m_) reset_to_slack_basis();
  factor_valid_ = false;
}

// Puts every nonbasic column on a bound it actually has.
void BoundedSimplex::normalize_nonbasic() {
  for (std::size_t j = 0; j < status_.size(); ++j) {
    auto& st = status_[j];
    if (st == BasisStatus::Basic) continue;
    const bool has_lo = finite(lo_[j]);
    const bool has_up = finite(up_[j]);
    if (st == BasisStatus::AtUpper && !has_up) st = has_lo ? BasisStatus::AtLower : BasisStatus::Free;
    if (st == BasisStatus::AtLower && !has_lo) st = has_up ? BasisStatus::AtUpper : BasisStatus::Free;
    if (st == BasisStatus::Free && (has_lo || has_up)) st = has_lo ? BasisStatus::AtLower : BasisStatus::AtUpper;
    switch (st) {
      case BasisStatus::AtLower: x_[j] = lo_[j]; break;
      case BasisStatus::AtUpper: x_[j] = up_[j]; break;
      case BasisStatus::Free: x_[j] = 0.0; break;
      case BasisStatus::Basic: break;
    }
  }
}

bool BoundedSimplex::refactor() {
  etas_.clear();
  if (m_ == 0) return factor_valid_ = true;
  Eigen::SparseMatrix<double> basis(m_, m_);
  std::vector<Eigen::Triplet<double>> triplets;
  for (int r = 0; r < m_; ++r) {
    const int j = head_[static_cast<std::size_t>(r)];
    if (j < n_) {
      for (Eigen::SparseMatrix<double>::InnerIterator it(a_, j); it; ++it) {
        triplets.emplace_back(static_cast<int>(it.row()), r, it.value());
      }
    } else {
      triplets.emplace_back(j - n_, r, -1.0);
    }
  }
  basis.setFromTriplets(triplets.begin(), triplets.end());
  basis.makeCompressed();
  lu_.analyzePattern(basis);
  lu_.factorize(basis);
  factor_valid_ = lu_.info() == Eigen::Success;
  return factor_valid_;
}

void BoundedSimplex::ftran(Eigen::VectorXd& v) const {
  if (m_ == 0) return;
  v = lu_.solve(v).eval();
  for (const auto& eta : etas_) {
    const double vr = v[eta.row];
    if (vr == 0.0) continue;
    v[eta.row] = eta.pivot_inverse * vr;
    for (const auto& [i, e] : eta.entries) v[i] += e * vr;
  }
}

void BoundedSimplex::btran(Eigen::VectorXd& v) const {
  if (m_ == 0) return;
  for (auto it = etas_.rbegin(); it != etas_.rend(); ++it) {
    double s = it->pivot_inverse * v[it->row];
    for (const auto& [i, e] : it->entries) s += e * v[i];
    v[it->row] = s;
  }
  v = lu_.transpose().solve(v).eval();
}

void BoundedSimplex::load_column(int j, Eigen::VectorXd& out) const {
  out.setZero(m_);
  if (j < n_) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(a_, j); it; ++it) out[it.row()] = it.value();
  } else {
    out[j - n_] = -1.0;
  }
}

double BoundedSimplex::column_dot(int j, const Eigen::VectorXd& y) const {
  if (j >= n_) return -y[j - n_];
  double s = 0.0;
  for (Eigen::SparseMatrix<double>::InnerIterator it(a_, j); it; ++it) s += it.value() * y[it.row()];
  return s;
}

void BoundedSimplex::compute_primal() {
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m_);
  for (int j = 0; j < n_ + m_; ++j) {
    const std::size_t ju = static_cast<std::size_t>(j);
    if (status_[ju] == BasisStatus::Basic || x_[ju] == 0.0) continue;
    if (j < n_) {
      for (Eigen::SparseMatrix<double>::InnerIterator it(a_, j); it; ++it) {
        rhs[it.row()] += it.value() * x_[ju];
      }
    } else {
      rhs[j - n_] -= x_[ju];
    }
  }
  ftran(rhs);
  for (int r = 0; r < m_; ++r) x_[static_cast<std::size_t>(head_[static_cast<std::size_t>(r)])] = -rhs[r];
}

void BoundedSimplex::compute_duals(Eigen::VectorXd& y) const {
  y.resize(m_);
  for (int r = 0; r < m_; ++r) y[r] = cost_[static_cast<std::size_t>(head_[static_cast<std::size_t>(r)])];
  btran(y);
}

double BoundedSimplex::primal_infeasibility() const {
  double worst = 0.0;
  for (int r = 0; r < m_; ++r) {
    const auto j = static_cast<std::size_t>(head_[static_cast<std::size_t>(r)]);
    worst = std::max({worst, lo_[j] - x_[j], x_[j] - up_[j]});
  }
  return worst;
}

void BoundedSimplex::pivot(int r, int q, const Eigen::VectorXd& w, bool leaving_at_lower) {
  const auto p = static_cast<std::size_t>(head_[static_cast<std::size_t>(r)]);
  x_[p] = leaving_at_lower ? lo_[p] : up_[p];
  status_[p] = leaving_at_lower ? BasisStatus::AtLower : BasisStatus::AtUpper;
  if (!finite(x_[p])) {
    x_[p] = 0.0;
    status_[p] = BasisStatus::Free;
  }
  head_[static_cast<std::size_t>(r)] = q;
  status_[static_cast<std::size_t>(q)] = BasisStatus::Basic;

  Eta eta;
  eta.row = r;
  eta.pivot_inverse = 1.0 / w[r];
  for (int i = 0; i < m_; ++i) {
    if (i != r && std::abs(w[i]) > kDropTol) eta.entries.emplace_back(i, -w[i] * eta.pivot_inverse);
  }
  etas_.push_back(std::move(eta));
  ++iterations_;
}

bool BoundedSimplex::make_dual_feasible() {
  Eigen::VectorXd y;
  compute_duals(y);
  bool flipped = false;
  for (int j = 0; j < n_ + m_; ++j) {
    const std::size_t ju = static_cast<std::size_t>(j);
    const auto st = status_[ju];
    if (st == BasisStatus::Basic || lo_[ju] == up_[ju]) continue;
    const double d = cost_[ju] - column_dot(j, y);
    if (st == BasisStatus::AtLower && d < -dtol_) {
      if (!finite(up_[ju])) return false;
      status_[ju] = BasisStatus::AtUpper;
      x_[ju] = up_[ju];
      flipped = true;
    } else if (st == BasisStatus::AtUpper && d > dtol_) {
      if (!finite(lo_[ju])) return false;
      status_[ju] = BasisStatus::AtLower;
      x_[ju] = lo_[ju];
      flipped = true;
    } else if (st == BasisStatus::Free && std::abs(d) > dtol_) {
      return false;
    }
  }
  if (flipped) compute_primal();
  return true;
}

LpOutcome BoundedSimplex::primal_loop() {
  Eigen::VectorXd cb(m_), y, w;
  int degenerate = 0;
  bool bland = false;
  while (true) {
    if (out_of_iterations()) return LpOutcome::IterationLimit;
    if (etas_.size() >= static_cast<std::size_t>(kRefactorInterval)) {
      if (!refactor()) {
        reset_to_slack_basis();
        refactor();
      }
      normalize_nonbasic();
      compute_primal();
    }

    bool phase1 = false;
    for (int r = 0; r < m_ && !phase1; ++r) {
      const auto j = static_cast<std::size_t>(head_[static_cast<std::size_t>(r)]);
      phase1 = x_[j] < lo_[j] - ptol_ || x_[j] > up_[j] + ptol_;
    }
    for (int r = 0; r < m_; ++r) {
      const auto j = static_cast<std::size_t>(head_[static_cast<std::size_t>(r)]);
      if (!phase1) {
        cb[r] = cost_[j];
      } else {
        cb[r] = x_[j] < lo_[j] - ptol_ ? -1.0 : (x_[j] > up_[j] + ptol_ ? 1.0 : 0.0);
      }
    }
    y = cb;
    btran(y);

    int q = -1;
    double dq = 0.0;
    double best = 0.0;
    for (int j = 0; j < n_ + m_; ++j) {
      const std::size_t ju = static_cast<std::size_t>(j);
      const auto st = status_[ju];
      if (st == BasisStatus::Basic || lo_[ju] == up_[ju]) continue;
      const double d = (phase1 ? 0.0 : cost_[ju]) - column_dot(j, y);
      const bool inc = (st == BasisStatus::AtLower || st == BasisStatus::Free) && d < -dtol_;
      const bool dec = (st == BasisStatus::AtUpper || st == BasisStatus::Free) && d > dtol_;
      if (!inc && !dec) continue;
      if (bland) {
        q = j;
        dq = d;
        break;
      }
      if (std::abs(d) > best) {
        best = std::abs(d);
        q = j;
        dq = d;
      }
    }
    if (q < 0) return phase1 ? LpOutcome::Infeasible : LpOutcome::Optimal;

    const double dir = dq < 0.0 ? 1.0 : -1.0;
    load_column(q, w);
    ftran(w);

    // Harris two-pass ratio test; basic i moves at rate g_i = -dir * w_i.
    auto limit = [&](int r, bool relaxed, bool& to_lower) -> double {
      const double g = -dir * w[r];
      if (std::abs(g) < kPivotTol) return kInf;
      const auto j = static_cast<std::size_t>(head_[static_cast<std::size_t>(r)]);
      const double xv = x_[j];
      const double tol = relaxed ? ptol_ : 0.0;
      if (phase1 && xv < lo_[j] - ptol_) {
        to_lower = true;
        return g > 0.0 ? (lo_[j] - xv) / g : kInf;
      }
      if (phase1 && xv > up_[j] + ptol_) {
        to_lower = false;
        return g < 0.0 ? (xv - up_[j]) / -g : kInf;
      }
      if (g < 0.0 && finite(lo_[j])) {
        to_lower = true;
        return std::max(0.0, xv - (lo_[j] - tol)) / -g;
      }
      if (g > 0.0 && finite(up_[j])) {
        to_lower = false;
        return std::max(0.0, up_[j] + tol - xv) / g;
      }
      return kInf;
    };

    double t_max = kInf;
    bool dummy = false;
    for (int r = 0; r < m_; ++r) t_max = std::min(t_max, limit(r, true, dummy));
    const auto qu = static_cast<std::size_t>(q);
    const double t_flip = (finite(lo_[qu]) && finite(up_[qu])) ? up_[qu] - lo_[qu] : kInf;

    if (!finite(t_max) && !finite(t_flip)) {
      if (!phase1) return LpOutcome::Unbounded;
      // Phase 1 cannot be unbounded; treat as numerical noise.
      refactor();
      compute_primal();
      continue;
    }

    int leave = -1;
    bool leave_lower = false;
    double step = 0.0;
    if (t_flip <= t_max) {
      step = t_flip;
    } else {
      double best_g = 0.0;
      for (int r = 0; r < m_; ++r) {
        bool to_lower = false;
        const double t = limit(r, false, to_lower);
        if (t > t_max) continue;
        const double g = std::abs(w[r]);
        const bool better = bland ? (leave < 0 || head_[static_cast<std::size_t>(r)] <
                                                      head_[static_cast<std::size_t>(leave)])
                                  : g > best_g;
        if (better) {
          best_g = g;
          leave = r;
          leave_lower = to_lower;
          step = t;
        }
      }
    }

    if (step < 1e-12) {
      if (++degenerate > kDegenerateStreakForBland) bland = true;
    } else {
      degenerate = 0;
      bland = false;
    }

    x_[qu] += dir * step;
    for (int r = 0; r < m_; ++r) {
      x_[static_cast<std::size_t>(head_[static_cast<std::size_t>(r)])] += -dir * w[r] * step;
    }
    if (leave < 0) {
      status_[qu] = dir > 0.0 ? BasisStatus::AtUpper : BasisStatus::AtLower;
      x_[qu] = dir > 0.0 ? up_[qu] : lo_[qu];
      ++iterations_;
      continue;
    }
    pivot(leave, q, w, leave_lower);
  }
}

LpOutcome BoundedSimplex::dual_loop() {
  Eigen::VectorXd y, rho, w;
  std::vector<std::pair<int, double>> candidates;
  int degenerate = 0;
  bool bland = false;
  while (true) {
    if (out_of_iterations()) return LpOutcome::IterationLimit;
    if (etas_.size() >= static_cast<std::size_t>(kRefactorInterval)) {
      if (!refactor()) return LpOutcome::IterationLimit;
      compute_primal();
    }

    int r = -1;
    double worst = ptol_;
    for (int i = 0; i < m_; ++i) {
      const auto j = static_cast<std::size_t>(head_[static_cast<std::size_t>(i)]);
      const double infeas = std::max(lo_[j] - x_[j], x_[j] - up_[j]);
      if (infeas > worst) {
        worst = infeas;
        r = i;
      }
    }
    if (r < 0) return LpOutcome::Optimal;

    const auto p = static_cast<std::size_t>(head_[static_cast<std::size_t>(r)]);
    const bool below = x_[p] < lo_[p];
    const double delta = below ? x_[p] - lo_[p] : x_[p] - up_[p];

    compute_duals(y);
    rho = Eigen::VectorXd::Unit(m_, r);
    btran(rho);

    candidates.clear();
    double theta_max = kInf;
    for (int j = 0; j < n_ + m_; ++j) {
      const std::size_t ju = static_cast<std::size_t>(j);
      const auto st = status_[ju];
      if (st == BasisStatus::Basic || lo_[ju] == up_[ju]) continue;
      const double a = column_dot(j, rho);
      const double at = below ? -a : a;
      const double d = cost_[ju] - column_dot(j, y);
      if (st == BasisStatus::AtLower && at > kPivotTol) {
        theta_max = std::min(theta_max, (std::max(d, 0.0) + dtol_) / at);
      } else if (st == BasisStatus::AtUpper && at < -kPivotTol) {
        theta_max = std::min(theta_max, (std::min(d, 0.0) - dtol_) / at);
      } else if (st == BasisStatus::Free && std::abs(at) > kPivotTol) {
        theta_max = std::min(theta_max, (std::abs(d) + dtol_) / std::abs(at));
      } else {
        continue;
      }
      candidates.emplace_back(j, at);
    }
    if (candidates.empty()) return LpOutcome::Infeasible;

    int q = -1;
    double best = 0.0;
    for (const auto& [j, at] : candidates) {
      const std::size_t ju = static_cast<std::size_t>(j);
      const double d = cost_[ju] - column_dot(j, y);
      const double ratio = status_[ju] == BasisStatus::Free
                               ? std::abs(d) / std::abs(at)
                               : (status_[ju] == BasisStatus::AtLower ? std::max(d, 0.0)
                                                                      : std::min(d, 0.0)) /
                                     at;
      if (ratio > theta_max) continue;
      if (bland) {
        q = j;
        break;
      }
      if (std::abs(at) > best) {
        best = std::abs(at);
        q = j;
      }
    }
    if (q < 0) q = candidates.front().first;

    load_column(q, w);
    ftran(w);
    if (std::abs(w[r]) < kPivotTol) {
      // Row and column computations disagree; refresh the factorization.
      if (etas_.empty()) return LpOutcome::IterationLimit;
      refactor();
      compute_primal();
      continue;
    }
    const double theta_p = delta / w[r];
    if (std::abs(theta_p) < 1e-12) {
      if (++degenerate > kDegenerateStreakForBland) bland = true;
    } else {
      degenerate = 0;
      bland = false;
    }
    x_[static_cast<std::size_t>(q)] += theta_p;
    for (int i = 0; i < m_; ++i) {
      x_[static_cast<std::size_t>(head_[static_cast<std::size_t>(i)])] -= theta_p * w[i];
    }
    pivot(r, q, w, below);
  }
}

LpOutcome BoundedSimplex::solve(long iteration_limit) {
  iteration_cap_ = iterations_ + iteration_limit;
  normalize_nonbasic();
  if (!factor_valid_ && !refactor()) {
    reset_to_slack_basis();
    normalize_nonbasic();
    refactor();
  }
  compute_primal();

  for (int attempt = 0; attempt < 4; ++attempt) {
    if (make_dual_feasible()) {
      const LpOutcome dual = dual_loop();
      if (dual == LpOutcome::IterationLimit && out_of_iterations()) return dual;
    }
    const LpOutcome out = primal_loop();
    if (out != LpOutcome::Optimal) return out;
    compute_primal();
    if (primal_infeasibility() <= ptol_) return LpOutcome::Optimal;
    refactor();
    compute_primal();
    if (primal_infeasibility() <= ptol_) return LpOutcome::Optimal;
  }
  return LpOutcome::IterationLimit;
}

double BoundedSimplex::objective() const {
  double s = 0.0;
  for (int j = 0; j < n_; ++j) s += cost_[static_cast<std::size_t>(j)] * x_[static_cast<std::size_t>(j)];
  return s * cost_scale_;
}

std::vector<double> BoundedSimplex::primal() const {
  return {x_.begin(), x_.begin() + n_};
}

std::vector<double> BoundedSimplex::row_duals() const {
  Eigen::VectorXd y;
  compute_duals(y);
  std::vector<double> out(static_cast<std::size_t>(m_));
  for (int i = 0; i < m_; ++i) out[static_cast<std::size_t>(i)] = y[i] * cost_scale_;
  return out;
}

std::vector<double> BoundedSimplex::reduced_costs() const {
  Eigen::VectorXd y;
  compute_duals(y);
  std::vector<double> out(static_cast<std::size_t>(n_));
  for (int j = 0; j < n_; ++j) {
    out[static_cast<std::size_t>(j)] = (cost_[static_cast<std::size_t>(j)] - column_dot(j, y)) * cost_scale_;
  }
  return out;
}

}  // namespace flexdc::detail
