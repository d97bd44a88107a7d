#include <algorithm>
#include <atomic>
#include <cmath>
#include <stdexcept>

#include "flexdc/milp.hpp"
#include "flexdc/solver.hpp"

namespace flexdc {
namespace {
std::atomic<std::uint32_t> next_model_id{1};
}

LinExpr& LinExpr::operator+=(const LinExpr& other) {
  terms_.insert(terms_.end(), other.terms_.begin(), other.terms_.end());
  constant_ += other.constant_;
  return *this;
}

LinExpr& LinExpr::operator-=(const LinExpr& other) {
  for (const auto& [v, c] : other.terms_) terms_.emplace_back(v, -c);
  constant_ -= other.constant_;
  return *this;
}

LinExpr& LinExpr::operator*=(double s) {
  for (auto& t : terms_) t.second *= s;
  constant_ *= s;
  return *this;
}

std::vector<std::pair<VarRef, double>> LinExpr::merged() const {
  auto out = terms_;
  std::sort(out.begin(), out.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<std::pair<VarRef, double>> merged;
  for (const auto& t : out) {
    if (!merged.empty() && merged.back().first == t.first) {
      merged.back().second += t.second;
    } else {
      merged.push_back(t);
    }
  }
  std::erase_if(merged, [](const auto& t) { return t.second == 0.0; });
  return merged;
}

LinExpr operator+(LinExpr a, const LinExpr& b) { return a += b; }
LinExpr operator-(LinExpr a, const LinExpr& b) { return a -= b; }
LinExpr operator-(LinExpr a) { return a *= -1.0; }
LinExpr operator*(double s, LinExpr a) { return a *= s; }
LinExpr operator*(LinExpr a, double s) { return a *= s; }

MilpModel::MilpModel() : id_(next_model_id.fetch_add(1)) {}

VarRef MilpModel::add_variable(std::string name, double lower, double upper, VarKind kind) {
  if (std::isnan(lower) || std::isnan(upper) || lower > upper) {
    throw std::invalid_argument("invalid bounds for variable " + name);
  }
  if (kind == VarKind::Binary && (lower < 0.0 || upper > 1.0)) {
    throw std::invalid_argument("binary bounds outside [0,1] for " + name);
  }
  variables_.push_back(Variable{std::move(name), kind, lower, upper});
  return VarRef{static_cast<int>(variables_.size()) - 1, id_};
}

void MilpModel::check(VarRef v) const {
  if (v.model != id_ || v.index < 0 || v.index >= num_variables()) {
    throw std::invalid_argument("variable reference does not belong to this model");
  }
}

int MilpModel::add_constraint(const LinExpr& lhs, Sense sense, const LinExpr& rhs,
                              std::string name) {
  LinExpr e = lhs - rhs;
  auto terms = e.merged();
  for (const auto& [v, c] : terms) {
    check(v);
    if (!std::isfinite(c)) throw std::invalid_argument("non-finite coefficient in " + name);
  }
  constraints_.push_back(LinConstraint{std::move(terms), sense, -e.constant(), std::move(name)});
  return num_constraints() - 1;
}

void MilpModel::set_objective(const LinExpr& objective) {
  objective_.clear();
  objective_offset_ = 0.0;
  add_to_objective(objective);
}

void MilpModel::add_to_objective(const LinExpr& objective) {
  LinExpr e = objective;
  for (const auto& t : objective_) e.add(t.first, t.second);
  for (const auto& [v, c] : e.terms()) check(v);
  objective_ = e.merged();
  objective_offset_ += objective.constant();
}

void MilpModel::set_bounds(VarRef v, double lower, double upper) {
  check(v);
  if (lower > upper) throw std::invalid_argument("lower > upper for " + variable(v).name);
  auto& var = variables_[static_cast<std::size_t>(v.index)];
  var.lower = lower;
  var.upper = upper;
}

void MilpModel::tighten_bounds(VarRef v, double lower, double upper) {
  const auto& var = variable(v);
  set_bounds(v, std::max(var.lower, lower), std::min(var.upper, upper));
}

const Variable& MilpModel::variable(VarRef v) const {
  check(v);
  return variables_[static_cast<std::size_t>(v.index)];
}

int MilpModel::num_binaries() const {
  return static_cast<int>(std::count_if(variables_.begin(), variables_.end(), [](const Variable& v) {
    return v.kind == VarKind::Binary;
  }));
}

double MilpModel::evaluate(const LinExpr& e, std::span<const double> values) const {
  double s = e.constant();
  for (const auto& [v, c] : e.terms()) {
    check(v);
    s += c * values[static_cast<std::size_t>(v.index)];
  }
  return s;
}

MilpModel::Violation MilpModel::max_violation(std::span<const double> values) const {
  Violation out;
  for (std::size_t j = 0; j < variables_.size(); ++j) {
    const auto& v = variables_[j];
    const double x = values[j];
    out.bound = std::max({out.bound, v.lower - x, x - v.upper});
    if (v.kind == VarKind::Binary) {
      out.integrality = std::max(out.integrality, std::abs(x - std::round(x)));
    }
  }
  for (const auto& row : constraints_) {
    double a = 0.0;
    for (const auto& [v, c] : row.terms) a += c * values[static_cast<std::size_t>(v.index)];
    double viol = 0.0;
    switch (row.sense) {
      case Sense::LessEqual: viol = a - row.rhs; break;
      case Sense::GreaterEqual: viol = row.rhs - a; break;
      case Sense::Equal: viol = std::abs(a - row.rhs); break;
    }
    out.row = std::max(out.row, viol);
  }
  return out;
}

std::string_view to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "Optimal";
    case SolveStatus::Infeasible: return "Infeasible";
    case SolveStatus::Unbounded: return "Unbounded";
    case SolveStatus::IterationLimit: return "IterationLimit";
    case SolveStatus::NodeLimit: return "NodeLimit";
    case SolveStatus::TimeLimit: return "TimeLimit";
  }
  return "Unknown";
}

}  // namespace flexdc
