#pragma once

#include <compare>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace flexdc {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class VarKind : std::uint8_t { Continuous, Binary };
enum class Sense : std::uint8_t { LessEqual, Equal, GreaterEqual };

/// Handle to a variable of one MilpModel. Carries the owning model's id so
/// that refs from another model are rejected on use.
struct VarRef {
  int index = -1;
  std::uint32_t model = 0;

  bool valid() const { return index >= 0; }
  friend auto operator<=>(const VarRef&, const VarRef&) = default;
};

struct Variable {
  std::string name;
  VarKind kind = VarKind::Continuous;
  double lower = 0.0;
  double upper = kInf;
};

/// Affine expression sum_i coef_i * var_i + constant. Terms are kept
/// unmerged until the expression is committed to a model.
class LinExpr {
 public:
  LinExpr() = default;
  LinExpr(double constant) : constant_(constant) {}  // NOLINT(implicit)
  LinExpr(VarRef v) { terms_.emplace_back(v, 1.0); }  // NOLINT(implicit)

  LinExpr& add(VarRef v, double coef) {
    if (coef != 0.0) terms_.emplace_back(v, coef);
    return *this;
  }
  LinExpr& operator+=(const LinExpr& other);
  LinExpr& operator-=(const LinExpr& other);
  LinExpr& operator*=(double s);

  const std::vector<std::pair<VarRef, double>>& terms() const { return terms_; }
  double constant() const { return constant_; }

  /// Terms with duplicate refs summed and zeros dropped, ordered by index.
  std::vector<std::pair<VarRef, double>> merged() const;

 private:
  std::vector<std::pair<VarRef, double>> terms_;
  double constant_ = 0.0;
};

LinExpr operator+(LinExpr a, const LinExpr& b);
LinExpr operator-(LinExpr a, const LinExpr& b);
LinExpr operator-(LinExpr a);
LinExpr operator*(double s, LinExpr a);
LinExpr operator*(LinExpr a, double s);

struct LinConstraint {
  std::vector<std::pair<VarRef, double>> terms;
  Sense sense = Sense::LessEqual;
  double rhs = 0.0;
  std::string name;
};

class MilpModel {
 public:
  MilpModel();

  VarRef add_variable(std::string name, double lower, double upper,
                      VarKind kind = VarKind::Continuous);
  VarRef add_binary(std::string name) {
    return add_variable(std::move(name), 0.0, 1.0, VarKind::Binary);
  }

  /// Adds `lhs sense rhs`. Both sides may carry constants; they are moved to
  /// the right-hand side and duplicate terms are merged. Returns row index.
  int add_constraint(const LinExpr& lhs, Sense sense, const LinExpr& rhs,
                     std::string name);

  void set_objective(const LinExpr& objective);
  void add_to_objective(const LinExpr& objective);

  void set_bounds(VarRef v, double lower, double upper);
  /// Intersects the current bounds with [lower, upper].
  void tighten_bounds(VarRef v, double lower, double upper);

  const Variable& variable(VarRef v) const;
  std::span<const Variable> variables() const { return variables_; }
  std::span<const LinConstraint> constraints() const { return constraints_; }
  const std::vector<std::pair<VarRef, double>>& objective() const { return objective_; }
  double objective_offset() const { return objective_offset_; }

  int num_variables() const { return static_cast<int>(variables_.size()); }
  int num_constraints() const { return static_cast<int>(constraints_.size()); }
  int num_binaries() const;
  std::uint32_t id() const { return id_; }

  VarRef ref(int index) const { return VarRef{index, id_}; }
  double evaluate(const LinExpr& e, std::span<const double> values) const;

  /// Largest violation of bounds, constraint rows and binary integrality.
  struct Violation {
    double bound = 0.0;
    double row = 0.0;
    double integrality = 0.0;
  };
  Violation max_violation(std::span<const double> values) const;

 private:
  void check(VarRef v) const;

  std::uint32_t id_;
  std::vector<Variable> variables_;
  std::vector<LinConstraint> constraints_;
  std::vector<std::pair<VarRef, double>> objective_;
  double objective_offset_ = 0.0;
};

}  // namespace flexdc
