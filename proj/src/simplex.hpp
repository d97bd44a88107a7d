#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include "flexdc/milp.hpp"
#include "flexdc/solver.hpp"

namespace flexdc::detail {

enum class BasisStatus : std::uint8_t { Basic, AtLower, AtUpper, Free };

/// Status of every column (structurals first, then one logical per row).
using Basis = std::vector<BasisStatus>;

enum class LpOutcome : std::uint8_t { Optimal, Infeasible, Unbounded, IterationLimit };

/// Bounded-variable revised simplex over
///   min c'x  s.t.  A x - s = 0,  l <= (x, s) <= u
/// where the logical s_i carries the bounds of row i. The basis inverse is an
/// Eigen SparseLU factorization followed by a product-form eta file.
class BoundedSimplex {
 public:
  BoundedSimplex(const MilpModel& model, const SolveOptions& options);

  int num_structural() const { return n_; }
  int num_rows() const { return m_; }

  void set_bounds(int j, double lower, double upper);
  double lower(int j) const { return lo_[static_cast<std::size_t>(j)]; }
  double upper(int j) const { return up_[static_cast<std::size_t>(j)]; }

  /// Re-optimizes from the current basis. Dual simplex is used while the basis
  /// is dual feasible (warm starts after bound changes), primal otherwise.
  LpOutcome solve(long iteration_limit);

  const Basis& basis() const { return status_; }
  void load_basis(const Basis& basis);

  double objective() const;  // excludes the model's constant offset
  double value(int j) const { return x_[static_cast<std::size_t>(j)]; }
  std::vector<double> primal() const;
  std::vector<double> row_duals() const;
  std::vector<double> reduced_costs() const;
  long iterations() const { return iterations_; }

 private:
  struct Eta {
    int row = 0;
    double pivot_inverse = 1.0;
    std::vector<std::pair<int, double>> entries;  // off-pivot eta entries
  };

  bool refactor();
  void reset_to_slack_basis();
  void normalize_nonbasic();
  void compute_primal();
  void ftran(Eigen::VectorXd& v) const;
  void btran(Eigen::VectorXd& v) const;
  void load_column(int j, Eigen::VectorXd& out) const;
  double column_dot(int j, const Eigen::VectorXd& y) const;
  void compute_duals(Eigen::VectorXd& y) const;
  void pivot(int r, int q, const Eigen::VectorXd& w, bool leaving_at_lower);
  double primal_infeasibility() const;
  /// Flips boxed nonbasics with wrong-signed reduced cost. False when a
  /// one-sided or free column is dual infeasible.
  bool make_dual_feasible();
  LpOutcome primal_loop();
  LpOutcome dual_loop();
  bool out_of_iterations() const { return iterations_ >= iteration_cap_; }

  int n_ = 0;
  int m_ = 0;
  Eigen::SparseMatrix<double> a_;  // m x n, column major
  std::vector<double> cost_;       // scaled, size n + m
  double cost_scale_ = 1.0;
  std::vector<double> lo_, up_, x_;
  Basis status_;
  std::vector<int> head_;  // basis position -> column

  mutable Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu_;
  std::vector<Eta> etas_;
  bool factor_valid_ = false;

  double ptol_;
  double dtol_;
  long iterations_ = 0;
  long iteration_cap_ = 0;
};

}  // namespace flexdc::detail
