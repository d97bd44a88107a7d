#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <fmt/format.h>
#include <vector>

#include "flexdc/solver.hpp"
#include "simplex.hpp"

namespace flexdc {
namespace {

using detail::Basis;
using detail::BoundedSimplex;
using detail::LpOutcome;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

SolveStatus to_status(LpOutcome o) {
  switch (o) {
    case LpOutcome::Optimal: return SolveStatus::Optimal;
    case LpOutcome::Infeasible: return SolveStatus::Infeasible;
    case LpOutcome::Unbounded: return SolveStatus::Unbounded;
    case LpOutcome::IterationLimit: return SolveStatus::IterationLimit;
  }
  return SolveStatus::IterationLimit;
}

// Fixing per binary: -1 free, otherwise the fixed value.
using Fixing = std::vector<std::int8_t>;

// Strong branching settles a binary's pseudocosts until both directions have
// this many observations.
constexpr int kReliable = 4;
constexpr int kStrongCandidates = 8;
constexpr int kStrongLookahead = 4;
constexpr long kStrongIterations = 100;

struct Evaluation {
  LpOutcome outcome = LpOutcome::Infeasible;
  double objective = 0.0;
  int fractional = -1;  // most fractional binary, -1 when integral
  std::vector<double> x;  // binary values
  std::vector<double> rc;  // binary reduced costs
};

struct Node {
  double bound = 0.0;
  int depth = 0;
  long id = 0;
  Fixing fixing;
  Basis basis;
  std::vector<double> x;
  std::vector<double> rc;
};

// Heap order: best bound first, then deeper, then older.
struct WorseNode {
  bool operator()(const Node& a, const Node& b) const {
    if (a.bound != b.bound) return a.bound > b.bound;
    if (a.depth != b.depth) return a.depth < b.depth;
    return a.id > b.id;
  }
};

// Objective gain per unit change of a binary, separately for each direction.
class Pseudocosts {
 public:
  explicit Pseudocosts(std::size_t n) : sum_(2 * n, 0.0), count_(2 * n, 0) {}

  void record(std::size_t b, int dir, double distance, double gain) {
    if (distance < 1e-9) return;
    sum_[2 * b + static_cast<std::size_t>(dir)] += std::max(gain, 0.0) / distance;
    ++count_[2 * b + static_cast<std::size_t>(dir)];
    total_[dir] += std::max(gain, 0.0) / distance;
    ++total_count_[dir];
  }
  bool reliable(std::size_t b) const {
    return std::min(count_[2 * b], count_[2 * b + 1]) >= kReliable;
  }
  double estimate(std::size_t b, int dir) const {
    const std::size_t i = 2 * b + static_cast<std::size_t>(dir);
    if (count_[i] > 0) return sum_[i] / count_[i];
    return total_count_[dir] > 0 ? total_[dir] / total_count_[dir] : 1.0;
  }

 private:
  std::vector<double> sum_;
  std::vector<int> count_;
  double total_[2] = {0.0, 0.0};
  long total_count_[2] = {0, 0};
};

double branch_score(double down, double up) {
  constexpr double eps = 1e-6;
  return std::max(down, eps) * std::max(up, eps);
}

class BranchAndBound {
 public:
  BranchAndBound(const MilpModel& model, const SolveOptions& options)
      : model_(model), options_(options), lp_(model, options), start_(Clock::now()), pseudo_(0) {
    for (int j = 0; j < model.num_variables(); ++j) {
      const auto& v = model.variables()[static_cast<std::size_t>(j)];
      if (v.kind == VarKind::Binary) {
        binaries_.push_back(j);
        base_lo_.push_back(v.lower);
        base_up_.push_back(v.upper);
      }
    }
    pseudo_ = Pseudocosts(binaries_.size());
  }

  SolveResult run();

 private:
  Evaluation evaluate(const Fixing& fixing, const Basis* warm, long iteration_limit = 0);
  int select_branch(const Node& node);
  void fix_by_reduced_cost(Node& node) const;
  void consider_incumbent(const Fixing& fixing, long node);
  void dive(Fixing fixing, const Basis& basis, long node);
  double cutoff() const {
    if (!has_incumbent_) return kInf;
    return incumbent_obj_ - options_.gap_tol * std::max(1.0, std::abs(incumbent_obj_));
  }
  bool out_of_time() const { return seconds_since(start_) > options_.time_limit; }
  void log(const std::string& msg) const {
    if (options_.log) options_.log(msg);
  }

  const MilpModel& model_;
  const SolveOptions& options_;
  BoundedSimplex lp_;
  Clock::time_point start_;
  std::vector<int> binaries_;
  std::vector<double> base_lo_, base_up_;
  Pseudocosts pseudo_;

  bool has_incumbent_ = false;
  double incumbent_obj_ = kInf;
  std::vector<double> incumbent_;
  std::vector<Incumbent> history_;
  long nodes_ = 0;
};

Evaluation BranchAndBound::evaluate(const Fixing& fixing, const Basis* warm, long iteration_limit) {
  for (std::size_t b = 0; b < binaries_.size(); ++b) {
    if (fixing[b] < 0) {
      lp_.set_bounds(binaries_[b], base_lo_[b], base_up_[b]);
    } else {
      const double v = fixing[b];
      lp_.set_bounds(binaries_[b], v, v);
    }
  }
  if (warm != nullptr) lp_.load_basis(*warm);
  Evaluation ev;
  ev.outcome = lp_.solve(iteration_limit > 0 ? iteration_limit : options_.iteration_limit);
  if (ev.outcome != LpOutcome::Optimal) {
    if (ev.outcome == LpOutcome::IterationLimit) ev.objective = lp_.objective() + model_.objective_offset();
    return ev;
  }
  ev.objective = lp_.objective() + model_.objective_offset();
  double most = options_.integrality_tol;
  ev.x.resize(binaries_.size());
  for (std::size_t b = 0; b < binaries_.size(); ++b) {
    const double x = lp_.value(binaries_[b]);
    ev.x[b] = x;
    const double frac = std::abs(x - std::round(x));
    if (frac > most) {
      most = frac;
      ev.fractional = static_cast<int>(b);
    }
  }
  if (ev.fractional >= 0) {
    const std::vector<double> rc = lp_.reduced_costs();
    ev.rc.resize(binaries_.size());
    for (std::size_t b = 0; b < binaries_.size(); ++b) ev.rc[b] = rc[static_cast<std::size_t>(binaries_[b])];
  }
  return ev;
}

// A binary resting at a bound whose reduced cost exceeds the distance to the
// cutoff cannot move in any improving solution below this node.
void BranchAndBound::fix_by_reduced_cost(Node& node) const {
  const double room = cutoff() - node.bound;
  if (!std::isfinite(room)) return;
  for (std::size_t b = 0; b < binaries_.size(); ++b) {
    if (node.fixing[b] >= 0) continue;
    if (node.x[b] <= options_.integrality_tol && node.rc[b] > room) node.fixing[b] = 0;
    if (node.x[b] >= 1.0 - options_.integrality_tol && -node.rc[b] > room) node.fixing[b] = 1;
  }
}

// Reliability branching: pseudocost product score, with strong branching on
// the most fractional candidates whose pseudocosts are not yet reliable.
int BranchAndBound::select_branch(const Node& node) {
  std::vector<int> candidates;
  for (std::size_t b = 0; b < binaries_.size(); ++b) {
    if (node.fixing[b] >= 0) continue;
    const double frac = std::abs(node.x[b] - std::round(node.x[b]));
    if (frac > options_.integrality_tol) candidates.push_back(static_cast<int>(b));
  }
  // Most fractional first, lowest index on ties.
  std::stable_sort(candidates.begin(), candidates.end(), [&](int a, int b) {
    const auto fa = std::abs(node.x[static_cast<std::size_t>(a)] - 0.5);
    const auto fb = std::abs(node.x[static_cast<std::size_t>(b)] - 0.5);
    return fa < fb;
  });

  int best = -1;
  double best_score = -1.0;
  int strong = 0;
  int since_improved = 0;
  for (int c : candidates) {
    const auto b = static_cast<std::size_t>(c);
    const double x = node.x[b];
    double down = x * pseudo_.estimate(b, 0);
    double up = (1.0 - x) * pseudo_.estimate(b, 1);
    if (!pseudo_.reliable(b) && strong < kStrongCandidates && since_improved < kStrongLookahead) {
      ++strong;
      double gain[2] = {0.0, 0.0};
      for (int dir = 0; dir < 2; ++dir) {
        Fixing child = node.fixing;
        child[b] = static_cast<std::int8_t>(dir);
        const Evaluation ev = evaluate(child, &node.basis, kStrongIterations);
        const double distance = dir == 0 ? x : 1.0 - x;
        if (ev.outcome == LpOutcome::Optimal || ev.outcome == LpOutcome::IterationLimit) {
          gain[dir] = std::min(ev.objective, cutoff()) - node.bound;
          if (ev.outcome == LpOutcome::Optimal) pseudo_.record(b, dir, distance, gain[dir]);
        } else {
          gain[dir] = std::isfinite(cutoff()) ? cutoff() - node.bound : 1e6 * std::max(1.0, std::abs(node.bound));
        }
      }
      down = gain[0];
      up = gain[1];
    }
    const double score = branch_score(down, up);
    if (score > best_score * (1.0 + 1e-9)) {
      best_score = score;
      best = c;
      since_improved = 0;
    } else {
      ++since_improved;
    }
  }
  return best;
}

// The LP at hand is integral: re-solve with every binary pinned to its
// rounded value so the reported point is exactly integral.
void BranchAndBound::consider_incumbent(const Fixing& fixing, long node) {
  Fixing pinned = fixing;
  for (std::size_t b = 0; b < binaries_.size(); ++b) {
    pinned[b] = static_cast<std::int8_t>(std::lround(lp_.value(binaries_[b])));
  }
  const Basis warm = lp_.basis();
  const Evaluation ev = evaluate(pinned, &warm);
  if (ev.outcome != LpOutcome::Optimal) return;
  if (has_incumbent_ && ev.objective >= incumbent_obj_ - 1e-12 * std::max(1.0, std::abs(incumbent_obj_))) {
    return;
  }
  has_incumbent_ = true;
  incumbent_obj_ = ev.objective;
  incumbent_ = lp_.primal();
  history_.push_back(Incumbent{incumbent_obj_, node});
  log(fmt::format("incumbent {:.10g} at node {}", incumbent_obj_, node));
}

// Fractional diving: repeatedly pin the least fractional binary to its
// nearest value, backtracking once on infeasibility.
void BranchAndBound::dive(Fixing fixing, const Basis& basis, long node) {
  Basis warm = basis;
  for (std::size_t step = 0; step < binaries_.size(); ++step) {
    Evaluation ev = evaluate(fixing, &warm);
    if (ev.outcome != LpOutcome::Optimal || ev.objective >= cutoff()) return;
    if (ev.fractional < 0) {
      consider_incumbent(fixing, node);
      return;
    }
    int pick = -1;
    double least = 1.0;
    for (std::size_t b = 0; b < binaries_.size(); ++b) {
      if (fixing[b] >= 0) continue;
      const double frac = std::abs(ev.x[b] - std::round(ev.x[b]));
      if (frac > options_.integrality_tol && frac < least) {
        least = frac;
        pick = static_cast<int>(b);
      }
    }
    if (pick < 0) return;
    warm = lp_.basis();
    const auto value = static_cast<std::int8_t>(std::lround(ev.x[static_cast<std::size_t>(pick)]));
    fixing[static_cast<std::size_t>(pick)] = value;
    ev = evaluate(fixing, &warm);
    if (ev.outcome != LpOutcome::Optimal || ev.objective >= cutoff()) {
      fixing[static_cast<std::size_t>(pick)] = static_cast<std::int8_t>(1 - value);
    } else {
      warm = lp_.basis();
    }
  }
}

SolveResult BranchAndBound::run() {
  SolveResult result;
  Fixing root_fix(binaries_.size(), -1);
  Evaluation root = evaluate(root_fix, nullptr);
  ++nodes_;
  auto finish = [&](SolveStatus status, double bound) {
    result.status = status;
    result.stats.iterations = lp_.iterations();
    result.stats.nodes = nodes_;
    result.stats.wall_seconds = seconds_since(start_);
    result.incumbents = history_;
    if (has_incumbent_) {
      result.values = incumbent_;
      result.objective = incumbent_obj_;
      result.best_bound = std::min(bound, incumbent_obj_);
      result.gap = (incumbent_obj_ - result.best_bound) / std::max(1.0, std::abs(incumbent_obj_));
      result.stats.max_row_violation = model_.max_violation(result.values).row;
    } else {
      result.best_bound = bound;
      result.gap = kInf;
    }
    return result;
  };

  if (root.outcome != LpOutcome::Optimal) {
    auto r = finish(to_status(root.outcome), kInf);
    if (root.outcome == LpOutcome::IterationLimit) r.values = lp_.primal();
    return r;
  }
  log(fmt::format("root bound {:.10g}, {} binaries", root.objective, binaries_.size()));
  if (root.fractional < 0) {
    consider_incumbent(root_fix, 0);
    return finish(has_incumbent_ ? SolveStatus::Optimal : SolveStatus::Infeasible, root.objective);
  }

  std::vector<Node> heap;
  long next_id = 0;
  heap.push_back(Node{root.objective, 0, next_id++, root_fix, lp_.basis(), std::move(root.x), std::move(root.rc)});
  if (options_.dive_interval > 0) dive(root_fix, heap.front().basis, 0);

  long processed = 0;
  while (!heap.empty()) {
    std::pop_heap(heap.begin(), heap.end(), WorseNode{});
    Node node = std::move(heap.back());
    heap.pop_back();
    if (node.bound >= cutoff()) {
      heap.clear();
      return finish(SolveStatus::Optimal, node.bound);
    }
    if (nodes_ >= options_.node_limit || out_of_time()) {
      const SolveStatus st = nodes_ >= options_.node_limit ? SolveStatus::NodeLimit : SolveStatus::TimeLimit;
      double bound = node.bound;
      for (const Node& n : heap) bound = std::min(bound, n.bound);
      return finish(st, bound);
    }
    ++processed;
    if (options_.dive_interval > 0 && processed % options_.dive_interval == 0) {
      dive(node.fixing, node.basis, nodes_);
    }
    fix_by_reduced_cost(node);
    const int branch = select_branch(node);
    if (branch < 0) {
      // Reduced-cost fixing pinned every fractional binary; re-solve as is.
      const Evaluation ev = evaluate(node.fixing, &node.basis);
      ++nodes_;
      if (ev.outcome == LpOutcome::Optimal && ev.objective < cutoff()) {
        if (ev.fractional < 0) {
          consider_incumbent(node.fixing, nodes_);
        } else {
          heap.push_back(Node{ev.objective, node.depth, next_id++, node.fixing, lp_.basis(), ev.x, ev.rc});
          std::push_heap(heap.begin(), heap.end(), WorseNode{});
        }
      }
      continue;
    }
    const auto bi = static_cast<std::size_t>(branch);
    for (std::int8_t value : {std::int8_t{0}, std::int8_t{1}}) {
      Fixing child = node.fixing;
      child[bi] = value;
      Evaluation ev = evaluate(child, &node.basis);
      ++nodes_;
      if (ev.outcome == LpOutcome::IterationLimit) {
        log("node LP hit the iteration limit; node dropped");
        continue;
      }
      if (ev.outcome == LpOutcome::Optimal) {
        pseudo_.record(bi, value, value == 0 ? node.x[bi] : 1.0 - node.x[bi], ev.objective - node.bound);
      }
      if (ev.outcome != LpOutcome::Optimal || ev.objective >= cutoff()) continue;
      if (ev.fractional < 0) {
        consider_incumbent(child, nodes_);
        continue;
      }
      heap.push_back(Node{ev.objective, node.depth + 1, next_id++, std::move(child), lp_.basis(), std::move(ev.x),
                          std::move(ev.rc)});
      std::push_heap(heap.begin(), heap.end(), WorseNode{});
    }
    if (processed % 1000 == 0) {
      log(fmt::format("nodes {} open {} incumbent {:.10g} bound {:.10g}", nodes_, heap.size(),
                      incumbent_obj_, node.bound));
    }
  }
  return finish(has_incumbent_ ? SolveStatus::Optimal : SolveStatus::Infeasible, incumbent_obj_);
}

}  // namespace

SolveResult solve_lp(const MilpModel& model, const SolveOptions& options) {
  const auto start = Clock::now();
  BoundedSimplex lp(model, options);
  const LpOutcome out = lp.solve(options.iteration_limit);
  SolveResult result;
  result.status = to_status(out);
  result.stats.iterations = lp.iterations();
  result.stats.nodes = 1;
  if (out == LpOutcome::Optimal || out == LpOutcome::IterationLimit) {
    result.values = lp.primal();
    result.objective = lp.objective() + model.objective_offset();
    result.best_bound = result.objective;
    result.row_duals = lp.row_duals();
    result.reduced_costs = lp.reduced_costs();
    result.stats.max_row_violation = model.max_violation(result.values).row;
  }
  result.stats.wall_seconds = seconds_since(start);
  return result;
}

SolveResult solve_milp(const MilpModel& model, const SolveOptions& options) {
  BranchAndBound bnb(model, options);
  return bnb.run();
}

}  // namespace flexdc
