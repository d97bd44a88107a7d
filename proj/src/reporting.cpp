#include "flexdc/reporting.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

namespace flexdc {

std::string fingerprint(std::string_view content) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : content) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return fmt::format("{:016x}", h);
}

std::vector<std::string> branch_labels(const SystemCase& c) {
  std::vector<std::string> out;
  std::map<std::pair<int, int>, int> seen;
  for (const auto& b : c.branches) {
    const auto key = std::minmax(b.from_bus, b.to_bus);
    const int n = ++seen[key];
    out.push_back(n == 1 ? branch_label(b) : fmt::format("{}#{}", branch_label(b), n));
  }
  return out;
}

DispatchSolution make_solution(const Problem& problem, const SystemCase& c, const SolveResult& result) {
  DispatchSolution s;
  s.formulation = problem.kind;
  s.status = result.status;
  s.n_periods = problem.block.n_periods;
  for (std::size_t g = 0; g < c.generators.size(); ++g) s.generator_labels.push_back(fmt::format("G{}", g + 1));
  s.branch_labels = branch_labels(c);
  s.objective = result.objective;
  s.gap = result.gap;
  s.stats = result.stats;
  s.cost_segments = c.cost_segments;
  s.linearized_generators = static_cast<int>(
      std::ranges::count_if(c.generators, [](const Generator& g) { return g.quadratic_cost != 0.0; }));
  if (!result.has_solution()) return s;
  const auto& d = problem.dispatch;
  for (std::size_t i = 0; i < d.p.size(); ++i) s.outputs_mw.push_back(result.values[static_cast<std::size_t>(d.p[i].index)] * c.base_mva);
  for (VarRef u : d.u) s.commitment.push_back(static_cast<int>(std::lround(result.value(u))));
  s.branches = extract_branch_state(problem.block, result);
  return s;
}

double recompute_cost(const DispatchSolution& sol, const SystemCase& c) {
  double cost = 0.0;
  const int G = sol.n_generators();
  for (int t = 0; t < sol.n_periods; ++t) {
    for (int g = 0; g < G; ++g) {
      const Generator& gen = c.generators[static_cast<std::size_t>(g)];
      cost += generation_cost(gen, sol.output_mw(t, g), c.cost_segments);
      if (sol.commitment.empty()) continue;
      const int u = sol.commitment[static_cast<std::size_t>(t * G + g)];
      const int prev = t == 0 ? (gen.initially_on ? 1 : 0) : sol.commitment[static_cast<std::size_t>((t - 1) * G + g)];
      cost += gen.fixed_cost * u;
      if (u > prev) cost += gen.startup_cost;
      if (u < prev) cost += gen.shutdown_cost;
    }
  }
  return cost;
}

namespace {

// Shortest representation that reads back to the same double.
std::string number(double v) {
  if (v == 0.0) v = 0.0;  // drop the sign of -0
  char buf[32];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

std::string render_csv(const DispatchSolution& sol) {
  std::string out = "period";
  for (const auto& l : sol.branch_labels) out += "," + l;
  out += "\n";
  for (int t = 0; t < sol.n_periods && !sol.branches.empty(); ++t) {
    out += std::to_string(t + 1);
    for (int k = 0; k < sol.n_branches(); ++k) {
      const BranchState& b = sol.branch(t, k);
      out += "," + (b.is_open ? std::string("OFF") : number(b.flow_mw));
    }
    out += "\n";
  }
  return out;
}

std::string render_json(const DispatchSolution& sol) {
  using nlohmann::json;
  json j;
  j["formulation"] = std::string(to_string(sol.formulation));
  j["status"] = std::string(to_string(sol.status));
  j["objective"] = sol.objective;
  j["gap"] = sol.gap;
  j["stats"] = {{"iterations", sol.stats.iterations},
                {"nodes", sol.stats.nodes},
                {"max_row_violation", sol.stats.max_row_violation}};
  j["fingerprints"] = {{"case", sol.case_fingerprint}, {"overlay", sol.overlay_fingerprint}};
  j["cost_linearization"] = {{"segments", sol.cost_segments}, {"quadratic_units", sol.linearized_generators}};
  json periods = json::array();
  const bool have = !sol.branches.empty();
  for (int t = 0; t < sol.n_periods && have; ++t) {
    json gens = json::array();
    for (int g = 0; g < sol.n_generators(); ++g) {
      json e = {{"label", sol.generator_labels[static_cast<std::size_t>(g)]}, {"output_mw", sol.output_mw(t, g)}};
      if (!sol.commitment.empty()) e["committed"] = sol.commitment[static_cast<std::size_t>(t * sol.n_generators() + g)] == 1;
      gens.push_back(std::move(e));
    }
    json branches = json::array();
    for (int k = 0; k < sol.n_branches(); ++k) {
      const BranchState& b = sol.branch(t, k);
      json e = {{"label", sol.branch_labels[static_cast<std::size_t>(k)]},
                {"open", b.is_open},
                {"flow_mw", b.flow_mw == 0.0 ? 0.0 : b.flow_mw},
                {"shift_deg", b.shift_deg == 0.0 ? 0.0 : b.shift_deg}};
      e["b_effective"] = b.b_effective ? json(*b.b_effective) : json(nullptr);
      branches.push_back(std::move(e));
    }
    periods.push_back({{"period", t + 1}, {"generators", std::move(gens)}, {"branches", std::move(branches)}});
  }
  j["periods"] = std::move(periods);
  return j.dump(2) + "\n";
}

std::vector<std::string> split_csv(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    std::string cell(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    std::erase_if(cell, [](char c) { return c == ' ' || c == '\t' || c == '\r'; });
    out.push_back(std::move(cell));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

double parse_number(const std::string& s, int line) {
  double v = 0.0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) {
    throw std::runtime_error(fmt::format("reference line {}: bad number '{}'", line, s));
  }
  return v;
}

}  // namespace

std::string render_solution(const DispatchSolution& sol, RenderFormat format) {
  return format == RenderFormat::Csv ? render_csv(sol) : render_json(sol);
}

std::string render_generation(const DispatchSolution& sol) {
  std::string out = "period";
  for (const auto& l : sol.generator_labels) out += "," + l;
  out += "\n";
  for (int t = 0; t < sol.n_periods && !sol.outputs_mw.empty(); ++t) {
    out += std::to_string(t + 1);
    for (int g = 0; g < sol.n_generators(); ++g) out += "," + number(sol.output_mw(t, g));
    out += "\n";
  }
  return out;
}

ReferenceTable parse_reference(std::string_view text) {
  ReferenceTable ref;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  bool header_seen = false;
  std::string chain;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    if (line.starts_with("#")) {
      const auto colon = line.find(':');
      if (colon == std::string::npos) continue;  // plain comment
      std::string key = line.substr(1, colon - 1);
      std::string value = line.substr(colon + 1);
      auto strip = [](std::string& s) {
        s.erase(0, s.find_first_not_of(" \t"));
        s.erase(s.find_last_not_of(" \t") + 1);
      };
      strip(key);
      strip(value);
      if (key == "subject") {
        if (value == "flows") ref.subject = ReferenceTable::Subject::Flows;
        else if (value == "generation") ref.subject = ReferenceTable::Subject::Generation;
        else if (value == "ordering") ref.subject = ReferenceTable::Subject::Ordering;
        else throw std::runtime_error(fmt::format("reference line {}: unknown subject '{}'", lineno, value));
      } else if (key == "check") {
        if (value == "cells") ref.mode = CheckMode::Cells;
        else if (value == "off-pattern") ref.mode = CheckMode::OffPattern;
        else if (value == "row-totals") ref.mode = CheckMode::RowTotals;
        else throw std::runtime_error(fmt::format("reference line {}: unknown check '{}'", lineno, value));
      } else if (key == "tolerance") {
        ref.tolerance = parse_number(value, lineno);
      } else if (key == "chain") {
        chain = value;
      } else if (key == "formulation") {
        ref.formulation = value;
      } else if (key.starts_with("member ")) {
        std::string name = key.substr(7);
        strip(name);
        ref.member_overlays[name] = value;
      }
      // other "key: value" comments are provenance notes
      continue;
    }
    const auto cells = split_csv(line);
    if (!header_seen) {
      if (cells.empty() || cells.front() != "period") {
        throw std::runtime_error(fmt::format("reference line {}: header must start with 'period'", lineno));
      }
      ref.columns.assign(cells.begin() + 1, cells.end());
      header_seen = true;
      continue;
    }
    if (cells.size() != ref.columns.size() + 1) {
      throw std::runtime_error(fmt::format("reference line {}: {} cells, expected {}", lineno, cells.size(), ref.columns.size() + 1));
    }
    const int row = static_cast<int>(parse_number(cells.front(), lineno)) - 1;
    if (row != ref.n_rows) throw std::runtime_error(fmt::format("reference line {}: periods must be consecutive from 1", lineno));
    ++ref.n_rows;
    for (std::size_t c = 1; c < cells.size(); ++c) {
      ReferenceCell cell;
      cell.row = row;
      cell.column = ref.columns[c - 1];
      if (cells[c] == "OFF") {
        cell.kind = CellKind::OffFlag;
        cell.off = true;
      } else {
        cell.kind = CellKind::Exact;
        cell.value = parse_number(cells[c], lineno);
      }
      ref.cells.push_back(std::move(cell));
    }
  }

  if (ref.subject == ReferenceTable::Subject::Ordering) {
    // "a > b >= c"
    std::istringstream cs(chain);
    std::string tok;
    bool expect_member = true;
    while (cs >> tok) {
      if (expect_member) {
        ref.chain.push_back({tok, false});
      } else if (tok == ">" || tok == ">=") {
        ref.chain.back().strict = tok == ">";
      } else {
        throw std::runtime_error(fmt::format("reference chain: expected '>' or '>=', got '{}'", tok));
      }
      expect_member = !expect_member;
    }
    if (ref.chain.size() < 2 || expect_member) throw std::runtime_error("reference chain needs at least two members");
  } else if (!header_seen) {
    throw std::runtime_error("reference table has no header row");
  }
  return ref;
}

std::string VerifyReport::summary() const {
  std::string out;
  for (const auto& c : cells) {
    if (!c.pass) out += fmt::format("FAIL {} {}: {}\n", c.row, c.column, c.detail);
  }
  out += fmt::format("{} of {} checks passed\n", static_cast<int>(cells.size()) - mismatches, cells.size());
  return out;
}

VerifyReport verify(const DispatchSolution& sol, const ReferenceTable& ref, const std::map<std::string, double>& chain_costs) {
  VerifyReport rep;
  auto record = [&](std::string row, std::string col, bool pass, std::string detail) {
    if (!pass) ++rep.mismatches;
    rep.cells.push_back({std::move(row), std::move(col), pass, std::move(detail)});
  };

  if (ref.subject == ReferenceTable::Subject::Ordering) {
    for (const auto& link : ref.chain) {
      if (!chain_costs.contains(link.member)) throw DimensionMismatch(fmt::format("no cost for chain member '{}'", link.member));
    }
    for (std::size_t i = 0; i + 1 < ref.chain.size(); ++i) {
      const auto& a = ref.chain[i];
      const auto& b = ref.chain[i + 1];
      const double ca = chain_costs.at(a.member), cb = chain_costs.at(b.member);
      const double tol = std::max(ref.tolerance, 1e-6) * std::max(1.0, std::abs(ca));
      const bool ok = a.strict ? ca > cb + tol : ca >= cb - tol;
      record(a.member, b.member, ok, fmt::format("{} {} {} expected, costs {} and {}", a.member, a.strict ? ">" : ">=", b.member, ca, cb));
    }
    return rep;
  }

  const bool flows = ref.subject == ReferenceTable::Subject::Flows;
  const auto& labels = flows ? sol.branch_labels : sol.generator_labels;
  if (ref.n_rows != sol.n_periods) {
    throw DimensionMismatch(fmt::format("reference has {} periods, solution {}", ref.n_rows, sol.n_periods));
  }
  std::vector<int> column_index;
  for (const auto& col : ref.columns) {
    const auto it = std::ranges::find(labels, col);
    if (it == labels.end()) throw DimensionMismatch(fmt::format("reference column '{}' not in solution", col));
    column_index.push_back(static_cast<int>(it - labels.begin()));
  }
  if (flows ? sol.branches.empty() : sol.outputs_mw.empty()) throw DimensionMismatch("solution has no values");

  auto actual = [&](int t, int c) { return flows ? sol.branch(t, c).flow_mw : sol.output_mw(t, c); };
  auto is_open = [&](int t, int c) { return flows && sol.branch(t, c).is_open; };

  if (ref.mode == CheckMode::RowTotals) {
    for (int t = 0; t < ref.n_rows; ++t) {
      double want = 0.0, got = 0.0;
      for (std::size_t c = 0; c < ref.columns.size(); ++c) {
        const auto& cell = ref.cells[static_cast<std::size_t>(t) * ref.columns.size() + c];
        if (cell.kind == CellKind::Exact) want += cell.value;
        if (!is_open(t, column_index[c])) got += actual(t, column_index[c]);
      }
      const bool ok = std::abs(want - got) <= ref.tolerance;
      record(fmt::format("period {}", t + 1), "total", ok, fmt::format("expected {}, got {}", want, got));
    }
    return rep;
  }

  for (std::size_t i = 0; i < ref.cells.size(); ++i) {
    const auto& cell = ref.cells[i];
    const int c = column_index[i % ref.columns.size()];
    const bool open = is_open(cell.row, c);
    const std::string row = fmt::format("period {}", cell.row + 1);
    if (cell.kind == CellKind::OffFlag || ref.mode == CheckMode::OffPattern) {
      const bool want_open = cell.kind == CellKind::OffFlag;
      record(row, cell.column, open == want_open, fmt::format("expected {}, got {}", want_open ? "OFF" : "ON", open ? "OFF" : "ON"));
      continue;
    }
    if (open) {
      record(row, cell.column, false, fmt::format("expected {}, got OFF", cell.value));
      continue;
    }
    const double got = actual(cell.row, c);
    record(row, cell.column, std::abs(got - cell.value) <= ref.tolerance, fmt::format("expected {}, got {}", cell.value, got));
  }
  return rep;
}

SolveResult solve_tie_broken(const Problem& problem, const SolveResult& optimum, const SolveOptions& options) {
  if (optimum.status != SolveStatus::Optimal) return optimum;
  const MilpModel& base = problem.model;
  LinExpr cost(base.objective_offset());
  for (const auto& [v, c] : base.objective()) cost.add(v, c);

  LinExpr open_count, shifts;
  std::vector<VarRef> phis;
  for (const auto& v : problem.block.branch) {
    if (v.tra.is_var()) open_count.add(v.tra.var, 1.0);
    if (v.phi.is_var()) phis.push_back(v.phi.var);
  }
  if (open_count.terms().empty() && phis.empty()) return optimum;

  const double slack = std::max(options.gap_tol, 1e-9) * std::max(1.0, std::abs(optimum.objective));
  MilpModel m = base;
  m.add_constraint(cost, Sense::LessEqual, optimum.objective + slack, "tiebreak_cost");
  SolveResult last = optimum;

  if (!open_count.terms().empty()) {
    m.set_objective(open_count);
    const SolveResult r = solve_milp(m, options);
    if (r.status != SolveStatus::Optimal) return optimum;
    m.add_constraint(open_count, Sense::LessEqual, std::round(r.objective) + 0.5, "tiebreak_open");
    last = r;
  }
  if (!phis.empty()) {
    LinExpr total;
    for (VarRef phi : phis) {
      const std::string name = m.variable(phi).name;
      const VarRef a = m.add_variable("abs_" + name, 0.0, kInf);
      m.add_constraint(LinExpr(a) - phi, Sense::GreaterEqual, 0.0, "tiebreak_pos_" + name);
      m.add_constraint(LinExpr(a) + phi, Sense::GreaterEqual, 0.0, "tiebreak_neg_" + name);
      total.add(a, 1.0);
    }
    m.set_objective(total);
    const SolveResult r = solve_milp(m, options);
    if (r.status != SolveStatus::Optimal) return optimum;
    last = r;
  }
  last.values.resize(static_cast<std::size_t>(base.num_variables()));
  last.objective = base.evaluate(cost, last.values);
  last.row_duals.clear();
  last.reduced_costs.clear();
  return last;
}

}  // namespace flexdc
