#include <charconv>
#include <cmath>
#include <map>
#include <sstream>

#include <fmt/format.h>

#include "flexdc/case_io.hpp"

namespace flexdc {

MalformedCase::MalformedCase(int line, const std::string& what)
    : std::runtime_error(line > 0 ? fmt::format("line {}: {}", line, what) : what), line_(line) {}

namespace {

struct Matrix {
  int line = 0;  // where the assignment starts
  std::vector<std::vector<double>> rows;
  std::vector<int> row_lines;
};

double parse_token(std::string_view tok, int line) {
  double v = 0.0;
  const auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || p != tok.data() + tok.size()) {
    if (tok == "Inf" || tok == "inf") return kInf;
    if (tok == "-Inf" || tok == "-inf") return -kInf;
    throw MalformedCase(line, fmt::format("non-numeric token '{}'", tok));
  }
  return v;
}

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

// Splits the whole file into mpc.<name> matrices and scalars.
struct Document {
  std::map<std::string, Matrix, std::less<>> matrices;
  std::map<std::string, std::pair<double, int>, std::less<>> scalars;
};

Document scan(std::string_view text) {
  Document doc;
  Matrix* open = nullptr;
  bool in_cell = false;
  std::vector<double> row;
  int row_line = 0;

  auto flush_row = [&](int line) {
    if (!row.empty()) {
      open->rows.push_back(std::move(row));
      open->row_lines.push_back(row_line);
      row.clear();
    }
    row_line = line;
  };
  // Consumes matrix body text; returns true when the closing bracket is seen.
  auto consume = [&](std::string_view body, int line) {
    std::size_t i = 0;
    if (row.empty()) row_line = line;
    while (i < body.size()) {
      const char c = body[i];
      if (c == ']') {
        flush_row(line);
        return true;
      }
      if (c == ';') {
        flush_row(line);
        ++i;
        continue;
      }
      if (c == ' ' || c == '\t' || c == ',' || c == '\r') {
        ++i;
        continue;
      }
      if (c == '.' && body.substr(i, 3) == "...") break;  // continuation
      std::size_t j = i;
      while (j < body.size() && std::string_view(" \t,;]\r").find(body[j]) == std::string_view::npos) ++j;
      if (row.empty()) row_line = line;
      row.push_back(parse_token(body.substr(i, j - i), line));
      i = j;
    }
    return false;
  };

  std::istringstream in{std::string(text)};
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    std::string_view line = raw;
    if (const auto pct = line.find('%'); pct != std::string_view::npos) line = line.substr(0, pct);
    line = trim(line);
    if (open != nullptr) {
      if (line.empty()) continue;
      // Newlines terminate rows inside a matrix, as in MATLAB.
      if (consume(line, lineno)) open = nullptr;
      else flush_row(lineno);
      continue;
    }
    if (in_cell) {
      if (line.find('}') != std::string_view::npos) in_cell = false;
      continue;
    }
    if (!line.starts_with("mpc.")) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw MalformedCase(lineno, "expected '=' after field name");
    const std::string name(trim(line.substr(4, eq - 4)));
    std::string_view rhs = trim(line.substr(eq + 1));
    if (rhs.starts_with("[")) {
      if (doc.matrices.contains(name)) throw MalformedCase(lineno, fmt::format("mpc.{} assigned twice", name));
      open = &doc.matrices[name];
      open->line = lineno;
      row.clear();
      if (consume(rhs.substr(1), lineno)) open = nullptr;
      else if (!row.empty()) flush_row(lineno);
    } else if (rhs.starts_with("{")) {
      in_cell = rhs.find('}') == std::string_view::npos;
    } else if (rhs.starts_with("'")) {
      // string field (mpc.version)
    } else {
      if (rhs.ends_with(";")) rhs = trim(rhs.substr(0, rhs.size() - 1));
      doc.scalars[name] = {parse_token(rhs, lineno), lineno};
    }
  }
  if (open != nullptr) throw MalformedCase(open->line, "unterminated matrix (missing ']')");
  return doc;
}

const Matrix& require(const Document& doc, std::string_view name, std::size_t min_cols, int last_line) {
  const auto it = doc.matrices.find(name);
  if (it == doc.matrices.end()) throw MalformedCase(last_line, fmt::format("missing matrix mpc.{}", name));
  const Matrix& m = it->second;
  if (m.rows.empty()) throw MalformedCase(m.line, fmt::format("mpc.{} is empty", name));
  const std::size_t width = m.rows.front().size();
  for (std::size_t r = 0; r < m.rows.size(); ++r) {
    if (m.rows[r].size() != width) {
      throw MalformedCase(m.row_lines[r], fmt::format("ragged row in mpc.{}: {} columns, expected {}", name,
                                                      m.rows[r].size(), width));
    }
  }
  if (width < min_cols) {
    throw MalformedCase(m.line, fmt::format("mpc.{} has {} columns, need at least {}", name, width, min_cols));
  }
  return m;
}

int as_int(double v, int line, std::string_view what) {
  if (v != std::floor(v)) throw MalformedCase(line, fmt::format("{} must be an integer, got {}", what, v));
  return static_cast<int>(v);
}

}  // namespace

SystemCase parse_case(std::string_view text, std::vector<std::string>* warnings) {
  auto warn = [&](std::string msg) {
    if (warnings != nullptr) warnings->push_back(std::move(msg));
  };
  const int last_line = static_cast<int>(std::count(text.begin(), text.end(), '\n')) + 1;
  const Document doc = scan(text);

  SystemCase c;
  if (const auto it = doc.scalars.find("baseMVA"); it != doc.scalars.end()) {
    c.base_mva = it->second.first;
  } else {
    throw MalformedCase(last_line, "missing scalar mpc.baseMVA");
  }

  const Matrix& bus = require(doc, "bus", 13, last_line);
  for (std::size_t r = 0; r < bus.rows.size(); ++r) {
    const auto& row = bus.rows[r];
    const int line = bus.row_lines[r];
    Bus b;
    b.id = as_int(row[0], line, "bus id");
    b.type = as_int(row[1], line, "bus type");
    b.is_reference = b.type == 3;
    b.base_load = row[2];
    b.base_kv = row[9];
    b.zone = as_int(row[10], line, "zone");
    c.buses.push_back(b);
  }

  const Matrix& gen = require(doc, "gen", 10, last_line);
  for (std::size_t r = 0; r < gen.rows.size(); ++r) {
    const auto& row = gen.rows[r];
    Generator g;
    g.bus = as_int(row[0], gen.row_lines[r], "generator bus");
    g.in_service = row[7] > 0.0;
    g.initially_on = g.in_service;
    g.p_max = row[8];
    g.p_min = row[9];
    c.generators.push_back(g);
  }

  const Matrix& branch = require(doc, "branch", 11, last_line);
  for (std::size_t r = 0; r < branch.rows.size(); ++r) {
    const auto& row = branch.rows[r];
    const int line = branch.row_lines[r];
    BranchParams b;
    b.from_bus = as_int(row[0], line, "from bus");
    b.to_bus = as_int(row[1], line, "to bus");
    b.r = row[2];
    b.x = row[3];
    b.charging = row[4];
    b.rate_a = row[5];
    b.tap = row[8];
    b.shift_deg = row[9];
    b.in_service = row[10] > 0.0;
    b.switchable = !b.in_service;
    b.b_min = b.b_max = 1.0 / b.x;
    b.f_max = b.rate_a > 0.0 ? b.rate_a : kInf;
    if (b.tap != 0.0 && b.tap != 1.0) warn(fmt::format("line {}: branch {}-{} tap ratio {} ignored by the DC model", line, b.from_bus, b.to_bus, b.tap));
    if (b.shift_deg != 0.0) warn(fmt::format("line {}: branch {}-{} fixed phase shift {} deg ignored", line, b.from_bus, b.to_bus, b.shift_deg));
    c.branches.push_back(b);
  }

  if (!doc.matrices.contains("gencost")) {
    warn("no mpc.gencost: all generator costs are zero");
    return c;
  }
  const Matrix& cost = require(doc, "gencost", 4, last_line);
  if (cost.rows.size() < c.generators.size()) {
    throw MalformedCase(cost.line, fmt::format("mpc.gencost has {} rows for {} generators", cost.rows.size(), c.generators.size()));
  }
  if (cost.rows.size() > c.generators.size()) warn("extra mpc.gencost rows (reactive costs) ignored");
  for (std::size_t g = 0; g < c.generators.size(); ++g) {
    const auto& row = cost.rows[g];
    const int line = cost.row_lines[g];
    if (row[0] != 2.0) throw MalformedCase(line, "only polynomial gencost rows (model 2) are supported");
    const int n = as_int(row[3], line, "gencost n");
    if (n < 1 || n > 3) throw MalformedCase(line, fmt::format("polynomial of {} coefficients; at most quadratic is supported", n));
    if (row.size() < static_cast<std::size_t>(4 + n)) throw MalformedCase(line, "gencost row shorter than its coefficient count");
    auto& gen_g = c.generators[g];
    gen_g.startup_cost = row[1];
    gen_g.shutdown_cost = row[2];
    // Coefficients are stored highest order first.
    const double* coef = row.data() + 4;
    gen_g.fixed_cost = coef[n - 1];
    if (n >= 2) gen_g.variable_cost = coef[n - 2];
    if (n >= 3) gen_g.quadratic_cost = coef[0];
  }
  return c;
}

std::string write_case(const SystemCase& c, std::string_view name) {
  std::string out = fmt::format("function mpc = {}\nmpc.version = '2';\nmpc.baseMVA = {};\n\n", name, c.base_mva);
  out += "%\tbus_i\ttype\tPd\tQd\tGs\tBs\tarea\tVm\tVa\tbaseKV\tzone\tVmax\tVmin\nmpc.bus = [\n";
  for (const auto& b : c.buses) {
    out += fmt::format("\t{}\t{}\t{}\t0\t0\t0\t1\t1\t0\t{}\t{}\t1.1\t0.9;\n", b.id, b.type, b.base_load, b.base_kv, b.zone);
  }
  out += "];\n\n%\tbus\tPg\tQg\tQmax\tQmin\tVg\tmBase\tstatus\tPmax\tPmin\nmpc.gen = [\n";
  for (const auto& g : c.generators) {
    out += fmt::format("\t{}\t0\t0\t0\t0\t1\t{}\t{}\t{}\t{};\n", g.bus, c.base_mva, g.in_service ? 1 : 0, g.p_max, g.p_min);
  }
  out += "];\n\n%\tfbus\ttbus\tr\tx\tb\trateA\trateB\trateC\tratio\tangle\tstatus\tangmin\tangmax\nmpc.branch = [\n";
  for (const auto& b : c.branches) {
    out += fmt::format("\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t-360\t360;\n", b.from_bus, b.to_bus, b.r, b.x,
                       b.charging, b.rate_a, b.rate_a, b.rate_a, b.tap, b.shift_deg, b.in_service ? 1 : 0);
  }
  out += "];\n\n%\t2\tstartup\tshutdown\tn\tc2\tc1\tc0\nmpc.gencost = [\n";
  for (const auto& g : c.generators) {
    out += fmt::format("\t2\t{}\t{}\t3\t{}\t{}\t{};\n", g.startup_cost, g.shutdown_cost, g.quadratic_cost,
                       g.variable_cost, g.fixed_cost);
  }
  out += "];\n";
  return out;
}

}  // namespace flexdc
