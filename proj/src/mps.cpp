#include "flexdc/mps.hpp"

#include <charconv>
#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include <fmt/format.h>

namespace flexdc {
namespace {

constexpr std::size_t kMaxName = 255;
constexpr std::string_view kObjRow = "obj";

std::string num(double v) { return fmt::format("{:.17g}", v); }

// Allocates unique sanitized names, suffixing "~N" on collision.
class NameTable {
 public:
  explicit NameTable(std::vector<std::string>& warnings) : warnings_(warnings) {}
  std::string unique(std::string_view raw) {
    std::string base = sanitize_mps_name(raw);
    std::string name = base;
    for (int k = 1; used_.contains(name); ++k) {
      const std::string suffix = "~" + std::to_string(k);
      name = base.substr(0, kMaxName - suffix.size()) + suffix;
    }
    if (name != base) warnings_.push_back(fmt::format("name collision: '{}' written as '{}'", raw, name));
    used_.insert(name);
    return name;
  }

 private:
  std::vector<std::string>& warnings_;
  std::unordered_set<std::string> used_;
};

}  // namespace

std::string sanitize_mps_name(std::string_view name) {
  std::string out;
  for (char c : name.substr(0, kMaxName)) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                    std::string_view("_[]=,.()+-:~").find(c) != std::string_view::npos;
    out.push_back(ok ? c : '_');
  }
  if (out.empty()) out = "_";
  return out;
}

MpsDocument write_mps(const MilpModel& model, std::string_view name) {
  MpsDocument doc;
  NameTable names(doc.warnings);
  names.unique(kObjRow);  // reserve

  const auto rows = model.constraints();
  const auto vars = model.variables();
  std::vector<std::string> row_names;
  row_names.reserve(rows.size());
  for (const auto& r : rows) row_names.push_back(names.unique(r.name));
  std::vector<std::string> col_names;
  col_names.reserve(vars.size());
  for (const auto& v : vars) col_names.push_back(names.unique(v.name));

  // Column-major view of the rows.
  std::vector<std::vector<std::pair<int, double>>> columns(vars.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (const auto& [v, c] : rows[i].terms) columns[static_cast<std::size_t>(v.index)].emplace_back(static_cast<int>(i), c);
  }
  std::vector<double> obj(vars.size(), 0.0);
  for (const auto& [v, c] : model.objective()) obj[static_cast<std::size_t>(v.index)] = c;

  std::ostringstream out;
  out << "NAME " << sanitize_mps_name(name) << "\n";
  out << "ROWS\n N " << kObjRow << "\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const char* tag = rows[i].sense == Sense::LessEqual ? "L" : rows[i].sense == Sense::GreaterEqual ? "G" : "E";
    out << " " << tag << " " << row_names[i] << "\n";
  }
  out << "COLUMNS\n";
  bool in_int = false;
  int marker = 0;
  for (std::size_t j = 0; j < vars.size(); ++j) {
    const bool is_bin = vars[j].kind == VarKind::Binary;
    if (is_bin != in_int) {
      out << " MARKER" << marker++ << " 'MARKER' " << (is_bin ? "'INTORG'" : "'INTEND'") << "\n";
      in_int = is_bin;
    }
    if (obj[j] != 0.0 || columns[j].empty()) out << " " << col_names[j] << " " << kObjRow << " " << num(obj[j]) << "\n";
    for (const auto& [i, c] : columns[j]) {
      out << " " << col_names[j] << " " << row_names[static_cast<std::size_t>(i)] << " " << num(c) << "\n";
    }
  }
  if (in_int) out << " MARKER" << marker++ << " 'MARKER' 'INTEND'\n";

  out << "RHS\n";
  if (model.objective_offset() != 0.0) out << " RHS " << kObjRow << " " << num(-model.objective_offset()) << "\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].rhs != 0.0) out << " RHS " << row_names[i] << " " << num(rows[i].rhs) << "\n";
  }

  out << "BOUNDS\n";
  for (std::size_t j = 0; j < vars.size(); ++j) {
    const auto& v = vars[j];
    const auto& n = col_names[j];
    if (v.kind == VarKind::Binary) {
      out << " BV BND " << n << "\n";
      if (v.lower != 0.0) out << " LO BND " << n << " " << num(v.lower) << "\n";
      if (v.upper != 1.0) out << " UP BND " << n << " " << num(v.upper) << "\n";
      continue;
    }
    if (v.lower == v.upper) {
      out << " FX BND " << n << " " << num(v.lower) << "\n";
    } else if (std::isinf(v.lower) && std::isinf(v.upper)) {
      out << " FR BND " << n << "\n";
    } else {
      if (std::isinf(v.lower)) {
        out << " MI BND " << n << "\n";
      } else if (v.lower != 0.0) {
        out << " LO BND " << n << " " << num(v.lower) << "\n";
      }
      if (!std::isinf(v.upper)) out << " UP BND " << n << " " << num(v.upper) << "\n";
    }
  }
  out << "ENDATA\n";
  doc.text = out.str();
  return doc;
}

MilpModel read_mps(std::string_view text) {
  MilpModel model;
  enum class Section { None, Rows, Columns, Rhs, Bounds, Done } section = Section::None;
  std::string obj_row;
  std::vector<std::string> row_order;
  std::unordered_map<std::string, std::pair<Sense, int>> row_info;
  std::vector<LinExpr> row_expr;
  std::vector<double> rhs;
  std::unordered_map<std::string, VarRef> cols;
  std::vector<double> obj_coef;
  LinExpr objective;
  double offset = 0.0;
  bool in_int = false;

  auto parse_num = [](const std::string& s, int line) {
    double v = 0.0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) {
      // from_chars rejects "inf"; accept the spellings writers commonly use.
      if (s == "inf" || s == "Inf" || s == "1e+30" || s == "1e30") return kInf;
      if (s == "-inf" || s == "-Inf" || s == "-1e+30" || s == "-1e30") return -kInf;
      throw std::runtime_error(fmt::format("MPS line {}: bad number '{}'", line, s));
    }
    return v;
  };
  auto column = [&](const std::string& name, int line) -> VarRef {
    auto it = cols.find(name);
    if (it == cols.end()) throw std::runtime_error(fmt::format("MPS line {}: unknown column '{}'", line, name));
    return it->second;
  };

  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '*') continue;
    std::istringstream ls(line);
    std::vector<std::string> tok;
    for (std::string t; ls >> t;) tok.push_back(t);
    if (tok.empty()) continue;
    if (line[0] != ' ' && line[0] != '\t') {
      const std::string& head = tok[0];
      if (head == "NAME") section = Section::None;
      else if (head == "ROWS") section = Section::Rows;
      else if (head == "COLUMNS") section = Section::Columns;
      else if (head == "RHS") section = Section::Rhs;
      else if (head == "BOUNDS") section = Section::Bounds;
      else if (head == "ENDATA") section = Section::Done;
      else throw std::runtime_error(fmt::format("MPS line {}: unsupported section '{}'", lineno, head));
      continue;
    }
    switch (section) {
      case Section::Rows: {
        if (tok.size() != 2) throw std::runtime_error(fmt::format("MPS line {}: bad ROWS entry", lineno));
        if (tok[0] == "N") {
          if (obj_row.empty()) obj_row = tok[1];
          continue;
        }
        if (tok[0] != "L" && tok[0] != "G" && tok[0] != "E") {
          throw std::runtime_error(fmt::format("MPS line {}: unknown row type '{}'", lineno, tok[0]));
        }
        const Sense s = tok[0] == "L" ? Sense::LessEqual : tok[0] == "G" ? Sense::GreaterEqual : Sense::Equal;
        row_info[tok[1]] = {s, static_cast<int>(row_order.size())};
        row_order.push_back(tok[1]);
        row_expr.emplace_back();
        rhs.push_back(0.0);
        break;
      }
      case Section::Columns: {
        if (tok.size() >= 3 && tok[1] == "'MARKER'") {
          in_int = tok[2] == "'INTORG'";
          continue;
        }
        if (tok.size() != 3 && tok.size() != 5) throw std::runtime_error(fmt::format("MPS line {}: bad COLUMNS entry", lineno));
        auto it = cols.find(tok[0]);
        if (it == cols.end()) {
          const VarRef v = in_int ? model.add_binary(tok[0]) : model.add_variable(tok[0], 0.0, kInf);
          it = cols.emplace(tok[0], v).first;
        }
        for (std::size_t k = 1; k + 1 < tok.size(); k += 2) {
          const double c = parse_num(tok[k + 1], lineno);
          if (tok[k] == obj_row) {
            objective.add(it->second, c);
          } else {
            auto r = row_info.find(tok[k]);
            if (r == row_info.end()) throw std::runtime_error(fmt::format("MPS line {}: unknown row '{}'", lineno, tok[k]));
            row_expr[static_cast<std::size_t>(r->second.second)].add(it->second, c);
          }
        }
        break;
      }
      case Section::Rhs: {
        for (std::size_t k = 1; k + 1 < tok.size(); k += 2) {
          const double v = parse_num(tok[k + 1], lineno);
          if (tok[k] == obj_row) {
            offset = -v;
          } else {
            auto r = row_info.find(tok[k]);
            if (r == row_info.end()) throw std::runtime_error(fmt::format("MPS line {}: unknown row '{}'", lineno, tok[k]));
            rhs[static_cast<std::size_t>(r->second.second)] = v;
          }
        }
        break;
      }
      case Section::Bounds: {
        if (tok.size() < 3) throw std::runtime_error(fmt::format("MPS line {}: bad BOUNDS entry", lineno));
        const VarRef v = column(tok[2], lineno);
        const auto& var = model.variable(v);
        double lo = var.lower, up = var.upper;
        const std::string& kind = tok[0];
        const double val = tok.size() > 3 ? parse_num(tok[3], lineno) : 0.0;
        if (kind == "LO") lo = val;
        else if (kind == "UP") up = val;
        else if (kind == "FX") lo = up = val;
        else if (kind == "FR") { lo = -kInf; up = kInf; }
        else if (kind == "MI") lo = -kInf;
        else if (kind == "PL") up = kInf;
        else if (kind == "BV") { lo = 0.0; up = 1.0; }
        else throw std::runtime_error(fmt::format("MPS line {}: unsupported bound '{}'", lineno, kind));
        // Binary columns may be pinned by LO/UP after BV; keep bounds ordered.
        if (lo > up) throw std::runtime_error(fmt::format("MPS line {}: crossing bounds", lineno));
        model.set_bounds(v, lo, up);
        break;
      }
      case Section::None:
      case Section::Done:
        break;
    }
  }
  if (section != Section::Done) throw std::runtime_error("MPS: missing ENDATA");
  for (std::size_t i = 0; i < row_order.size(); ++i) {
    model.add_constraint(row_expr[i], row_info[row_order[i]].first, rhs[i], row_order[i]);
  }
  objective += LinExpr(offset);
  model.set_objective(objective);
  return model;
}

}  // namespace flexdc
