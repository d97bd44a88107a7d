#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include <fmt/format.h>
#include <toml.hpp>

#include "flexdc/case_io.hpp"

namespace flexdc {
namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

class Reader {
 public:
  Reader(const toml::table& t, std::string where) : t_(t), where_(std::move(where)) {}

  template <typename T>
  std::optional<T> get(std::string_view key) {
    seen_.insert(std::string(key));
    const toml::node* n = t_.get(key);
    if (n == nullptr) return std::nullopt;
    if constexpr (std::is_same_v<T, double>) {
      if (auto v = n->value<double>()) return *v;  // also converts integers
    } else if constexpr (std::is_same_v<T, int>) {
      if (auto v = n->value<int64_t>()) return static_cast<int>(*v);
    } else if constexpr (std::is_same_v<T, bool>) {
      if (auto v = n->value<bool>()) return *v;
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (auto v = n->value<std::string>()) return *v;
    }
    throw OverlayError(fmt::format("{}: key '{}' has the wrong type", where_, key));
  }

  template <typename T>
  T require(std::string_view key) {
    auto v = get<T>(key);
    if (!v) throw OverlayError(fmt::format("{}: missing key '{}'", where_, key));
    return *v;
  }

  template <typename T>
  std::optional<std::vector<T>> array(std::string_view key) {
    seen_.insert(std::string(key));
    const toml::node* n = t_.get(key);
    if (n == nullptr) return std::nullopt;
    const toml::array* a = n->as_array();
    if (a == nullptr) throw OverlayError(fmt::format("{}: key '{}' must be an array", where_, key));
    std::vector<T> out;
    for (const auto& e : *a) {
      std::optional<T> v;
      if constexpr (std::is_same_v<T, double>) v = e.value<double>();
      else if constexpr (std::is_same_v<T, int>) {
        if (auto i = e.value<int64_t>()) v = static_cast<int>(*i);
      } else v = e.value<std::string>();
      if (!v) throw OverlayError(fmt::format("{}: bad element in '{}'", where_, key));
      out.push_back(*v);
    }
    return out;
  }

  const toml::table* table(std::string_view key) {
    seen_.insert(std::string(key));
    const toml::node* n = t_.get(key);
    if (n == nullptr) return nullptr;
    if (!n->is_table()) throw OverlayError(fmt::format("{}: '{}' must be a table", where_, key));
    return n->as_table();
  }

  const toml::array* table_array(std::string_view key) {
    seen_.insert(std::string(key));
    const toml::node* n = t_.get(key);
    if (n == nullptr) return nullptr;
    if (!n->is_array_of_tables()) throw OverlayError(fmt::format("{}: '{}' must be an array of tables", where_, key));
    return n->as_array();
  }

  std::optional<Typology> typology(std::string_view key) {
    const auto s = get<std::string>(key);
    if (!s) return std::nullopt;
    const auto t = parse_typology(*s);
    if (!t) throw OverlayError(fmt::format("{}: unknown typology '{}'", where_, *s));
    return t;
  }

  // Unknown keys are errors: a typo must not silently drop an edit.
  void finish() const {
    for (const auto& [k, v] : t_) {
      if (!seen_.contains(std::string(k.str()))) throw OverlayError(fmt::format("{}: unknown key '{}'", where_, k.str()));
    }
  }

 private:
  const toml::table& t_;
  std::string where_;
  std::set<std::string> seen_;
};

BranchEdit read_branch_edit(const toml::table& t, std::size_t i) {
  Reader r(t, fmt::format("[[branch]] #{}", i + 1));
  BranchEdit e;
  e.from_bus = r.require<int>("from");
  e.to_bus = r.require<int>("to");
  e.circuit = r.get<int>("circuit");
  e.typology = r.typology("typology");
  e.b_range_percent = r.get<double>("b_range_percent");
  e.b_min = r.get<double>("b_min");
  e.b_max = r.get<double>("b_max");
  if (auto s = r.get<double>("phi_range_deg")) {
    e.phi_min_deg = -std::abs(*s);
    e.phi_max_deg = std::abs(*s);
  }
  if (auto v = r.get<double>("phi_min_deg")) e.phi_min_deg = v;
  if (auto v = r.get<double>("phi_max_deg")) e.phi_max_deg = v;
  e.delta_max_deg = r.get<double>("delta_max_deg");
  e.capacity_mw = r.get<double>("capacity_mw");
  e.switchable = r.get<bool>("switchable");
  e.open = r.get<bool>("open");
  r.finish();
  if (e.b_range_percent && (*e.b_range_percent < 0.0 || *e.b_range_percent >= 100.0)) {
    throw OverlayError(fmt::format("[[branch]] {}-{}: b_range_percent must lie in [0, 100)", e.from_bus, e.to_bus));
  }
  if (e.b_range_percent && (e.b_min || e.b_max)) {
    throw OverlayError(fmt::format("[[branch]] {}-{}: give b_range_percent or b_min/b_max, not both", e.from_bus, e.to_bus));
  }
  return e;
}

GeneratorEdit read_generator_edit(const toml::table& t, std::size_t i) {
  Reader r(t, fmt::format("[[generator]] #{}", i + 1));
  GeneratorEdit g;
  g.bus = r.require<int>("bus");
  g.p_min = r.get<double>("p_min");
  g.p_max = r.get<double>("p_max");
  g.ramp_up = r.get<double>("ramp_up");
  g.ramp_down = r.get<double>("ramp_down");
  g.startup_ramp = r.get<double>("startup_ramp");
  g.shutdown_ramp = r.get<double>("shutdown_ramp");
  g.fixed_cost = r.get<double>("fixed_cost");
  g.startup_cost = r.get<double>("startup_cost");
  g.shutdown_cost = r.get<double>("shutdown_cost");
  g.variable_cost = r.get<double>("variable_cost");
  g.quadratic_cost = r.get<double>("quadratic_cost");
  g.initially_on = r.get<bool>("initially_on");
  r.finish();
  return g;
}

}  // namespace

FlexOverlay parse_overlay(std::string_view text) {
  toml::table root;
  try {
    root = toml::parse(text);
  } catch (const toml::parse_error& e) {
    throw OverlayError(fmt::format("overlay line {}: {}", e.source().begin.line, e.description()));
  }
  FlexOverlay o;
  Reader top(root, "overlay");

  if (const toml::table* h = top.table("horizon")) {
    Reader r(*h, "[horizon]");
    const auto mult = r.array<double>("load_multipliers");
    o.horizon.n_periods = r.get<int>("periods").value_or(mult ? static_cast<int>(mult->size()) : 1);
    o.horizon.load_multipliers = mult.value_or(std::vector<double>(static_cast<std::size_t>(std::max(o.horizon.n_periods, 0)), 1.0));
    o.horizon.reserve_fraction = r.get<double>("reserve_fraction").value_or(0.0);
    r.finish();
    if (const auto v = validate_horizon(o.horizon); !v.empty()) throw OverlayError("[horizon]: " + v.front().message);
  }

  if (const toml::table* n = top.table("network")) {
    Reader r(*n, "[network]");
    o.global_switching = r.get<bool>("global_switching").value_or(false);
    if (auto types = r.array<std::string>("switchable_typologies")) {
      for (const auto& s : *types) {
        const auto t = parse_typology(s);
        if (!t) throw OverlayError(fmt::format("[network]: unknown typology '{}'", s));
        o.switchable_typologies.push_back(*t);
      }
    }
    o.default_rate_mw = r.get<double>("default_rate_mw");
    o.default_delta_max_deg = r.get<double>("default_delta_max_deg");
    o.angle_ceiling_deg = r.get<double>("angle_ceiling_deg");
    o.cost_segments = r.get<int>("cost_segments");
    o.generator_buses = r.array<int>("generator_buses");
    r.finish();
    if (o.cost_segments && *o.cost_segments < 1) throw OverlayError("[network]: cost_segments must be >= 1");
  }

  if (const toml::table* z = top.table("zil_detection")) {
    Reader r(*z, "[zil_detection]");
    ZilRule rule;
    rule.voltage_kv = r.require<double>("voltage_kv");
    rule.max_reactance = r.require<double>("max_reactance");
    rule.require_lossless = r.get<bool>("require_lossless").value_or(true);
    r.finish();
    o.zil_detection = rule;
  }

  if (const toml::array* rules = top.table_array("zone_rule")) {
    for (std::size_t i = 0; i < rules->size(); ++i) {
      Reader r(*rules->at(i).as_table(), fmt::format("[[zone_rule]] #{}", i + 1));
      ZoneRule rule;
      rule.zone = r.get<int>("zone");
      rule.typology = r.typology("typology").value_or(Typology::Vssa);
      rule.b_range_percent = r.get<double>("b_range_percent");
      rule.phi_range_deg = r.get<double>("phi_range_deg");
      r.finish();
      o.zone_rules.push_back(rule);
    }
  }

  if (const toml::array* edits = top.table_array("branch")) {
    for (std::size_t i = 0; i < edits->size(); ++i) o.branch_edits.push_back(read_branch_edit(*edits->at(i).as_table(), i));
  }
  if (const toml::array* edits = top.table_array("generator")) {
    for (std::size_t i = 0; i < edits->size(); ++i) o.generator_edits.push_back(read_generator_edit(*edits->at(i).as_table(), i));
  }
  top.finish();
  return o;
}

namespace {

struct Retype {
  Typology typology = Typology::FixedAc;
  std::optional<double> b_range_percent{}, b_min{}, b_max{};
  std::optional<double> phi_min_deg{}, phi_max_deg{};
  std::optional<double> delta_max_deg{};
  std::optional<double> capacity_mw{};
};

// Typology parameter vector for `r`, computed from the branch's raw data so
// that re-applying gives the same result.
void set_typology(BranchParams& b, const Retype& r, double default_delta_max, double angle_spread,
                  double throughput_mw) {
  const double b0 = 1.0 / b.x;
  b.typology = r.typology;
  b.p_c = 0.0;
  b.phi_min = b.phi_max = 0.0;
  b.b_min = b.b_max = b0;
  b.delta_max = r.delta_max_deg ? *r.delta_max_deg * kDeg : default_delta_max;
  const auto capacity = [&] {
    if (r.capacity_mw) return *r.capacity_mw;
    return std::isfinite(b.f_max) ? b.f_max : throughput_mw;
  };
  switch (r.typology) {
    case Typology::FixedAc:
      if (r.capacity_mw) b.f_max = *r.capacity_mw;
      break;
    case Typology::Vssa:
      if (r.b_range_percent) {
        b.b_min = b0 * (1.0 - *r.b_range_percent / 100.0);
        b.b_max = b0 * (1.0 + *r.b_range_percent / 100.0);
      }
      if (r.b_min) b.b_min = *r.b_min;
      if (r.b_max) b.b_max = *r.b_max;
      if (r.phi_min_deg) b.phi_min = *r.phi_min_deg * kDeg;
      if (r.phi_max_deg) b.phi_max = *r.phi_max_deg * kDeg;
      if (r.capacity_mw) b.f_max = *r.capacity_mw;
      break;
    case Typology::Hvdc:
      b.b_min = b.b_max = 0.0;
      b.p_c = capacity();
      if (!std::isfinite(b.f_max) || r.capacity_mw) b.f_max = b.p_c;
      if (!r.delta_max_deg) b.delta_max = angle_spread;
      break;
    case Typology::Zil:
      b.b_min = b.b_max = 0.0;
      b.p_c = capacity();
      if (!std::isfinite(b.f_max) || r.capacity_mw) b.f_max = b.p_c;
      b.delta_max = 0.0;
      break;
  }
}

bool zone_rule_matches(const ZoneRule& rule, int zf, int zt) {
  if (zf == zt) return false;
  if (!rule.zone) return true;
  return (zf == *rule.zone) != (zt == *rule.zone);
}

}  // namespace

Scenario apply_overlay(const SystemCase& base, const FlexOverlay& o) {
  Scenario s{base, o.horizon};
  SystemCase& c = s.system;
  if (o.cost_segments) c.cost_segments = *o.cost_segments;
  if (o.angle_ceiling_deg) c.angle_ceiling = *o.angle_ceiling_deg * kDeg;
  const double default_delta = o.default_delta_max_deg ? *o.default_delta_max_deg * kDeg : kDefaultDeltaMax;

  if (o.generator_buses) {
    const std::set<int> keep(o.generator_buses->begin(), o.generator_buses->end());
    for (int bus : keep) {
      if (std::ranges::none_of(c.generators, [&](const Generator& g) { return g.bus == bus; })) {
        throw OverlayError(fmt::format("generator_buses: no generator at bus {}", bus));
      }
    }
    std::erase_if(c.generators, [&](const Generator& g) { return !keep.contains(g.bus); });
  }
  std::set<int> edited_gen_buses;
  for (const auto& e : o.generator_edits) {
    if (!edited_gen_buses.insert(e.bus).second) throw ConflictingEdit(fmt::format("two [[generator]] edits for bus {}", e.bus));
    bool found = false;
    for (auto& g : c.generators) {
      if (g.bus != e.bus) continue;
      found = true;
      if (e.p_min) g.p_min = *e.p_min;
      if (e.p_max) g.p_max = *e.p_max;
      if (e.ramp_up) g.ramp_up = *e.ramp_up;
      if (e.ramp_down) g.ramp_down = *e.ramp_down;
      if (e.startup_ramp) g.startup_ramp = *e.startup_ramp;
      if (e.shutdown_ramp) g.shutdown_ramp = *e.shutdown_ramp;
      if (e.fixed_cost) g.fixed_cost = *e.fixed_cost;
      if (e.startup_cost) g.startup_cost = *e.startup_cost;
      if (e.shutdown_cost) g.shutdown_cost = *e.shutdown_cost;
      if (e.variable_cost) {
        g.variable_cost = *e.variable_cost;
        g.quadratic_cost = e.quadratic_cost.value_or(0.0);  // a linear price replaces the file's curve
      } else if (e.quadratic_cost) {
        g.quadratic_cost = *e.quadratic_cost;
      }
      if (e.initially_on) g.initially_on = *e.initially_on;
    }
    if (!found) throw OverlayError(fmt::format("[[generator]]: no generator at bus {}", e.bus));
  }

  double throughput = 0.0;
  for (const auto& g : c.generators) throughput += g.p_max;

  // Reset every branch to its file-derived FIXED_AC state.
  for (auto& b : c.branches) {
    b.f_max = b.rate_a > 0.0 ? b.rate_a : o.default_rate_mw.value_or(kInf);
    b.switchable = !b.in_service;
    set_typology(b, Retype{}, default_delta, c.angle_spread(), throughput);
  }

  if (o.zil_detection) {
    const ZilRule& z = *o.zil_detection;
    for (auto& b : c.branches) {
      const int f = c.bus_index(b.from_bus), t = c.bus_index(b.to_bus);
      if (f < 0 || t < 0) continue;
      const bool kv = c.buses[static_cast<std::size_t>(f)].base_kv == z.voltage_kv &&
                      c.buses[static_cast<std::size_t>(t)].base_kv == z.voltage_kv;
      const bool lossless = !z.require_lossless || (b.r == 0.0 && b.charging == 0.0);
      if (kv && lossless && std::abs(b.x) <= z.max_reactance * (1.0 + 1e-9)) {
        set_typology(b, Retype{.typology = Typology::Zil}, default_delta, c.angle_spread(), throughput);
      }
    }
  }

  if (!o.zone_rules.empty()) {
    for (auto& b : c.branches) {
      const int f = c.bus_index(b.from_bus), t = c.bus_index(b.to_bus);
      if (f < 0 || t < 0) continue;
      const int zf = c.buses[static_cast<std::size_t>(f)].zone, zt = c.buses[static_cast<std::size_t>(t)].zone;
      for (const auto& rule : o.zone_rules) {
        if (!zone_rule_matches(rule, zf, zt)) continue;
        Retype r{.typology = rule.typology, .b_range_percent = rule.b_range_percent};
        if (rule.phi_range_deg) {
          r.phi_min_deg = -std::abs(*rule.phi_range_deg);
          r.phi_max_deg = std::abs(*rule.phi_range_deg);
        }
        set_typology(b, r, default_delta, c.angle_spread(), throughput);
        break;
      }
    }
  }

  std::vector<int> edited(c.branches.size(), 0);
  for (std::size_t i = 0; i < o.branch_edits.size(); ++i) {
    const BranchEdit& e = o.branch_edits[i];
    std::vector<std::size_t> matches;
    for (std::size_t k = 0; k < c.branches.size(); ++k) {
      const auto& b = c.branches[k];
      if ((b.from_bus == e.from_bus && b.to_bus == e.to_bus) || (b.from_bus == e.to_bus && b.to_bus == e.from_bus)) {
        matches.push_back(k);
      }
    }
    if (e.circuit) {
      if (*e.circuit < 1 || static_cast<std::size_t>(*e.circuit) > matches.size()) {
        throw UnknownBranch(fmt::format("branch {}-{} circuit {} not in case ({} parallel branches)", e.from_bus, e.to_bus,
                                        *e.circuit, matches.size()));
      }
      matches = {matches[static_cast<std::size_t>(*e.circuit - 1)]};
    }
    if (matches.empty()) throw UnknownBranch(fmt::format("branch {}-{} not in case", e.from_bus, e.to_bus));
    for (std::size_t k : matches) {
      if (edited[k] != 0) {
        throw ConflictingEdit(fmt::format("branch {} ({}) edited by [[branch]] #{} and #{}", k + 1,
                                          branch_label(c.branches[k]), edited[k], i + 1));
      }
      edited[k] = static_cast<int>(i + 1);
      auto& b = c.branches[k];
      const bool has_flex = e.b_range_percent || e.b_min || e.b_max || e.phi_min_deg || e.phi_max_deg;
      const bool retype = e.typology || has_flex || e.capacity_mw || e.delta_max_deg;
      if (retype) {
        const Typology t = e.typology.value_or(has_flex ? Typology::Vssa : b.typology);
        if (has_flex && t != Typology::Vssa) {
          throw OverlayError(fmt::format("branch {}-{}: susceptance/shift ranges need typology vssa", e.from_bus, e.to_bus));
        }
        set_typology(b, Retype{t, e.b_range_percent, e.b_min, e.b_max, e.phi_min_deg, e.phi_max_deg, e.delta_max_deg, e.capacity_mw},
                     default_delta, c.angle_spread(), throughput);
      }
      if (e.open && *e.open) b.in_service = false;
      if (e.switchable) b.switchable = *e.switchable;
    }
  }

  for (auto& b : c.branches) {
    if (o.global_switching || std::ranges::find(o.switchable_typologies, b.typology) != o.switchable_typologies.end()) {
      b.switchable = true;
    }
    if (!b.in_service) b.switchable = true;
  }
  return s;
}

}  // namespace flexdc
