#include "flexdc/network.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <queue>
#include <unordered_map>

#include <fmt/format.h>

namespace flexdc {

std::string_view to_string(Typology t) {
  switch (t) {
    case Typology::FixedAc: return "fixed_ac";
    case Typology::Vssa: return "vssa";
    case Typology::Hvdc: return "hvdc";
    case Typology::Zil: return "zil";
  }
  return "?";
}

std::optional<Typology> parse_typology(std::string_view s) {
  std::string lower(s);
  std::ranges::transform(lower, lower.begin(), [](unsigned char c) { return std::tolower(c); });
  if (lower == "fixed_ac" || lower == "ac") return Typology::FixedAc;
  if (lower == "vssa" || lower == "pst" || lower == "tscs") return Typology::Vssa;
  if (lower == "hvdc") return Typology::Hvdc;
  if (lower == "zil") return Typology::Zil;
  return std::nullopt;
}

int SystemCase::bus_index(int id) const {
  for (std::size_t i = 0; i < buses.size(); ++i) {
    if (buses[i].id == id) return static_cast<int>(i);
  }
  return -1;
}

int SystemCase::reference_index() const {
  for (std::size_t i = 0; i < buses.size(); ++i) {
    if (buses[i].is_reference) return static_cast<int>(i);
  }
  return -1;
}

Eigen::SparseMatrix<double> SystemCase::cft() const {
  std::unordered_map<int, int> index;
  for (std::size_t i = 0; i < buses.size(); ++i) index.emplace(buses[i].id, static_cast<int>(i));
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(2 * branches.size());
  for (std::size_t k = 0; k < branches.size(); ++k) {
    const auto from = index.find(branches[k].from_bus);
    const auto to = index.find(branches[k].to_bus);
    if (from != index.end()) t.emplace_back(static_cast<int>(k), from->second, 1.0);
    if (to != index.end()) t.emplace_back(static_cast<int>(k), to->second, -1.0);
  }
  Eigen::SparseMatrix<double> m(static_cast<Eigen::Index>(branches.size()), static_cast<Eigen::Index>(buses.size()));
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

double SystemCase::angle_spread() const {
  return std::min(static_cast<double>(buses.size()) * kDefaultDeltaMax, angle_ceiling);
}

double SystemCase::total_load() const {
  double s = 0.0;
  for (const auto& b : buses) s += b.base_load;
  return s;
}

std::string branch_label(const BranchParams& b) { return fmt::format("{}-{}", b.from_bus, b.to_bus); }

namespace {

std::string branch_subject(const SystemCase& c, std::size_t k) {
  return fmt::format("branch {} ({})", k + 1, branch_label(c.branches[k]));
}

void check_branch(const SystemCase& c, std::size_t k, std::vector<CaseViolation>& out) {
  const auto& b = c.branches[k];
  auto fail = [&](std::string msg) { out.push_back({branch_subject(c, k), std::move(msg)}); };
  if (c.bus_index(b.from_bus) < 0 || c.bus_index(b.to_bus) < 0) fail("terminal bus not in case");
  if (b.from_bus == b.to_bus) fail("from and to bus coincide");
  if (!(b.b_min >= 0.0) || !(b.b_min <= b.b_max)) fail(fmt::format("need 0 <= b_min <= b_max, got [{}, {}]", b.b_min, b.b_max));
  if (!(b.phi_min <= 0.0 && 0.0 <= b.phi_max)) fail("need phi_min <= 0 <= phi_max");
  if (!(b.f_max > 0.0)) fail(fmt::format("need f_max > 0, got {}", b.f_max));
  if (!(b.delta_max >= 0.0)) fail("need delta_max >= 0");
  switch (b.typology) {
    case Typology::FixedAc:
      if (b.b_min != b.b_max) fail("FIXED_AC requires b_min = b_max");
      if (b.phi_min != 0.0 || b.phi_max != 0.0) fail("FIXED_AC requires phi range {0}");
      [[fallthrough]];
    case Typology::Vssa:
      if (b.p_c != 0.0) fail("p_c must be 0 for FIXED_AC and VSSA");
      if (!(b.b_max > 0.0) || !std::isfinite(b.b_max)) fail("susceptance must be positive and finite");
      break;
    case Typology::Zil:
      if (b.delta_max != 0.0) fail("ZIL requires delta_max = 0");
      [[fallthrough]];
    case Typology::Hvdc:
      if (b.b_min != 0.0 || b.b_max != 0.0) fail(fmt::format("{} requires b_min = b_max = 0", to_string(b.typology)));
      if (!(b.p_c > 0.0) || !std::isfinite(b.p_c)) fail(fmt::format("{} requires finite p_c > 0", to_string(b.typology)));
      if (b.phi_min != 0.0 || b.phi_max != 0.0) fail(fmt::format("{} requires phi range {{0}}", to_string(b.typology)));
      break;
  }
}

}  // namespace

std::vector<CaseViolation> validate_case(const SystemCase& c) {
  std::vector<CaseViolation> out;
  if (!(c.base_mva > 0.0)) out.push_back({"case", "base_mva must be positive"});
  if (c.cost_segments < 1) out.push_back({"case", "cost_segments must be >= 1"});

  std::vector<int> refs;
  std::unordered_map<int, int> seen;
  for (const auto& b : c.buses) {
    if (b.is_reference) refs.push_back(b.id);
    if (!(b.base_load >= 0.0)) out.push_back({fmt::format("bus {}", b.id), fmt::format("negative base load {} MW", b.base_load)});
    if (++seen[b.id] == 2) out.push_back({fmt::format("bus {}", b.id), "duplicate bus id"});
  }
  if (refs.size() != 1) {
    std::string ids;
    for (int id : refs) ids += (ids.empty() ? "" : ", ") + std::to_string(id);
    out.push_back({"case", refs.empty() ? std::string("no reference bus")
                                       : fmt::format("{} reference buses: {}", refs.size(), ids)});
  }

  for (std::size_t g = 0; g < c.generators.size(); ++g) {
    const auto& gen = c.generators[g];
    const std::string who = fmt::format("generator {} (bus {})", g + 1, gen.bus);
    if (c.bus_index(gen.bus) < 0) out.push_back({who, "bus not in case"});
    if (!(0.0 <= gen.p_min && gen.p_min <= gen.p_max)) {
      out.push_back({who, fmt::format("need 0 <= p_min <= p_max, got [{}, {}]", gen.p_min, gen.p_max)});
    }
    if (!(gen.ramp_up > 0 && gen.ramp_down > 0 && gen.startup_ramp > 0 && gen.shutdown_ramp > 0)) {
      out.push_back({who, "ramp limits must be positive"});
    }
  }

  for (std::size_t k = 0; k < c.branches.size(); ++k) check_branch(c, k, out);

  // Connectivity over all branches, whatever their switch state.
  if (!c.buses.empty()) {
    std::vector<std::vector<int>> adj(c.buses.size());
    for (const auto& b : c.branches) {
      const int f = c.bus_index(b.from_bus), t = c.bus_index(b.to_bus);
      if (f < 0 || t < 0) continue;
      adj[static_cast<std::size_t>(f)].push_back(t);
      adj[static_cast<std::size_t>(t)].push_back(f);
    }
    std::vector<char> reached(c.buses.size(), 0);
    std::queue<int> q;
    q.push(0);
    reached[0] = 1;
    while (!q.empty()) {
      const int n = q.front();
      q.pop();
      for (int m : adj[static_cast<std::size_t>(n)]) {
        if (!reached[static_cast<std::size_t>(m)]) {
          reached[static_cast<std::size_t>(m)] = 1;
          q.push(m);
        }
      }
    }
    const auto missing = std::ranges::count(reached, 0);
    if (missing > 0) out.push_back({"case", fmt::format("network is not connected ({} buses unreachable)", missing)});
  }
  return out;
}

std::vector<CaseViolation> validate_horizon(const Horizon& h) {
  std::vector<CaseViolation> out;
  if (h.n_periods < 1) out.push_back({"horizon", "n_periods must be >= 1"});
  if (static_cast<int>(h.load_multipliers.size()) != h.n_periods) {
    out.push_back({"horizon", fmt::format("{} load multipliers for {} periods", h.load_multipliers.size(), h.n_periods)});
  }
  for (std::size_t t = 0; t < h.load_multipliers.size(); ++t) {
    if (!(h.load_multipliers[t] > 0.0)) out.push_back({"horizon", fmt::format("multiplier {} is not positive", t + 1)});
  }
  if (!(h.reserve_fraction >= 0.0 && h.reserve_fraction < 1.0)) out.push_back({"horizon", "reserve_fraction must lie in [0, 1)"});
  return out;
}

}  // namespace flexdc
