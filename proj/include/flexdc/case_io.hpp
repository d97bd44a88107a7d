#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "flexdc/network.hpp"

namespace flexdc {

class MalformedCase : public std::runtime_error {
 public:
  MalformedCase(int line, const std::string& what);
  int line() const { return line_; }

 private:
  int line_;
};

/// Parses the MATPOWER m-file subset: mpc.baseMVA plus the numeric matrices
/// mpc.bus, mpc.gen, mpc.branch and (optionally) mpc.gencost. Features the DC
/// model ignores (off-nominal taps, phase shifts) are appended to `warnings`.
///
/// Conversions: b = 1/x; f_max = rateA (0 = unlimited); bus type 3 is the
/// reference; status-0 branches are kept, switched out; gencost c2, c1, c0
/// become quadratic_cost, variable_cost and fixed_cost.
SystemCase parse_case(std::string_view text, std::vector<std::string>* warnings = nullptr);

/// Writes a case that parse_case reads back to the same SystemCase (flex
/// parameters aside, which are not part of the file format).
std::string write_case(const SystemCase& c, std::string_view name = "flexdc_case");

// ---------------------------------------------------------------------------
// Overlay

class OverlayError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};
class UnknownBranch : public OverlayError {
  using OverlayError::OverlayError;
};
class ConflictingEdit : public OverlayError {
  using OverlayError::OverlayError;
};

struct BranchEdit {
  int from_bus = 0;
  int to_bus = 0;
  std::optional<int> circuit;  // 1-based among parallel branches; all when unset
  std::optional<Typology> typology;
  std::optional<double> b_range_percent;
  std::optional<double> b_min, b_max;  // p.u.
  std::optional<double> phi_min_deg, phi_max_deg;
  std::optional<double> delta_max_deg;
  std::optional<double> capacity_mw;  // p_c for HVDC/ZIL, else f_max
  std::optional<bool> switchable;
  std::optional<bool> open;  // pin tra to 1
};

struct GeneratorEdit {
  int bus = 0;
  std::optional<double> p_min, p_max;
  std::optional<double> ramp_up, ramp_down, startup_ramp, shutdown_ramp;
  std::optional<double> fixed_cost, startup_cost, shutdown_cost;
  std::optional<double> variable_cost, quadratic_cost;
  std::optional<bool> initially_on;
};

struct ZilRule {
  double voltage_kv = 0.0;
  double max_reactance = 0.0;  // p.u.
  bool require_lossless = true;  // r = 0 and charging = 0
};

/// First matching rule wins. With `zone` set the rule matches branches with
/// exactly one terminal in that zone; without it, any inter-zone branch.
struct ZoneRule {
  std::optional<int> zone;
  Typology typology = Typology::Vssa;
  std::optional<double> b_range_percent;
  std::optional<double> phi_range_deg;
};

struct FlexOverlay {
  Horizon horizon;
  bool global_switching = false;
  std::vector<Typology> switchable_typologies;
  std::optional<double> default_rate_mw;  // replaces rateA = 0
  std::optional<double> default_delta_max_deg;
  std::optional<double> angle_ceiling_deg;
  std::optional<int> cost_segments;
  std::optional<std::vector<int>> generator_buses;  // keep only these units
  std::optional<ZilRule> zil_detection;
  std::vector<ZoneRule> zone_rules;
  std::vector<BranchEdit> branch_edits;
  std::vector<GeneratorEdit> generator_edits;
};

/// Parses the TOML overlay document (schema in README). Throws OverlayError
/// with the offending key on schema errors.
FlexOverlay parse_overlay(std::string_view text);

struct Scenario {
  SystemCase system;
  Horizon horizon;
};

/// Rebuilds every branch from its raw data, then applies, in order: ZIL
/// detection, zone rules, explicit branch edits, switching flags. Idempotent.
Scenario apply_overlay(const SystemCase& base, const FlexOverlay& overlay);

}  // namespace flexdc
