#pragma once

#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/SparseCore>

#include "flexdc/milp.hpp"

namespace flexdc {

/// PST and TSCS are VSSA with a degenerate B or phi range.
enum class Typology : std::uint8_t { FixedAc, Vssa, Hvdc, Zil };

std::string_view to_string(Typology t);
/// Accepts fixed_ac, vssa, pst, tscs, hvdc, zil (case-insensitive).
std::optional<Typology> parse_typology(std::string_view s);

inline constexpr double kDefaultDeltaMax = std::numbers::pi / 2.0;
inline constexpr double kDefaultAngleCeiling = 2.0 * std::numbers::pi;

struct Bus {
  int id = 0;
  double base_load = 0.0;  // MW
  bool is_reference = false;
  int type = 1;  // MATPOWER bus type code
  int zone = 1;
  double base_kv = 0.0;
};

struct Generator {
  int bus = 0;
  bool in_service = true;
  double p_min = 0.0;  // MW
  double p_max = 0.0;
  double ramp_up = kInf;  // MW/h
  double ramp_down = kInf;
  double startup_ramp = kInf;
  double shutdown_ramp = kInf;
  double fixed_cost = 0.0;     // $/h while committed
  double startup_cost = 0.0;   // $
  double shutdown_cost = 0.0;  // $
  double variable_cost = 0.0;  // $/MWh, linear coefficient
  double quadratic_cost = 0.0;  // $/MW^2h, linearized at build time
  bool initially_on = true;
};

/// One branch. Power quantities in MW, susceptance in p.u., angles in rad.
struct BranchParams {
  int from_bus = 0;
  int to_bus = 0;
  Typology typology = Typology::FixedAc;
  double b_min = 0.0;
  double b_max = 0.0;
  double p_c = 0.0;
  double delta_max = kDefaultDeltaMax;
  double phi_min = 0.0;
  double phi_max = 0.0;
  double f_max = kInf;
  bool switchable = false;
  bool in_service = true;  // false: tra pinned to 1

  // Raw electrical data, kept for ZIL detection and for writing the case back.
  double r = 0.0;
  double x = 0.0;
  double charging = 0.0;
  double rate_a = 0.0;  // MW as in the file, 0 = unlimited
  double tap = 0.0;
  double shift_deg = 0.0;

  /// tra is a decision (not a constant) in this branch's model.
  bool tra_is_free() const { return switchable && in_service; }
};

struct SystemCase {
  double base_mva = 100.0;
  std::vector<Bus> buses;
  std::vector<Generator> generators;
  std::vector<BranchParams> branches;

  /// Piecewise-linear pieces used for quadratic generator costs.
  int cost_segments = 1;
  /// Cap on the angle spread assumed for open branches (rad).
  double angle_ceiling = kDefaultAngleCeiling;

  int bus_index(int id) const;  // -1 when absent
  int reference_index() const;  // first reference bus, -1 when none
  /// N_K x N_N, +1 at the from bus and -1 at the to bus.
  Eigen::SparseMatrix<double> cft() const;
  /// Bound on |delta_from - delta_to| across an open branch.
  double angle_spread() const;
  double total_load() const;
};

struct Horizon {
  int n_periods = 1;
  std::vector<double> load_multipliers{1.0};
  double reserve_fraction = 0.0;
};

struct CaseViolation {
  std::string subject;  // "bus 4", "branch 3 (1-5)", ...
  std::string message;
};

/// Every invariant violation; empty when the case is valid.
std::vector<CaseViolation> validate_case(const SystemCase& c);
std::vector<CaseViolation> validate_horizon(const Horizon& h);

/// "from-to", the column label used in reports.
std::string branch_label(const BranchParams& b);

}  // namespace flexdc
