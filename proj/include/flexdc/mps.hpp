#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "flexdc/milp.hpp"

namespace flexdc {

struct MpsDocument {
  std::string text;
  /// Name collisions introduced by sanitization, one message each.
  std::vector<std::string> warnings;
};

/// Free-format MPS. Binaries sit inside INTORG/INTEND markers and get a BV
/// bound; the objective constant is written as the negated RHS of the
/// objective row.
MpsDocument write_mps(const MilpModel& model, std::string_view name = "flexdc");

/// Reads the free-format subset produced by write_mps (no RANGES, no
/// negative-UP legacy rule). Throws std::runtime_error on malformed input.
MilpModel read_mps(std::string_view text);

/// Replaces characters outside the MPS name charset and truncates to 255.
std::string sanitize_mps_name(std::string_view name);

}  // namespace flexdc
