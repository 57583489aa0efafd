#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "ids/plane.hpp"

namespace ids {

/// Constants of the narrow-path/spread extraction circuit. Opamps and
/// comparators are ideal.
struct ReadoutConfig {
  double v_in = 10e-3;            // V, read voltage on the selected column
  double v_dd = 5.0;              // V, comparator rail
  double r_res = 10e3;            // Ohm, resistive crossbar junctions
  double r_x = 1e3;               // Ohm, thresholding sense resistor
  double delta_threshold = 20.0;  // Ohm, minimum ink counted as spread

  /// Relative to v_in; below this g_n the column is treated as empty.
  static constexpr double kEmptyColumnRatio = 1e-6;

  void validate(double r_off) const;
  bool operator==(const ReadoutConfig&) const = default;

  /// Comparator reference, -v_in * r_x / (r_off - delta + r_x).
  double threshold_voltage(double r_off) const;
};

struct ReadoutResult {
  std::vector<double> g;                   // summing-opamp outputs, m entries
  std::optional<std::size_t> narrow_path;  // b*, 1-based
  std::size_t spread = 0;                  // M
  double i_spread = 0.0;                   // A, -M * v_dd / r_res
};

/// Current-to-voltage connector outputs for column `col`:
/// z_i = -(R_off / R_ij) * v_in.
std::vector<double> connector_voltages(const Plane& plane, std::size_t col, const ReadoutConfig& cfg);

/// Summing stage: g_i = -(sum_{t<=i} z_t + i v_in) for i < m, and half of the
/// full sum at i = m (the last opamp has feedback R_res / 2).
std::vector<double> summing_profile(std::span<const double> z, const ReadoutConfig& cfg);

/// First i with g_i >= g_m, i.e. g_{b*-1} < g_m <= g_{b*}. Empty when g_m
/// falls below v_in * kEmptyColumnRatio.
std::optional<std::size_t> narrow_path_row(std::span<const double> g, const ReadoutConfig& cfg);

struct SpreadReading {
  std::size_t count = 0;
  double i_spread = 0.0;
};

/// Thresholding connectors: row i outputs -v_dd when its sense voltage
/// -v_in r_x / (R_off - dR_ij + r_x) is at or below the reference.
SpreadReading spread_count(const Plane& plane, std::size_t col, const ReadoutConfig& cfg);

/// Both clock phases on column `col`. Never writes to the plane.
ReadoutResult read_plane(const Plane& plane, std::size_t col, const ReadoutConfig& cfg);

}  // namespace ids
