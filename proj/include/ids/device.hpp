#pragma once

// Linear-drift memristor model.
//
//   M(w) = R_on * w/D + R_off * (1 - w/D)
//   w'   = clamp(w + (mu_v * R_on / D) * q, 0, D)
//
// Positive charge enters the row-side terminal and leaves the column-side
// terminal; it widens the doped region and lowers the memristance.

namespace ids {

struct DeviceParams {
  double r_on = 100.0;      // Ohm, fully doped
  double r_off = 100.0e3;   // Ohm, fully un-doped
  double d = 10.0e-9;       // m, film thickness
  double mu_v = 1.0e-14;    // m^2 / (V s), dopant mobility

  /// Throws std::invalid_argument if the invariants do not hold.
  void validate() const;

  /// State change per coulomb, mu_v * R_on / D (m/C).
  double drift_per_charge() const { return mu_v * r_on / d; }

  bool operator==(const DeviceParams&) const = default;
};

struct DeviceState {
  double w = 0.0;  // doped-region length, m; 0 <= w <= d
};

double memristance(const DeviceParams& params, DeviceState state);

DeviceState apply_charge(const DeviceParams& params, DeviceState state, double delta_q);

/// Stored ink: R_off minus the current memristance.
double delta_r(const DeviceParams& params, DeviceState state);

/// Inverse of delta_r: the state whose memristance sits delta_r below R_off.
/// delta_r is clamped to [0, R_off - R_on].
DeviceState state_for_delta_r(const DeviceParams& params, double delta_r);

}  // namespace ids
