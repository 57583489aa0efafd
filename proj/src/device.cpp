#include "ids/device.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ids {

void DeviceParams::validate() const {
  if (!(r_on > 0.0 && r_on < r_off && std::isfinite(r_off)))
    throw std::invalid_argument("device: require 0 < r_on < r_off");
  if (!(d > 0.0) || !(mu_v > 0.0))
    throw std::invalid_argument("device: require d > 0 and mu_v > 0");
}

double memristance(const DeviceParams& params, DeviceState state) {
  const double x = state.w / params.d;
  return params.r_on * x + params.r_off * (1.0 - x);
}

DeviceState apply_charge(const DeviceParams& params, DeviceState state, double delta_q) {
  if (delta_q == 0.0) return state;
  const double w = state.w + params.drift_per_charge() * delta_q;
  return DeviceState{std::clamp(w, 0.0, params.d)};
}

double delta_r(const DeviceParams& params, DeviceState state) {
  return params.r_off - memristance(params, state);
}

DeviceState state_for_delta_r(const DeviceParams& params, double dr) {
  const double span = params.r_off - params.r_on;
  const double clamped = std::clamp(dr, 0.0, span);
  if (clamped == span) return DeviceState{params.d};
  return DeviceState{params.d * clamped / span};
}

}  // namespace ids
