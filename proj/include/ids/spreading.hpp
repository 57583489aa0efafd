#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "ids/plane.hpp"

namespace ids {

/// Rectangular drive pulse for one ink drop, integrated in `steps` equal slices.
struct PulseSpec {
  double v0 = -3.0;    // V; negative deposits ink
  double t0 = 10e-3;   // s
  std::size_t steps = 50;

  void validate() const;
  bool operator==(const PulseSpec&) const = default;
};

struct Sample {
  std::vector<double> x;
  double y = 0.0;
};

/// Applies one pulse at (col, row): each slice solves the coupled network and
/// moves every junction by its slice charge.
void drop_ink(Plane& plane, std::size_t col, std::size_t row, const PulseSpec& pulse);

/// Drops `sample` on every plane: plane i at column bin(x_i), row bin(y).
/// The sample is range-checked against all planes before any plane changes.
void spread_sample(std::span<Plane> planes, const Sample& sample, const PulseSpec& pulse);

/// Sequential fold of spread_sample. Every sample is validated up front, so an
/// invalid sample (reported by index) leaves the planes untouched. Planes are
/// trained concurrently when `parallel` is set; per-plane order is preserved.
void spread_dataset(std::span<Plane> planes, std::span<const Sample> dataset, const PulseSpec& pulse,
                    bool parallel = true);

/// Mobility that makes one pulse on a fresh plane lower the drop-point
/// memristance by `peak_delta_r` ohms. The drop junction of a fresh plane sees
/// the full |v0| across R_off at the start of the pulse.
double calibrate_mobility(const DeviceParams& params, const PulseSpec& pulse, double peak_delta_r);

}  // namespace ids
