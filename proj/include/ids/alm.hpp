#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "ids/plane.hpp"
#include "ids/readout.hpp"
#include "ids/spreading.hpp"

namespace ids {

/// N trained planes plus everything needed to query them.
struct Model {
  std::vector<Plane> planes;
  ReadoutConfig readout;
  PulseSpec pulse;
  double epsilon_weight = 0.01;

  /// All planes must share the row count and the y quantizer.
  void validate() const;
  bool operator==(const Model&) const = default;
};

struct PlaneInference {
  std::size_t col = 0;                      // queried column, bin(x_i)
  std::optional<std::size_t> measured_row;  // b* read from the column itself
  std::size_t row = 0;                      // b* used (interpolated if the column is empty)
  std::size_t spread = 0;                   // M
  double y = 0.0;                           // y-bin midpoint of `row`
  double weight = 0.0;
};

struct InferenceBreakdown {
  std::vector<PlaneInference> planes;
  double y_hat = 0.0;
};

/// Plane weight from its spread count M, row count m and epsilon.
using WeightRule = std::function<double(std::size_t spread, std::size_t rows, double epsilon)>;

/// 1 / (M/m + epsilon): narrow spread means an influential input.
double inverse_spread_weight(std::size_t spread, std::size_t rows, double epsilon);

/// Fills empty entries by linear interpolation between the nearest defined
/// neighbours (rounded to the nearest row) and flat extrapolation at the ends.
/// Throws UntrainedError when every entry is empty.
std::vector<std::size_t> fill_gaps(std::span<const std::optional<std::size_t>> rows);

/// b* for every column of `plane`, gaps filled.
std::vector<std::size_t> narrow_path_curve(const Plane& plane, const ReadoutConfig& cfg);

InferenceBreakdown infer(const Model& model, std::span<const double> x,
                         const WeightRule& rule = inverse_spread_weight);

struct ErrorStats {
  double rmse = 0.0;
  double max_abs_err = 0.0;
};

ErrorStats evaluate(const Model& model, std::span<const Sample> grid,
                    const WeightRule& rule = inverse_spread_weight);

/// Error statistics of paired predictions against truth.
ErrorStats error_stats(std::span<const double> predicted, std::span<const double> truth);

}  // namespace ids
