#pragma once

#include <cstddef>
#include <string_view>

#include <Eigen/Dense>

#include "ids/device.hpp"

namespace ids {

/// Uniform binning of [lo, hi] onto cells 1..bins.
struct Quantizer {
  double lo = 0.0;
  double hi = 1.0;
  std::size_t bins = 2;  // >= 1; a single-cell axis is allowed for 1-wide crossbars

  void validate() const;

  /// 1 + floor((v - lo) / (hi - lo) * bins), with v == hi mapped to `bins`.
  /// Throws RangeError naming `axis` when v lies outside [lo, hi].
  std::size_t quantize(double v, std::string_view axis = "value") const;

  /// Centre of cell `bin` (1-based).
  double midpoint(std::size_t bin) const;

  bool operator==(const Quantizer&) const = default;
};

/// One x_i-y plane: an m x n memristor crossbar whose adjacent row wires and
/// adjacent column wires are joined by coupling resistors while ink is dropped.
///
/// All indices in the public interface are 1-based. Row 1 is the lowest y cell.
class Plane {
 public:
  Plane(std::size_t rows, std::size_t cols, const DeviceParams& params, double r_couple,
        const Quantizer& x_quant, const Quantizer& y_quant, bool rectify = false);

  std::size_t rows() const { return static_cast<std::size_t>(w_.rows()); }
  std::size_t cols() const { return static_cast<std::size_t>(w_.cols()); }
  const DeviceParams& params() const { return params_; }
  double r_couple() const { return r_couple_; }
  const Quantizer& x_quant() const { return x_quant_; }
  const Quantizer& y_quant() const { return y_quant_; }

  /// Ideal diode at every junction that blocks current against the drop direction.
  bool rectify() const { return rectify_; }
  void set_rectify(bool on) { rectify_ = on; }

  DeviceState state(std::size_t row, std::size_t col) const;
  void set_state(std::size_t row, std::size_t col, DeviceState s);
  double memristance_at(std::size_t row, std::size_t col) const;
  double delta_r_at(std::size_t row, std::size_t col) const;

  /// Raw state grid (0-based, rows x cols), w in metres.
  const Eigen::MatrixXd& w() const { return w_; }

  /// Replaces the whole grid; every entry is clamped into [0, d].
  void assign_w(const Eigen::MatrixXd& w);

  bool operator==(const Plane&) const = default;

 private:
  void check_index(std::size_t row, std::size_t col) const;

  DeviceParams params_;
  double r_couple_;
  Quantizer x_quant_;
  Quantizer y_quant_;
  bool rectify_;
  Eigen::MatrixXd w_;
};

/// Bias applied while dropping ink: column `col` at `v_drive`, row `row` at
/// ground, every other wire floating. `coupling_on` is the clk1 pin.
struct DrivePattern {
  std::size_t col = 1;
  std::size_t row = 1;
  double v_drive = 0.0;
  bool coupling_on = true;
};

struct NetworkSolution {
  Eigen::VectorXd col_voltage;  // n
  Eigen::VectorXd row_voltage;  // m
  /// Junction currents (m x n, 0-based), positive from row wire to column wire.
  Eigen::MatrixXd current;
};

/// Conducting state of each junction diode (m x n); only used when rectifying.
using DiodeMask = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// DC nodal analysis of the crossbar under `drive`. With rectification on,
/// `diodes` (if given) seeds the diode active set and receives the settled
/// state, which lets consecutive time slices start from the previous answer.
NetworkSolution solve_network(const Plane& plane, const DrivePattern& drive, DiodeMask* diodes = nullptr);

/// Elementwise R_off - M over the grid (m x n, 0-based).
Eigen::MatrixXd total_delta_r(const Plane& plane);

}  // namespace ids
