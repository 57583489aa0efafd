#pragma once

// Reference implementations used to check the production path. Nothing here
// calls into the production solver, device update or readout arithmetic; only
// the Plane container is read.

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "ids/alm.hpp"
#include "ids/plane.hpp"
#include "ids/spreading.hpp"

namespace ids::oracle {

/// Crossbar held as a memristance matrix (0-based, m x n).
struct Crossbar {
  Eigen::MatrixXd resistance;
  double r_on = 0.0;
  double r_off = 0.0;
  double ohms_per_coulomb = 0.0;  // (R_off - R_on) mu_v R_on / D^2
  double r_couple = 0.0;
  bool rectify = false;

  static Crossbar from_plane(const Plane& plane);
  Eigen::MatrixXd delta_r() const;
};

/// Junction currents (row wire -> column wire positive) by dense Gaussian
/// elimination with partial pivoting over all m + n wire nodes.
/// `diode_on` (rectifying crossbars only) seeds and receives the diode states.
Eigen::MatrixXd solve(const Crossbar& xbar, const DrivePattern& drive, std::vector<char>* diode_on = nullptr);
Eigen::MatrixXd oracle_solve(const Plane& plane, const DrivePattern& drive);

inline constexpr std::size_t kReferenceSteps = 1000;

/// One pulse integrated with `steps` slices, updating memristances directly.
void drop(Crossbar& xbar, std::size_t col, std::size_t row, const PulseSpec& pulse,
          std::size_t steps = kReferenceSteps);

/// Smallest b with sum_{t<=b} dR_t >= half the column total; empty for a zero column.
std::optional<std::size_t> oracle_balance_row(std::span<const double> delta_r_column);

/// Number of entries >= delta.
std::size_t oracle_spread(std::span<const double> delta_r_column, double delta);

/// Ideal ink-drop-spread model: every sample adds the same fresh-plane
/// footprint, translated to its cell, with no interaction between drops.
struct IdealIds {
  std::vector<Eigen::MatrixXd> ink;  // per plane, m x n
  std::vector<Quantizer> x_quant;
  Quantizer y_quant;
  double delta = 0.0;
  double epsilon_weight = 0.0;
};

/// Footprint of one reference-resolution drop at the centre cell of a fresh
/// copy of `plane`. The centre is ((m+1)/2, (n+1)/2).
Eigen::MatrixXd centre_footprint(const Plane& plane, const PulseSpec& pulse, std::size_t steps);

/// Trains the ideal model on `data` using the planes, readout threshold and
/// weighting constant of `fresh`.
IdealIds train_ideal(const Model& fresh, std::span<const Sample> data, std::size_t footprint_steps);

/// Balance row and spread per plane, gaps filled by linear interpolation, then
/// the inverse-spread weighted mean of the y midpoints.
double infer_ideal(const IdealIds& ideal, std::span<const double> x);

/// Balance rows of every column of `ink` with empty columns interpolated.
std::vector<double> ideal_curve(const Eigen::MatrixXd& ink);

}  // namespace ids::oracle
