#include "ids/spreading.hpp"

#include <cmath>
#include <exception>
#include <stdexcept>
#include <string>
#include <thread>

#include "ids/errors.hpp"

namespace ids {

void PulseSpec::validate() const {
  if (!(t0 > 0.0) || !std::isfinite(v0)) throw std::invalid_argument("pulse: require t0 > 0 and finite v0");
  if (steps < 1) throw std::invalid_argument("pulse: require steps >= 1");
}

void drop_ink(Plane& plane, std::size_t col, std::size_t row, const PulseSpec& pulse) {
  pulse.validate();
  if (col < 1 || col > plane.cols() || row < 1 || row > plane.rows())
    throw std::out_of_range("drop_ink: drop point outside grid");
  if (pulse.v0 == 0.0) return;

  const DrivePattern drive{col, row, pulse.v0, true};
  const double dt = pulse.t0 / static_cast<double>(pulse.steps);
  const DeviceParams& p = plane.params();
  Eigen::MatrixXd w = plane.w();
  DiodeMask diodes;
  for (std::size_t step = 0; step < pulse.steps; ++step) {
    const NetworkSolution sol = solve_network(plane, drive, &diodes);
    for (Eigen::Index i = 0; i < w.rows(); ++i)
      for (Eigen::Index j = 0; j < w.cols(); ++j)
        w(i, j) = apply_charge(p, DeviceState{w(i, j)}, sol.current(i, j) * dt).w;
    plane.assign_w(w);
  }
}

namespace {

struct DropPoint {
  std::size_t col;
  std::size_t row;
};

DropPoint locate(const Plane& plane, const Sample& sample, std::size_t plane_index) {
  const std::string tag = "plane " + std::to_string(plane_index + 1);
  const std::size_t col = plane.x_quant().quantize(sample.x[plane_index], tag + " x");
  const std::size_t row = plane.y_quant().quantize(sample.y, tag + " y");
  return {col, row};
}

std::vector<DropPoint> locate_all(std::span<const Plane> planes, const Sample& sample) {
  if (sample.x.size() != planes.size())
    throw DataError("sample has " + std::to_string(sample.x.size()) + " inputs, model has " +
                    std::to_string(planes.size()) + " planes");
  std::vector<DropPoint> points;
  points.reserve(planes.size());
  for (std::size_t i = 0; i < planes.size(); ++i) points.push_back(locate(planes[i], sample, i));
  return points;
}

}  // namespace

void spread_sample(std::span<Plane> planes, const Sample& sample, const PulseSpec& pulse) {
  const auto points = locate_all(planes, sample);
  for (std::size_t i = 0; i < planes.size(); ++i) drop_ink(planes[i], points[i].col, points[i].row, pulse);
}

void spread_dataset(std::span<Plane> planes, std::span<const Sample> dataset, const PulseSpec& pulse,
                    bool parallel) {
  pulse.validate();
  std::vector<std::vector<DropPoint>> points;
  points.reserve(dataset.size());
  for (std::size_t k = 0; k < dataset.size(); ++k) {
    try {
      points.push_back(locate_all(planes, dataset[k]));
    } catch (const RangeError& e) {
      throw RangeError("sample " + std::to_string(k + 1) + ": " + e.what());
    } catch (const DataError& e) {
      throw DataError("sample " + std::to_string(k + 1) + ": " + e.what());
    }
  }

  auto train_plane = [&](std::size_t i) {
    for (const auto& sample_points : points) drop_ink(planes[i], sample_points[i].col, sample_points[i].row, pulse);
  };

  if (!parallel || planes.size() < 2 || std::thread::hardware_concurrency() < 2) {
    for (std::size_t i = 0; i < planes.size(); ++i) train_plane(i);
    return;
  }

  std::vector<std::exception_ptr> errors(planes.size());
  {
    std::vector<std::jthread> workers;
    for (std::size_t i = 0; i < planes.size(); ++i) {
      workers.emplace_back([&, i] {
        try {
          train_plane(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      });
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
}

double calibrate_mobility(const DeviceParams& params, const PulseSpec& pulse, double peak_delta_r) {
  params.validate();
  pulse.validate();
  if (!(peak_delta_r > 0.0) || pulse.v0 == 0.0) throw std::invalid_argument("calibrate_mobility: degenerate target");
  const double charge = std::abs(pulse.v0) / params.r_off * pulse.t0;
  // delta_R = (R_off - R_on) * (mu_v * R_on / D^2) * q
  return peak_delta_r * params.d * params.d / ((params.r_off - params.r_on) * params.r_on * charge);
}

}  // namespace ids
