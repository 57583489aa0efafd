#include "ids/readout.hpp"

#include <stdexcept>

namespace ids {

void ReadoutConfig::validate(double r_off) const {
  if (!(v_in > 0.0 && v_dd > 0.0 && r_res > 0.0 && r_x > 0.0))
    throw std::invalid_argument("readout: v_in, v_dd, r_res and r_x must be positive");
  if (!(delta_threshold > 0.0 && delta_threshold < r_off))
    throw std::invalid_argument("readout: require 0 < delta < r_off");
}

double ReadoutConfig::threshold_voltage(double r_off) const {
  return -v_in * r_x / (r_off - delta_threshold + r_x);
}

namespace {

void check_column(const Plane& plane, std::size_t col) {
  if (col < 1 || col > plane.cols()) throw std::out_of_range("readout: column outside grid");
}

}  // namespace

std::vector<double> connector_voltages(const Plane& plane, std::size_t col, const ReadoutConfig& cfg) {
  check_column(plane, col);
  const double r_off = plane.params().r_off;
  std::vector<double> z(plane.rows());
  for (std::size_t i = 0; i < z.size(); ++i) z[i] = -(r_off / plane.memristance_at(i + 1, col)) * cfg.v_in;
  return z;
}

std::vector<double> summing_profile(std::span<const double> z, const ReadoutConfig& cfg) {
  std::vector<double> g(z.size());
  // Each term -(z_t + v_in) is the ink-proportional part of one row current.
  double acc = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    acc += z[i] + cfg.v_in;
    g[i] = -acc;
  }
  if (!g.empty()) g.back() *= 0.5;
  return g;
}

std::optional<std::size_t> narrow_path_row(std::span<const double> g, const ReadoutConfig& cfg) {
  if (g.empty()) return std::nullopt;
  const double g_n = g.back();
  if (g_n < cfg.v_in * ReadoutConfig::kEmptyColumnRatio) return std::nullopt;
  // Priority scan over the comparator outputs g_i >= g_n.
  for (std::size_t i = 0; i < g.size(); ++i)
    if (g[i] >= g_n) return i + 1;
  return g.size();
}

SpreadReading spread_count(const Plane& plane, std::size_t col, const ReadoutConfig& cfg) {
  check_column(plane, col);
  const double r_off = plane.params().r_off;
  const double v_th = cfg.threshold_voltage(r_off);
  SpreadReading out;
  for (std::size_t i = 1; i <= plane.rows(); ++i) {
    const double v_plus = -cfg.v_in * cfg.r_x / (r_off - plane.delta_r_at(i, col) + cfg.r_x);
    if (v_plus <= v_th) ++out.count;
  }
  out.i_spread = -static_cast<double>(out.count) * cfg.v_dd / cfg.r_res;
  return out;
}

ReadoutResult read_plane(const Plane& plane, std::size_t col, const ReadoutConfig& cfg) {
  ReadoutResult out;
  const auto z = connector_voltages(plane, col, cfg);
  out.g = summing_profile(z, cfg);
  out.narrow_path = narrow_path_row(out.g, cfg);
  const auto spread = spread_count(plane, col, cfg);
  out.spread = spread.count;
  out.i_spread = spread.i_spread;
  return out;
}

}  // namespace ids
