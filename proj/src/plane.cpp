#include "ids/plane.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "ids/errors.hpp"

namespace ids {

void Quantizer::validate() const {
  if (!(lo < hi) || !std::isfinite(lo) || !std::isfinite(hi))
    throw std::invalid_argument("quantizer: require finite lo < hi");
  if (bins < 1) throw std::invalid_argument("quantizer: require bins >= 1");
}

std::size_t Quantizer::quantize(double v, std::string_view axis) const {
  if (!(v >= lo && v <= hi)) {
    throw RangeError(std::string(axis) + " value " + std::to_string(v) + " outside [" + std::to_string(lo) +
                     ", " + std::to_string(hi) + "]");
  }
  const double cell = std::floor((v - lo) / (hi - lo) * static_cast<double>(bins));
  const auto idx = static_cast<std::size_t>(cell) + 1;
  return idx > bins ? bins : idx;
}

double Quantizer::midpoint(std::size_t bin) const {
  if (bin < 1 || bin > bins) throw std::out_of_range("quantizer: bin out of range");
  return lo + (static_cast<double>(bin) - 0.5) * (hi - lo) / static_cast<double>(bins);
}

Plane::Plane(std::size_t rows, std::size_t cols, const DeviceParams& params, double r_couple,
             const Quantizer& x_quant, const Quantizer& y_quant, bool rectify)
    : params_(params),
      r_couple_(r_couple),
      x_quant_(x_quant),
      y_quant_(y_quant),
      rectify_(rectify),
      w_(Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols))) {
  if (rows == 0 || cols == 0) throw std::invalid_argument("plane: empty grid");
  if (!(r_couple > 0.0)) throw std::invalid_argument("plane: r_couple must be positive");
  params_.validate();
  x_quant_.validate();
  y_quant_.validate();
  if (x_quant_.bins != cols || y_quant_.bins != rows)
    throw std::invalid_argument("plane: quantizer bins must match grid dimensions");
}

void Plane::check_index(std::size_t row, std::size_t col) const {
  if (row < 1 || row > rows() || col < 1 || col > cols())
    throw std::out_of_range("plane: junction (" + std::to_string(row) + ", " + std::to_string(col) +
                            ") outside grid");
}

DeviceState Plane::state(std::size_t row, std::size_t col) const {
  check_index(row, col);
  return DeviceState{w_(static_cast<Eigen::Index>(row - 1), static_cast<Eigen::Index>(col - 1))};
}

void Plane::set_state(std::size_t row, std::size_t col, DeviceState s) {
  check_index(row, col);
  if (!(s.w >= 0.0 && s.w <= params_.d)) throw std::invalid_argument("plane: state outside [0, d]");
  w_(static_cast<Eigen::Index>(row - 1), static_cast<Eigen::Index>(col - 1)) = s.w;
}

double Plane::memristance_at(std::size_t row, std::size_t col) const {
  return memristance(params_, state(row, col));
}

double Plane::delta_r_at(std::size_t row, std::size_t col) const { return delta_r(params_, state(row, col)); }

void Plane::assign_w(const Eigen::MatrixXd& w) {
  if (w.rows() != w_.rows() || w.cols() != w_.cols()) throw std::invalid_argument("plane: grid shape mismatch");
  w_ = w.cwiseMax(0.0).cwiseMin(params_.d);
}

namespace {

// Leakage of a reverse-biased ideal diode, relative to the junction's own
// conductance. Keeps otherwise isolated wires attached to the network.
constexpr double kBlockedLeak = 1e-12;
constexpr int kMaxDiodeIterations = 1000;
// Rounds of flipping every violated diode at once before falling back to one
// flip per solve (least index first), which cannot cycle.
constexpr int kBlockFlipRounds = 20;
// Junction voltages within this fraction of |v_drive| count as zero, so floating
// wires do not toggle on roundoff.
constexpr double kDiodeVoltageTol = 1e-12;

struct Assembly {
  Eigen::MatrixXd a;  // free x free
  Eigen::VectorXd b;
};

}  // namespace

NetworkSolution solve_network(const Plane& plane, const DrivePattern& drive, DiodeMask* diodes) {
  const auto m = static_cast<Eigen::Index>(plane.rows());
  const auto n = static_cast<Eigen::Index>(plane.cols());
  if (drive.col < 1 || drive.col > plane.cols() || drive.row < 1 || drive.row > plane.rows())
    throw std::out_of_range("solve_network: drive indices outside grid");

  // Node numbering: columns 0..n-1, rows n..n+m-1.
  const Eigen::Index total = m + n;
  const Eigen::Index driven = static_cast<Eigen::Index>(drive.col) - 1;
  const Eigen::Index grounded = n + static_cast<Eigen::Index>(drive.row) - 1;

  std::vector<Eigen::Index> slot(static_cast<std::size_t>(total), -1);
  Eigen::Index free_count = 0;
  for (Eigen::Index k = 0; k < total; ++k)
    if (k != driven && k != grounded) slot[static_cast<std::size_t>(k)] = free_count++;

  Eigen::MatrixXd g_dev(m, n);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < n; ++j) g_dev(i, j) = 1.0 / memristance(plane.params(), DeviceState{plane.w()(i, j)});

  // Sign of junction current the drop intends to push (row -> column for a negative drive).
  const double intended = drive.v_drive < 0.0 ? 1.0 : (drive.v_drive > 0.0 ? -1.0 : 0.0);
  DiodeMask conducting = DiodeMask::Constant(m, n, true);
  if (diodes != nullptr && diodes->rows() == m && diodes->cols() == n) conducting = *diodes;

  const double g_couple = 1.0 / plane.r_couple();
  auto node_voltage = [&](Eigen::Index node, const Eigen::VectorXd& x) {
    if (node == driven) return drive.v_drive;
    if (node == grounded) return 0.0;
    return x(slot[static_cast<std::size_t>(node)]);
  };

  NetworkSolution out;
  for (int iter = 0;; ++iter) {
    Assembly sys{Eigen::MatrixXd::Zero(free_count, free_count), Eigen::VectorXd::Zero(free_count)};
    auto stamp = [&](Eigen::Index p, Eigen::Index q, double g) {
      const Eigen::Index sp = slot[static_cast<std::size_t>(p)];
      const Eigen::Index sq = slot[static_cast<std::size_t>(q)];
      if (sp >= 0) {
        sys.a(sp, sp) += g;
        if (sq >= 0) sys.a(sp, sq) -= g;
        else if (q == driven) sys.b(sp) += g * drive.v_drive;
      }
      if (sq >= 0) {
        sys.a(sq, sq) += g;
        if (sp >= 0) sys.a(sq, sp) -= g;
        else if (p == driven) sys.b(sq) += g * drive.v_drive;
      }
    };

    for (Eigen::Index i = 0; i < m; ++i)
      for (Eigen::Index j = 0; j < n; ++j)
        stamp(n + i, j, conducting(i, j) ? g_dev(i, j) : g_dev(i, j) * kBlockedLeak);
    if (drive.coupling_on) {
      for (Eigen::Index j = 0; j + 1 < n; ++j) stamp(j, j + 1, g_couple);
      for (Eigen::Index i = 0; i + 1 < m; ++i) stamp(n + i, n + i + 1, g_couple);
    }

    Eigen::VectorXd x;
    if (free_count > 0) {
      Eigen::LLT<Eigen::MatrixXd> llt(sys.a);
      if (llt.info() != Eigen::Success) throw NumericalError("solve_network: conductance matrix is singular");
      x = llt.solve(sys.b);
      if (!x.allFinite()) throw NumericalError("solve_network: non-finite node voltage");
    }

    out.col_voltage.resize(n);
    out.row_voltage.resize(m);
    for (Eigen::Index j = 0; j < n; ++j) out.col_voltage(j) = node_voltage(j, x);
    for (Eigen::Index i = 0; i < m; ++i) out.row_voltage(i) = node_voltage(n + i, x);

    out.current.resize(m, n);
    const double tol = kDiodeVoltageTol * std::abs(drive.v_drive);
    const bool single_flip = iter >= kBlockFlipRounds;
    bool changed = false;
    for (Eigen::Index i = 0; i < m; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) {
        const double v = out.row_voltage(i) - out.col_voltage(j);
        if (!plane.rectify()) {
          out.current(i, j) = g_dev(i, j) * v;
          continue;
        }
        const double forward_v = v * intended;
        const bool violated = conducting(i, j) ? forward_v < -tol : forward_v > tol;
        if (violated && !(single_flip && changed)) {
          conducting(i, j) = !conducting(i, j);
          changed = true;
        }
        out.current(i, j) = forward_v > 0.0 ? g_dev(i, j) * v : 0.0;
      }
    }
    if (!plane.rectify() || !changed) break;
    if (iter >= kMaxDiodeIterations) throw NumericalError("solve_network: diode states did not settle");
  }
  if (diodes != nullptr && plane.rectify()) *diodes = conducting;
  return out;
}

Eigen::MatrixXd total_delta_r(const Plane& plane) {
  const auto& p = plane.params();
  Eigen::MatrixXd out(plane.w().rows(), plane.w().cols());
  for (Eigen::Index i = 0; i < out.rows(); ++i)
    for (Eigen::Index j = 0; j < out.cols(); ++j) out(i, j) = delta_r(p, DeviceState{plane.w()(i, j)});
  return out;
}

}  // namespace ids
