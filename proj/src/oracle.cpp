#include "ids/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>

#include "ids/errors.hpp"

namespace ids::oracle {

Crossbar Crossbar::from_plane(const Plane& plane) {
  const auto& p = plane.params();
  Crossbar x;
  x.r_on = p.r_on;
  x.r_off = p.r_off;
  x.ohms_per_coulomb = (p.r_off - p.r_on) * p.mu_v * p.r_on / (p.d * p.d);
  x.r_couple = plane.r_couple();
  x.rectify = plane.rectify();
  x.resistance.resize(plane.w().rows(), plane.w().cols());
  for (Eigen::Index i = 0; i < x.resistance.rows(); ++i)
    for (Eigen::Index j = 0; j < x.resistance.cols(); ++j)
      x.resistance(i, j) = p.r_off - (p.r_off - p.r_on) * (plane.w()(i, j) / p.d);
  return x;
}

Eigen::MatrixXd Crossbar::delta_r() const {
  Eigen::MatrixXd out(resistance.rows(), resistance.cols());
  for (Eigen::Index i = 0; i < out.rows(); ++i)
    for (Eigen::Index j = 0; j < out.cols(); ++j) out(i, j) = r_off - resistance(i, j);
  return out;
}

namespace {

// Solves a x = b in place; a is row-major N x N.
std::vector<double> gauss_solve(std::vector<double> a, std::vector<double> b) {
  const std::size_t n = b.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::abs(a[r * n + col]) > std::abs(a[pivot * n + col])) pivot = r;
    if (a[pivot * n + col] == 0.0) throw NumericalError("oracle: singular nodal matrix");
    if (pivot != col) {
      for (std::size_t k = 0; k < n; ++k) std::swap(a[col * n + k], a[pivot * n + k]);
      std::swap(b[col], b[pivot]);
    }
    const double diag = a[col * n + col];
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = a[r * n + col] / diag;
      if (f == 0.0) continue;
      for (std::size_t k = col; k < n; ++k) a[r * n + k] -= f * a[col * n + k];
      b[r] -= f * b[col];
    }
  }
  std::vector<double> x(n);
  for (std::size_t r = n; r-- > 0;) {
    double s = b[r];
    for (std::size_t k = r + 1; k < n; ++k) s -= a[r * n + k] * x[k];
    x[r] = s / a[r * n + r];
  }
  return x;
}

}  // namespace

Eigen::MatrixXd solve(const Crossbar& xbar, const DrivePattern& drive, std::vector<char>* diode_on) {
  const std::size_t m = static_cast<std::size_t>(xbar.resistance.rows());
  const std::size_t n = static_cast<std::size_t>(xbar.resistance.cols());
  if (drive.col < 1 || drive.col > n || drive.row < 1 || drive.row > m)
    throw std::out_of_range("oracle: drive outside grid");
  const std::size_t nodes = m + n;
  // Rows of the crossbar are nodes 0..m-1, columns m..m+n-1.
  auto row_node = [](std::size_t i) { return i; };
  auto col_node = [m](std::size_t j) { return m + j; };
  const std::size_t fixed_col = col_node(drive.col - 1);
  const std::size_t fixed_row = row_node(drive.row - 1);

  std::vector<char> on(m * n, 1);
  if (diode_on != nullptr && diode_on->size() == on.size()) on = *diode_on;
  const double polarity = drive.v_drive < 0.0 ? 1.0 : (drive.v_drive > 0.0 ? -1.0 : 0.0);

  for (int pass = 0; pass < 200; ++pass) {
    std::vector<double> a(nodes * nodes, 0.0);
    std::vector<double> b(nodes, 0.0);
    auto link = [&](std::size_t p, std::size_t q, double g) {
      a[p * nodes + p] += g;
      a[q * nodes + q] += g;
      a[p * nodes + q] -= g;
      a[q * nodes + p] -= g;
    };
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        const double g = 1.0 / xbar.resistance(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        link(row_node(i), col_node(j), on[i * n + j] ? g : g * 1e-12);
      }
    if (drive.coupling_on) {
      const double g = 1.0 / xbar.r_couple;
      for (std::size_t i = 0; i + 1 < m; ++i) link(row_node(i), row_node(i + 1), g);
      for (std::size_t j = 0; j + 1 < n; ++j) link(col_node(j), col_node(j + 1), g);
    }
    for (std::size_t fixed : {fixed_col, fixed_row}) {
      std::fill(a.begin() + static_cast<std::ptrdiff_t>(fixed * nodes),
                a.begin() + static_cast<std::ptrdiff_t>((fixed + 1) * nodes), 0.0);
      a[fixed * nodes + fixed] = 1.0;
      b[fixed] = fixed == fixed_col ? drive.v_drive : 0.0;
    }
    const std::vector<double> v = gauss_solve(std::move(a), std::move(b));

    Eigen::MatrixXd current(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n));
    bool settled = true;
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        const double across = v[row_node(i)] - v[col_node(j)];
        const double r = xbar.resistance(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        double c = across / r;
        if (xbar.rectify) {
          const char forward = across * polarity > 0.0 ? 1 : 0;
          if (forward != on[i * n + j]) settled = false;
          on[i * n + j] = forward;
          if (!forward) c = 0.0;
        }
        current(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = c;
      }
    if (settled) {
      if (diode_on != nullptr) *diode_on = on;
      return current;
    }
  }
  throw NumericalError("oracle: diode states did not settle");
}

Eigen::MatrixXd oracle_solve(const Plane& plane, const DrivePattern& drive) {
  return solve(Crossbar::from_plane(plane), drive);
}

void drop(Crossbar& xbar, std::size_t col, std::size_t row, const PulseSpec& pulse, std::size_t steps) {
  if (steps == 0) throw std::invalid_argument("oracle: steps must be positive");
  const double dt = pulse.t0 / static_cast<double>(steps);
  const DrivePattern drive{col, row, pulse.v0, true};
  std::vector<char> diodes;
  for (std::size_t s = 0; s < steps; ++s) {
    const Eigen::MatrixXd current = solve(xbar, drive, &diodes);
    for (Eigen::Index i = 0; i < current.rows(); ++i)
      for (Eigen::Index j = 0; j < current.cols(); ++j) {
        const double r = xbar.resistance(i, j) - xbar.ohms_per_coulomb * current(i, j) * dt;
        xbar.resistance(i, j) = std::min(xbar.r_off, std::max(xbar.r_on, r));
      }
  }
}

std::optional<std::size_t> oracle_balance_row(std::span<const double> column) {
  double total = 0.0;
  for (double v : column) total += v;
  if (!(total > 0.0)) return std::nullopt;
  double running = 0.0;
  for (std::size_t b = 0; b < column.size(); ++b) {
    running += column[b];
    if (2.0 * running >= total) return b + 1;
  }
  return column.size();
}

std::size_t oracle_spread(std::span<const double> column, double delta) {
  return static_cast<std::size_t>(std::count_if(column.begin(), column.end(), [&](double v) { return v >= delta; }));
}

Eigen::MatrixXd centre_footprint(const Plane& plane, const PulseSpec& pulse, std::size_t steps) {
  Crossbar xbar = Crossbar::from_plane(plane);
  xbar.resistance.setConstant(xbar.r_off);
  drop(xbar, (plane.cols() + 1) / 2, (plane.rows() + 1) / 2, pulse, steps);
  return xbar.delta_r();
}

namespace {

std::size_t bin_of(const Quantizer& q, double v) {
  if (!(v >= q.lo && v <= q.hi)) throw RangeError("oracle: value outside quantizer range");
  const double t = (v - q.lo) / (q.hi - q.lo);
  const auto k = static_cast<std::size_t>(t * static_cast<double>(q.bins));
  return std::min(k, q.bins - 1) + 1;
}

}  // namespace

IdealIds train_ideal(const Model& fresh, std::span<const Sample> data, std::size_t footprint_steps) {
  IdealIds ideal;
  ideal.delta = fresh.readout.delta_threshold;
  ideal.epsilon_weight = fresh.epsilon_weight;
  ideal.y_quant = fresh.planes.front().y_quant();
  for (const auto& plane : fresh.planes) {
    const auto m = static_cast<Eigen::Index>(plane.rows());
    const auto n = static_cast<Eigen::Index>(plane.cols());
    const Eigen::MatrixXd foot = centre_footprint(plane, fresh.pulse, footprint_steps);
    const Eigen::Index ci = (m + 1) / 2 - 1;
    const Eigen::Index cj = (n + 1) / 2 - 1;
    Eigen::MatrixXd ink = Eigen::MatrixXd::Zero(m, n);
    const std::size_t k = ideal.ink.size();
    for (const auto& s : data) {
      const auto l = static_cast<Eigen::Index>(bin_of(plane.y_quant(), s.y)) - 1;
      const auto c = static_cast<Eigen::Index>(bin_of(plane.x_quant(), s.x.at(k))) - 1;
      for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index j = 0; j < n; ++j) {
          const Eigen::Index fi = ci + (i - l);
          const Eigen::Index fj = cj + (j - c);
          if (fi >= 0 && fi < m && fj >= 0 && fj < n) ink(i, j) += foot(fi, fj);
        }
    }
    ideal.ink.push_back(std::move(ink));
    ideal.x_quant.push_back(plane.x_quant());
  }
  return ideal;
}

std::vector<double> ideal_curve(const Eigen::MatrixXd& ink) {
  const auto n = static_cast<std::size_t>(ink.cols());
  std::vector<double> rows(n, 0.0);
  std::vector<bool> known(n, false);
  for (std::size_t j = 0; j < n; ++j) {
    std::vector<double> column(static_cast<std::size_t>(ink.rows()));
    for (Eigen::Index i = 0; i < ink.rows(); ++i) column[static_cast<std::size_t>(i)] = ink(i, static_cast<Eigen::Index>(j));
    if (const auto b = oracle_balance_row(column)) {
      rows[j] = static_cast<double>(*b);
      known[j] = true;
    }
  }
  std::vector<std::size_t> idx;
  for (std::size_t j = 0; j < n; ++j)
    if (known[j]) idx.push_back(j);
  if (idx.empty()) throw UntrainedError("oracle: no ink");
  for (std::size_t j = 0; j < n; ++j) {
    if (known[j]) continue;
    const auto right = std::lower_bound(idx.begin(), idx.end(), j);
    if (right == idx.begin()) rows[j] = rows[*right];
    else if (right == idx.end()) rows[j] = rows[idx.back()];
    else {
      const std::size_t a = *(right - 1);
      const std::size_t b = *right;
      rows[j] = std::round(rows[a] + (rows[b] - rows[a]) * static_cast<double>(j - a) / static_cast<double>(b - a));
    }
  }
  return rows;
}

double infer_ideal(const IdealIds& ideal, std::span<const double> x) {
  if (x.size() != ideal.ink.size()) throw DataError("oracle: input width mismatch");
  double num = 0.0;
  double den = 0.0;
  const double m = static_cast<double>(ideal.y_quant.bins);
  const double cell = (ideal.y_quant.hi - ideal.y_quant.lo) / m;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const Eigen::MatrixXd& ink = ideal.ink[k];
    const auto j = static_cast<Eigen::Index>(bin_of(ideal.x_quant[k], x[k])) - 1;
    std::vector<double> column(static_cast<std::size_t>(ink.rows()));
    for (Eigen::Index i = 0; i < ink.rows(); ++i) column[static_cast<std::size_t>(i)] = ink(i, j);
    double row = 0.0;
    if (const auto b = oracle_balance_row(column)) row = static_cast<double>(*b);
    else row = ideal_curve(ink)[static_cast<std::size_t>(j)];
    const double y = ideal.y_quant.lo + (row - 0.5) * cell;
    const double weight = 1.0 / (static_cast<double>(oracle_spread(column, ideal.delta)) / m + ideal.epsilon_weight);
    num += weight * y;
    den += weight;
  }
  return num / den;
}

}  // namespace ids::oracle
