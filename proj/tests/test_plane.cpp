#include <doctest.h>

#include <cmath>
#include <random>
#include <stdexcept>

#include "ids/errors.hpp"
#include "ids/plane.hpp"

using namespace ids;

namespace {

Plane make_plane(std::size_t m, std::size_t n, double r_couple = 1000.0, bool rectify = false) {
  return Plane(m, n, DeviceParams{}, r_couple, Quantizer{0.0, 1.0, n}, Quantizer{0.0, 1.0, m}, rectify);
}

void randomize(Plane& plane, std::mt19937_64& rng, double max_fraction) {
  std::uniform_real_distribution<double> u(0.0, max_fraction * plane.params().d);
  for (std::size_t i = 1; i <= plane.rows(); ++i)
    for (std::size_t j = 1; j <= plane.cols(); ++j) plane.set_state(i, j, {u(rng)});
}

// KCL at every free wire, using the reported junction currents.
double max_kcl_residual(const Plane& plane, const DrivePattern& drive, const NetworkSolution& s) {
  const auto m = static_cast<Eigen::Index>(plane.rows());
  const auto n = static_cast<Eigen::Index>(plane.cols());
  const double g = drive.coupling_on ? 1.0 / plane.r_couple() : 0.0;
  double worst = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    if (j == static_cast<Eigen::Index>(drive.col) - 1) continue;
    double inflow = s.current.col(j).sum();
    if (j > 0) inflow += g * (s.col_voltage(j - 1) - s.col_voltage(j));
    if (j + 1 < n) inflow += g * (s.col_voltage(j + 1) - s.col_voltage(j));
    worst = std::max(worst, std::abs(inflow));
  }
  for (Eigen::Index i = 0; i < m; ++i) {
    if (i == static_cast<Eigen::Index>(drive.row) - 1) continue;
    double inflow = -s.current.row(i).sum();
    if (i > 0) inflow += g * (s.row_voltage(i - 1) - s.row_voltage(i));
    if (i + 1 < m) inflow += g * (s.row_voltage(i + 1) - s.row_voltage(i));
    worst = std::max(worst, std::abs(inflow));
  }
  return worst;
}

}  // namespace

TEST_CASE("quantize") {
  const Quantizer q10{0.0, 10.0, 10};
  CHECK(q10.quantize(0.0) == 1);
  CHECK(q10.quantize(10.0) == 10);
  CHECK(q10.quantize(9.999) == 10);
  CHECK(Quantizer{1.0, 10.0, 100}.quantize(5.5) == 51);
  CHECK(q10.midpoint(1) == doctest::Approx(0.5));
  CHECK(q10.midpoint(10) == doctest::Approx(9.5));

  SUBCASE("out of range names the axis") {
    try {
      q10.quantize(10.5, "plane 2 x");
      FAIL("expected RangeError");
    } catch (const RangeError& e) {
      CHECK(std::string(e.what()).find("plane 2 x") != std::string::npos);
    }
    CHECK_THROWS_AS(q10.quantize(-0.1), RangeError);
    CHECK_THROWS_AS(q10.quantize(std::nan("")), RangeError);
  }
  CHECK_THROWS_AS((Quantizer{1.0, 1.0, 4}.validate()), std::invalid_argument);
  CHECK_THROWS_AS((Quantizer{0.0, 1.0, 0}.validate()), std::invalid_argument);
  CHECK(Quantizer{0.0, 1.0, 1}.quantize(1.0) == 1);
}

TEST_CASE("plane construction and access") {
  Plane p = make_plane(3, 4);
  CHECK(p.rows() == 3);
  CHECK(p.cols() == 4);
  CHECK(total_delta_r(p).isZero(0.0));
  p.set_state(2, 3, {p.params().d});
  const Eigen::MatrixXd dr = total_delta_r(p);
  CHECK(dr(1, 2) == p.params().r_off - p.params().r_on);
  CHECK(dr.sum() == dr(1, 2));
  CHECK_THROWS_AS(p.set_state(0, 1, {0.0}), std::out_of_range);
  CHECK_THROWS_AS(p.set_state(1, 1, {1.0}), std::invalid_argument);
  CHECK_THROWS_AS(Plane(3, 4, DeviceParams{}, 0.0, Quantizer{0, 1, 4}, Quantizer{0, 1, 3}), std::invalid_argument);
  CHECK_THROWS_AS(Plane(3, 4, DeviceParams{}, 1e3, Quantizer{0, 1, 5}, Quantizer{0, 1, 3}), std::invalid_argument);
}

TEST_CASE("solve_network without coupling") {
  Plane p = make_plane(4, 5);
  std::mt19937_64 rng(3);
  randomize(p, rng, 0.1);
  const DrivePattern drive{2, 3, -3.0, false};

  SUBCASE("rectified crossbar: only the drive junction conducts") {
    p.set_rectify(true);
    const auto s = solve_network(p, drive);
    for (Eigen::Index i = 0; i < 4; ++i)
      for (Eigen::Index j = 0; j < 5; ++j) {
        // Wires isolated by blocked diodes float; what remains is leakage-level.
        if (i == 2 && j == 1) CHECK(s.current(i, j) == doctest::Approx(3.0 / p.memristance_at(3, 2)).epsilon(1e-12));
        else CHECK(std::abs(s.current(i, j)) <= 1e-9 * s.current(2, 1));
      }
  }
  SUBCASE("plain crossbar carries sneak currents but conserves charge") {
    const auto s = solve_network(p, drive);
    CHECK(s.current(2, 1) == doctest::Approx(3.0 / p.memristance_at(3, 2)).epsilon(1e-12));
    CHECK(s.current.cwiseAbs().sum() > std::abs(s.current(2, 1)));
    CHECK(max_kcl_residual(p, drive, s) <= 1e-9 * s.current.cwiseAbs().maxCoeff());
  }
}

TEST_CASE("solve_network 2x2 against frozen dense-oracle values") {
  // Expected currents from an independent numpy solve of the 4-node system.
  const Plane p = make_plane(2, 2);
  const auto s = solve_network(p, DrivePattern{1, 1, -3.0, true});
  CHECK(s.current(0, 0) == doctest::Approx(3e-05).epsilon(1e-12));
  CHECK(s.current(0, 1) == doctest::Approx(2.9417475728155335e-05).epsilon(1e-12));
  CHECK(s.current(1, 0) == doctest::Approx(2.941747572815534e-05).epsilon(1e-12));
  CHECK(s.current(1, 1) == doctest::Approx(2.8834951456310676e-05).epsilon(1e-12));
  CHECK(s.col_voltage(1) == doctest::Approx(-2.9417475728155336).epsilon(1e-12));
  CHECK(s.row_voltage(1) == doctest::Approx(-0.058252427184466014).epsilon(1e-12));
}

TEST_CASE("solve_network symmetry on a uniform 3x3 plane") {
  const Plane p = make_plane(3, 3);
  const auto s = solve_network(p, DrivePattern{2, 2, -3.0, true});
  for (Eigen::Index i = 0; i < 3; ++i)
    for (Eigen::Index j = 0; j < 3; ++j) {
      CHECK(s.current(i, j) == doctest::Approx(s.current(2 - i, 2 - j)).epsilon(1e-12));
      CHECK(s.current(i, j) == doctest::Approx(s.current(2 - i, j)).epsilon(1e-12));
      CHECK(s.current(i, j) == doctest::Approx(s.current(i, 2 - j)).epsilon(1e-12));
    }
}

TEST_CASE("solve_network 1x1 has no free nodes") {
  const Plane p = make_plane(1, 1);
  const auto s = solve_network(p, DrivePattern{1, 1, -2.0, true});
  CHECK(s.current(0, 0) == doctest::Approx(2.0 / p.params().r_off));
}

TEST_CASE("property: superposition, conservation, KCL") {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<std::size_t> dim(1, 9);
  std::uniform_real_distribution<double> volts(-5.0, 5.0);
  std::uniform_real_distribution<double> alpha_dist(0.1, 10.0);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t m = dim(rng);
    const std::size_t n = dim(rng);
    Plane p = make_plane(m, n, 500.0 + 100.0 * static_cast<double>(trial));
    randomize(p, rng, 0.5);
    const DrivePattern drive{std::uniform_int_distribution<std::size_t>(1, n)(rng),
                             std::uniform_int_distribution<std::size_t>(1, m)(rng), volts(rng), true};
    const auto s = solve_network(p, drive);
    const double scale = s.current.cwiseAbs().maxCoeff();

    const double alpha = alpha_dist(rng);
    DrivePattern scaled = drive;
    scaled.v_drive *= alpha;
    const auto s2 = solve_network(p, scaled);
    CHECK((s2.current - alpha * s.current).cwiseAbs().maxCoeff() <= 1e-12 * alpha * scale);

    CHECK(max_kcl_residual(p, drive, s) <= 1e-9 * scale);

    // Current leaving the grounded row's junctions plus its coupling resistors
    // equals the current entering the driven column.
    const auto l0 = static_cast<Eigen::Index>(drive.row) - 1;
    const auto k0 = static_cast<Eigen::Index>(drive.col) - 1;
    const double g = 1.0 / p.r_couple();
    double out_of_ground = s.current.row(l0).sum();
    if (l0 > 0) out_of_ground -= g * (s.row_voltage(l0 - 1) - s.row_voltage(l0));
    if (l0 + 1 < static_cast<Eigen::Index>(m)) out_of_ground -= g * (s.row_voltage(l0 + 1) - s.row_voltage(l0));
    double into_column = s.current.col(k0).sum();
    if (k0 > 0) into_column += g * (s.col_voltage(k0 - 1) - s.col_voltage(k0));
    if (k0 + 1 < static_cast<Eigen::Index>(n)) into_column += g * (s.col_voltage(k0 + 1) - s.col_voltage(k0));
    CHECK(out_of_ground == doctest::Approx(into_column).epsilon(1e-9).scale(scale));
  }
}

TEST_CASE("central drive: current magnitude peaks at the drive cell and decays monotonically") {
  const Plane p = make_plane(9, 11);
  const auto s = solve_network(p, DrivePattern{6, 5, -3.0, true});
  const Eigen::MatrixXd a = s.current.cwiseAbs();
  CHECK(a(4, 5) == a.maxCoeff());
  for (Eigen::Index i = 0; i < 9; ++i)
    for (Eigen::Index j = 0; j < 11; ++j) {
      const Eigen::Index ni = i + (i < 4 ? -1 : 1);
      const Eigen::Index nj = j + (j < 5 ? -1 : 1);
      if (i != 4 && ni >= 0 && ni < 9) CHECK(a(ni, j) <= a(i, j));
      if (j != 5 && nj >= 0 && nj < 11) CHECK(a(i, nj) <= a(i, j));
    }
}

TEST_CASE("rectified drive blocks reverse junctions only") {
  Plane p = make_plane(5, 6, 1000.0, true);
  std::mt19937_64 rng(5);
  randomize(p, rng, 0.3);
  const DrivePattern drive{3, 2, -3.0, true};
  const auto s = solve_network(p, drive);
  CHECK(s.current.minCoeff() >= 0.0);
  CHECK(s.current(1, 2) > 0.0);
  CHECK(max_kcl_residual(p, drive, s) <= 1e-9 * s.current.cwiseAbs().maxCoeff());
}

TEST_CASE("rectified solve settles when undriven rows float") {
  Plane p(3, 1, DeviceParams{}, 1000.0, Quantizer{0.0, 1.0, 1}, Quantizer{0.0, 1.0, 3}, true);
  const DrivePattern drive{1, 1, -3.0, false};
  const auto sol = solve_network(p, drive);
  CHECK(sol.current(0, 0) == doctest::Approx(3.0 / 100e3));
  CHECK(sol.current(1, 0) == 0.0);
  CHECK(sol.current(2, 0) == 0.0);
}
