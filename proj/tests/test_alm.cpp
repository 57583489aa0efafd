#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <random>
#include <vector>

#include "ids/alm.hpp"
#include "ids/errors.hpp"

using namespace ids;

namespace {

// Single-column-per-bin plane over x in [0, n], y in [0, m].
Plane plane_with(std::size_t m, std::size_t n) {
  return Plane(m, n, DeviceParams{}, 1000.0, Quantizer{0.0, static_cast<double>(n), n},
               Quantizer{0.0, static_cast<double>(m), m}, true);
}

void ink_column(Plane& p, std::size_t col, const std::vector<double>& dr) {
  for (std::size_t i = 0; i < dr.size(); ++i) p.set_state(i + 1, col, state_for_delta_r(p.params(), dr[i]));
}

Model model_of(std::vector<Plane> planes) {
  Model m;
  m.planes = std::move(planes);
  m.validate();
  return m;
}

}  // namespace

TEST_CASE("fill_gaps") {
  using R = std::optional<std::size_t>;
  CHECK(fill_gaps(std::vector<R>{2, std::nullopt, 4}) == std::vector<std::size_t>{2, 3, 4});
  CHECK(fill_gaps(std::vector<R>{std::nullopt, 5, std::nullopt}) == std::vector<std::size_t>{5, 5, 5});
  CHECK(fill_gaps(std::vector<R>{1, std::nullopt, std::nullopt, 7}) == std::vector<std::size_t>{1, 3, 5, 7});
  CHECK_THROWS_AS(fill_gaps(std::vector<R>{std::nullopt, std::nullopt}), UntrainedError);
}

TEST_CASE("narrow_path_curve of a constant function") {
  Plane p = plane_with(10, 6);
  for (std::size_t col : {1, 2, 4, 6}) {
    std::vector<double> dr(10, 0.0);
    dr[6] = 400.0;
    dr[5] = 150.0;
    dr[7] = 150.0;
    ink_column(p, col, dr);
  }
  const auto curve = narrow_path_curve(p, ReadoutConfig{});
  CHECK(curve == std::vector<std::size_t>(6, 7));
  CHECK_THROWS_AS(narrow_path_curve(plane_with(4, 4), ReadoutConfig{}), UntrainedError);
}

TEST_CASE("infer") {
  Plane a = plane_with(10, 4);
  Plane b = plane_with(10, 4);
  std::vector<double> col_a(10, 0.0);
  col_a[2] = 500.0;
  std::vector<double> col_b(10, 0.0);
  col_b[7] = 500.0;
  for (std::size_t c = 1; c <= 4; ++c) {
    ink_column(a, c, col_a);
    ink_column(b, c, col_b);
  }

  SUBCASE("one input returns its own narrow path") {
    const Model m = model_of({a});
    const auto r = infer(m, std::vector<double>{1.5});
    CHECK(r.planes.size() == 1);
    CHECK(r.planes[0].col == 2);
    CHECK(r.planes[0].row == 3);
    CHECK(r.y_hat == doctest::Approx(2.5));
  }
  SUBCASE("equal spreads average") {
    const Model m = model_of({a, b});
    const auto r = infer(m, std::vector<double>{0.5, 3.5});
    CHECK(r.planes[0].spread == r.planes[1].spread);
    CHECK(r.y_hat == doctest::Approx((2.5 + 7.5) / 2));
  }
  SUBCASE("empty queried column falls back to interpolation") {
    Plane c = plane_with(10, 4);
    std::vector<double> low(10, 0.0);
    low[1] = 300.0;
    std::vector<double> high(10, 0.0);
    high[5] = 300.0;
    ink_column(c, 1, low);
    ink_column(c, 3, high);
    const auto r = infer(model_of({c}), std::vector<double>{1.2});
    CHECK_FALSE(r.planes[0].measured_row.has_value());
    CHECK(r.planes[0].row == 4);
    CHECK(r.y_hat == doctest::Approx(3.5));
  }
  SUBCASE("errors") {
    const Model m = model_of({a, b});
    CHECK_THROWS_AS(infer(m, std::vector<double>{0.5}), DataError);
    CHECK_THROWS_AS(infer(m, std::vector<double>{0.5, 4.5}), RangeError);
    CHECK_THROWS_AS(infer(model_of({plane_with(10, 4)}), std::vector<double>{0.5}), UntrainedError);
  }
  SUBCASE("deterministic") {
    const Model m = model_of({a, b});
    const auto r1 = infer(m, std::vector<double>{2.2, 1.1});
    const auto r2 = infer(m, std::vector<double>{2.2, 1.1});
    CHECK(r1.y_hat == r2.y_hat);
  }
}

TEST_CASE("property: convex combination and spread monotonicity") {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0.0, 800.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Plane> planes;
    for (int k = 0; k < 3; ++k) {
      Plane p = plane_with(12, 3);
      for (std::size_t c = 1; c <= 3; ++c) {
        std::vector<double> dr(12);
        for (double& v : dr) v = u(rng) * (u(rng) > 400.0 ? 1.0 : 0.0);
        dr[trial % 12] += 50.0;
        ink_column(p, c, dr);
      }
      planes.push_back(p);
    }
    const Model m = model_of(planes);
    const auto r = infer(m, std::vector<double>{0.5, 1.5, 2.5});
    double lo = 1e9, hi = -1e9;
    for (const auto& pi : r.planes) {
      lo = std::min(lo, pi.y);
      hi = std::max(hi, pi.y);
      CHECK(pi.weight > 0.0);
    }
    CHECK(r.y_hat >= lo - 1e-12);
    CHECK(r.y_hat <= hi + 1e-12);
  }

  // Plane 1 keeps b* = 5 while more of its cells cross the threshold.
  Plane other = plane_with(10, 1);
  std::vector<double> other_col(10, 0.0);
  other_col[8] = 1000.0;
  ink_column(other, 1, other_col);
  double last_distance = -1.0;
  for (std::size_t extra = 0; extra <= 9; ++extra) {
    Plane p = plane_with(10, 1);
    std::vector<double> dr(10, 0.0);
    dr[4] = 1000.0;
    std::size_t placed = 0;
    for (std::size_t i = 0; i < 10 && placed < extra; ++i)
      if (i != 4) {
        dr[i] = 20.5;
        ++placed;
      }
    ink_column(p, 1, dr);
    const auto r = infer(model_of({p, other}), std::vector<double>{0.5, 0.5});
    CHECK(r.planes[0].row == 5);
    CHECK(r.planes[0].spread == extra + 1);
    const double distance = std::abs(r.y_hat - r.planes[0].y);
    CHECK(distance >= last_distance);
    last_distance = distance;
  }
}

TEST_CASE("evaluate and error_stats") {
  Plane a = plane_with(10, 4);
  std::vector<double> col(10, 0.0);
  col[3] = 500.0;
  for (std::size_t c = 1; c <= 4; ++c) ink_column(a, c, col);
  const Model m = model_of({a});

  std::vector<Sample> own;
  for (double x : {0.1, 1.3, 2.7, 3.9}) own.push_back({{x}, infer(m, std::vector<double>{x}).y_hat});
  const auto self = evaluate(m, own);
  CHECK(self.rmse == 0.0);
  CHECK(self.max_abs_err == 0.0);

  std::vector<Sample> constant;
  for (double x : {0.2, 3.1}) constant.push_back({{x}, 3.5});
  CHECK(evaluate(m, constant).rmse == doctest::Approx(0.0));

  const auto s = error_stats(std::vector<double>{1.0, 2.0}, std::vector<double>{0.0, 4.0});
  CHECK(s.rmse == doctest::Approx(std::sqrt(2.5)));
  CHECK(s.max_abs_err == 2.0);
  CHECK_THROWS_AS(error_stats(std::vector<double>{1.0}, std::vector<double>{}), std::invalid_argument);
}

TEST_CASE("model validation") {
  Model m;
  CHECK_THROWS_AS(m.validate(), std::invalid_argument);
  m.planes = {plane_with(10, 4), plane_with(8, 4)};
  CHECK_THROWS_AS(m.validate(), std::invalid_argument);
}
