#include "ids/alm.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "ids/errors.hpp"

namespace ids {

void Model::validate() const {
  if (planes.empty()) throw std::invalid_argument("model: no planes");
  for (const auto& p : planes) {
    if (p.rows() != planes.front().rows() || !(p.y_quant() == planes.front().y_quant()))
      throw std::invalid_argument("model: planes disagree on y resolution");
    readout.validate(p.params().r_off);
  }
  pulse.validate();
  if (!(epsilon_weight > 0.0)) throw std::invalid_argument("model: epsilon_weight must be positive");
}

double inverse_spread_weight(std::size_t spread, std::size_t rows, double epsilon) {
  return 1.0 / (static_cast<double>(spread) / static_cast<double>(rows) + epsilon);
}

std::vector<std::size_t> fill_gaps(std::span<const std::optional<std::size_t>> rows) {
  std::vector<std::size_t> out(rows.size(), 0);
  std::optional<std::size_t> prev;
  for (std::size_t j = 0; j < rows.size(); ++j) {
    if (!rows[j]) continue;
    out[j] = *rows[j];
    if (!prev) {
      std::fill(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(j), *rows[j]);
    } else if (j - *prev > 1) {
      const double a = static_cast<double>(*rows[*prev]);
      const double b = static_cast<double>(*rows[j]);
      const double span = static_cast<double>(j - *prev);
      for (std::size_t k = *prev + 1; k < j; ++k) {
        const double t = static_cast<double>(k - *prev) / span;
        out[k] = static_cast<std::size_t>(std::lround(a + t * (b - a)));
      }
    }
    prev = j;
  }
  if (!prev) throw UntrainedError("plane holds no ink: every column is empty");
  std::fill(out.begin() + static_cast<std::ptrdiff_t>(*prev) + 1, out.end(), *rows[*prev]);
  return out;
}

std::vector<std::size_t> narrow_path_curve(const Plane& plane, const ReadoutConfig& cfg) {
  std::vector<std::optional<std::size_t>> rows(plane.cols());
  for (std::size_t j = 1; j <= plane.cols(); ++j) {
    const auto z = connector_voltages(plane, j, cfg);
    rows[j - 1] = narrow_path_row(summing_profile(z, cfg), cfg);
  }
  return fill_gaps(rows);
}

InferenceBreakdown infer(const Model& model, std::span<const double> x, const WeightRule& rule) {
  if (x.size() != model.planes.size())
    throw DataError("query has " + std::to_string(x.size()) + " inputs, model has " +
                    std::to_string(model.planes.size()) + " planes");
  InferenceBreakdown out;
  out.planes.reserve(x.size());
  std::vector<std::size_t> cols(x.size());
  for (std::size_t i = 0; i < x.size(); ++i)
    cols[i] = model.planes[i].x_quant().quantize(x[i], "plane " + std::to_string(i + 1) + " x");

  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const Plane& plane = model.planes[i];
    const ReadoutResult r = read_plane(plane, cols[i], model.readout);
    PlaneInference pi;
    pi.col = cols[i];
    pi.measured_row = r.narrow_path;
    pi.row = r.narrow_path ? *r.narrow_path : narrow_path_curve(plane, model.readout)[cols[i] - 1];
    pi.spread = r.spread;
    pi.y = plane.y_quant().midpoint(pi.row);
    pi.weight = rule(r.spread, plane.rows(), model.epsilon_weight);
    if (!(pi.weight >= 0.0)) throw std::domain_error("infer: weight rule returned a negative weight");
    num += pi.weight * pi.y;
    den += pi.weight;
    out.planes.push_back(pi);
  }
  if (!(den > 0.0)) throw std::domain_error("infer: all plane weights are zero");
  out.y_hat = num / den;
  return out;
}

ErrorStats error_stats(std::span<const double> predicted, std::span<const double> truth) {
  if (predicted.size() != truth.size()) throw std::invalid_argument("error_stats: size mismatch");
  ErrorStats s;
  if (predicted.empty()) return s;
  double sq = 0.0;
  for (std::size_t k = 0; k < predicted.size(); ++k) {
    const double e = predicted[k] - truth[k];
    sq += e * e;
    s.max_abs_err = std::max(s.max_abs_err, std::abs(e));
  }
  s.rmse = std::sqrt(sq / static_cast<double>(predicted.size()));
  return s;
}

ErrorStats evaluate(const Model& model, std::span<const Sample> grid, const WeightRule& rule) {
  std::vector<double> predicted;
  std::vector<double> truth;
  predicted.reserve(grid.size());
  truth.reserve(grid.size());
  for (const auto& s : grid) {
    predicted.push_back(infer(model, s.x, rule).y_hat);
    truth.push_back(s.y);
  }
  return error_stats(predicted, truth);
}

}  // namespace ids
