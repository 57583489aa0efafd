#include "ids/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <random>
#include <sstream>
#include <stdexcept>

#include "ids/errors.hpp"
#include "ids/readout.hpp"

namespace ids {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <typename T>
bool parse_number(std::string_view text, T& out) {
  text = trim(text);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, out);
  return ec == std::errc() && ptr == end && !text.empty();
}

double real_value(const std::string& key, const std::string& value) {
  double v = 0.0;
  if (!parse_number(value, v) || !std::isfinite(v)) throw std::invalid_argument("bad real for '" + key + "': " + value);
  return v;
}

std::uint64_t count_value(const std::string& key, const std::string& value) {
  std::uint64_t v = 0;
  if (!parse_number(value, v)) throw std::invalid_argument("bad integer for '" + key + "': " + value);
  return v;
}

bool flag_value(const std::string& key, const std::string& value) {
  const auto v = trim(value);
  if (v == "1" || v == "true" || v == "on") return true;
  if (v == "0" || v == "false" || v == "off") return false;
  throw std::invalid_argument("bad flag for '" + key + "': " + value);
}

}  // namespace

void ExperimentConfig::set(const std::string& key, const std::string& value) {
  using Setter = std::function<void(ExperimentConfig&, const std::string&, const std::string&)>;
  static const std::map<std::string, Setter> setters = {
      {"n_inputs", [](auto& c, auto& k, auto& v) { c.n_inputs = count_value(k, v); }},
      {"rows", [](auto& c, auto& k, auto& v) { c.rows = count_value(k, v); }},
      {"cols", [](auto& c, auto& k, auto& v) { c.cols = count_value(k, v); }},
      {"x_lo", [](auto& c, auto& k, auto& v) { c.x_lo = real_value(k, v); }},
      {"x_hi", [](auto& c, auto& k, auto& v) { c.x_hi = real_value(k, v); }},
      {"y_lo", [](auto& c, auto& k, auto& v) { c.y_lo = real_value(k, v); }},
      {"y_hi", [](auto& c, auto& k, auto& v) { c.y_hi = real_value(k, v); }},
      {"y_pad", [](auto& c, auto& k, auto& v) { c.y_pad = real_value(k, v); }},
      {"r_on", [](auto& c, auto& k, auto& v) { c.device.r_on = real_value(k, v); }},
      {"r_off", [](auto& c, auto& k, auto& v) { c.device.r_off = real_value(k, v); }},
      {"d", [](auto& c, auto& k, auto& v) { c.device.d = real_value(k, v); }},
      {"mu_v",
       [](auto& c, auto& k, auto& v) {
         c.device.mu_v = real_value(k, v);
         c.mu_v_set = true;
       }},
      {"peak_delta_r", [](auto& c, auto& k, auto& v) { c.peak_delta_r = real_value(k, v); }},
      {"r_couple", [](auto& c, auto& k, auto& v) { c.r_couple = real_value(k, v); }},
      {"rectify", [](auto& c, auto& k, auto& v) { c.rectify = flag_value(k, v); }},
      {"v0", [](auto& c, auto& k, auto& v) { c.pulse.v0 = real_value(k, v); }},
      {"t0", [](auto& c, auto& k, auto& v) { c.pulse.t0 = real_value(k, v); }},
      {"steps", [](auto& c, auto& k, auto& v) { c.pulse.steps = count_value(k, v); }},
      {"v_in", [](auto& c, auto& k, auto& v) { c.readout.v_in = real_value(k, v); }},
      {"v_dd", [](auto& c, auto& k, auto& v) { c.readout.v_dd = real_value(k, v); }},
      {"r_res", [](auto& c, auto& k, auto& v) { c.readout.r_res = real_value(k, v); }},
      {"r_x", [](auto& c, auto& k, auto& v) { c.readout.r_x = real_value(k, v); }},
      {"delta", [](auto& c, auto& k, auto& v) { c.readout.delta_threshold = real_value(k, v); }},
      {"epsilon_weight", [](auto& c, auto& k, auto& v) { c.epsilon_weight = real_value(k, v); }},
      {"samples", [](auto& c, auto& k, auto& v) { c.samples = count_value(k, v); }},
      {"seed", [](auto& c, auto& k, auto& v) { c.seed = count_value(k, v); }},
      {"target", [](auto& c, auto&, auto& v) { c.target = std::string(trim(v)); }},
      {"dataset", [](auto& c, auto&, auto& v) { c.dataset = std::string(trim(v)); }},
      {"eval_grid", [](auto& c, auto& k, auto& v) { c.eval_grid = count_value(k, v); }},
      {"parallel", [](auto& c, auto& k, auto& v) { c.parallel = flag_value(k, v); }},
  };
  const auto it = setters.find(key);
  if (it == setters.end()) throw std::out_of_range("unknown config key '" + key + "'");
  it->second(*this, key, value);
}

DeviceParams ExperimentConfig::effective_device() const {
  DeviceParams p = device;
  if (!mu_v_set) p.mu_v = calibrate_mobility(device, pulse, peak_delta_r);
  return p;
}

ExperimentConfig parse_config(std::istream& in, ExperimentConfig base) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view body = line;
    if (const auto hash = body.find('#'); hash != std::string_view::npos) body = body.substr(0, hash);
    body = trim(body);
    if (body.empty()) continue;
    const std::size_t start = static_cast<std::size_t>(body.data() - line.data()) + 1;
    const auto eq = body.find('=');
    if (eq == std::string_view::npos) throw ParseError("expected key=value", line_no, start);
    try {
      base.set(std::string(trim(body.substr(0, eq))), std::string(trim(body.substr(eq + 1))));
    } catch (const std::out_of_range& e) {
      throw ParseError(e.what(), line_no, start);
    } catch (const std::invalid_argument& e) {
      throw ParseError(e.what(), line_no, start + eq + 1);
    }
  }
  return base;
}

ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read config " + path.string());
  return parse_config(in, std::move(base));
}

double eq16(double x1, double x2) {
  const double s1 = std::sin(x1) / x1;
  const double s2 = std::sin(x2) / x2;
  return std::sqrt(2.0 * s1 * s1 + 3.0 * s2 * s2);
}

std::vector<Sample> generate_eq16(std::size_t count, std::uint64_t seed, double x_lo, double x_hi) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(x_lo, x_hi);
  std::vector<Sample> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    const double x1 = u(rng);
    const double x2 = u(rng);
    out.push_back(Sample{{x1, x2}, eq16(x1, x2)});
  }
  return out;
}

std::vector<Sample> read_dataset_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  std::size_t width = 0;
  std::vector<Sample> out;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    std::vector<std::string_view> fields;
    std::vector<std::size_t> starts;
    std::string_view rest = line;
    std::size_t offset = 0;
    while (true) {
      const auto comma = rest.find(',');
      fields.push_back(rest.substr(0, comma));
      starts.push_back(offset + 1);
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
      offset += comma + 1;
    }
    if (width == 0) {
      if (fields.size() < 2) throw ParseError("header needs at least one input and y", line_no, 1);
      for (std::size_t k = 0; k + 1 < fields.size(); ++k)
        if (trim(fields[k]) != "x" + std::to_string(k + 1))
          throw ParseError("expected header x" + std::to_string(k + 1), line_no, starts[k]);
      if (trim(fields.back()) != "y") throw ParseError("expected header y", line_no, starts.back());
      width = fields.size();
      continue;
    }
    if (fields.size() != width)
      throw ParseError("expected " + std::to_string(width) + " fields, got " + std::to_string(fields.size()), line_no,
                       1);
    Sample s;
    s.x.resize(width - 1);
    for (std::size_t k = 0; k < width; ++k) {
      double v = 0.0;
      if (!parse_number(fields[k], v) || !std::isfinite(v))
        throw ParseError("bad number '" + std::string(trim(fields[k])) + "'", line_no, starts[k]);
      (k + 1 < width ? s.x[k] : s.y) = v;
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<Sample> read_dataset_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read dataset " + path.string());
  return read_dataset_csv(in);
}

std::string format_real(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

void write_dataset_csv(std::ostream& out, std::span<const Sample> data) {
  const std::size_t n = data.empty() ? 1 : data.front().x.size();
  for (std::size_t k = 0; k < n; ++k) out << 'x' << k + 1 << ',';
  out << "y\n";
  for (const auto& s : data) {
    for (double x : s.x) out << format_real(x) << ',';
    out << format_real(s.y) << '\n';
  }
}

std::vector<Sample> training_data(const ExperimentConfig& cfg) {
  if (!cfg.dataset.empty()) return read_dataset_csv(std::filesystem::path(cfg.dataset));
  if (cfg.target != "eq16") throw std::invalid_argument("unknown builtin target '" + cfg.target + "'");
  if (cfg.n_inputs != 2) throw std::invalid_argument("builtin eq16 needs n_inputs=2");
  return generate_eq16(cfg.samples, cfg.seed, cfg.x_lo, cfg.x_hi);
}

Quantizer y_quantizer(const ExperimentConfig& cfg, std::span<const Sample> data) {
  double lo = 0.0;
  double hi = 1.0;
  if (!data.empty()) {
    const auto [mn, mx] = std::minmax_element(data.begin(), data.end(),
                                              [](const Sample& a, const Sample& b) { return a.y < b.y; });
    const double span = mx->y - mn->y;
    const double pad = span > 0.0 ? cfg.y_pad * span : std::max(std::abs(mn->y) * cfg.y_pad, 0.5);
    lo = mn->y - pad;
    hi = mx->y + pad;
  }
  if (cfg.y_lo) lo = *cfg.y_lo;
  if (cfg.y_hi) hi = *cfg.y_hi;
  Quantizer q{lo, hi, cfg.rows};
  q.validate();
  return q;
}

Model make_model(const ExperimentConfig& cfg, std::span<const Sample> data) {
  const std::size_t n_inputs = data.empty() ? cfg.n_inputs : data.front().x.size();
  if (n_inputs == 0) throw std::invalid_argument("model needs at least one input");
  const Quantizer yq = y_quantizer(cfg, data);
  const Quantizer xq{cfg.x_lo, cfg.x_hi, cfg.cols};
  const DeviceParams device = cfg.effective_device();
  Model model;
  for (std::size_t i = 0; i < n_inputs; ++i) model.planes.emplace_back(cfg.rows, cfg.cols, device, cfg.r_couple, xq, yq, cfg.rectify);
  model.readout = cfg.readout;
  model.pulse = cfg.pulse;
  model.epsilon_weight = cfg.epsilon_weight;
  model.validate();
  return model;
}

double max_delta_r_ratio(const Model& model) {
  double worst = 0.0;
  for (const auto& p : model.planes) worst = std::max(worst, total_delta_r(p).maxCoeff() / p.params().r_off);
  return worst;
}

std::vector<Sample> evaluation_set(const ExperimentConfig& cfg, std::span<const Sample> training) {
  if (!cfg.dataset.empty()) return {training.begin(), training.end()};
  const std::size_t k = std::max<std::size_t>(cfg.eval_grid, 2);
  std::vector<Sample> grid;
  grid.reserve(k * k);
  const double step = (cfg.x_hi - cfg.x_lo) / static_cast<double>(k - 1);
  for (std::size_t a = 0; a < k; ++a)
    for (std::size_t b = 0; b < k; ++b) {
      const double x1 = a + 1 == k ? cfg.x_hi : cfg.x_lo + step * static_cast<double>(a);
      const double x2 = b + 1 == k ? cfg.x_hi : cfg.x_lo + step * static_cast<double>(b);
      grid.push_back(Sample{{x1, x2}, eq16(x1, x2)});
    }
  return grid;
}

Eigen::MatrixXd single_drop_footprint(const ExperimentConfig& cfg, std::span<const Sample> data) {
  const Model fresh = make_model(cfg, data);
  Plane plane = fresh.planes.front();
  drop_ink(plane, (plane.cols() + 1) / 2, (plane.rows() + 1) / 2, cfg.pulse);
  return total_delta_r(plane);
}

namespace {

void write_matrix_csv(const std::filesystem::path& path, const Eigen::MatrixXd& m) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "row,col,delta_r\n";
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) out << i + 1 << ',' << j + 1 << ',' << format_real(m(i, j)) << '\n';
}

}  // namespace

ExperimentSummary run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& out_dir, Model* trained) {
  const auto started = std::chrono::steady_clock::now();
  std::filesystem::create_directories(out_dir);

  const auto data = training_data(cfg);
  Model model = make_model(cfg, data);

  write_matrix_csv(out_dir / "fig7.csv", single_drop_footprint(cfg, data));

  spread_dataset(model.planes, data, model.pulse, cfg.parallel);

  ExperimentSummary summary;
  summary.samples = data.size();
  summary.max_delta_r_ratio = max_delta_r_ratio(model);

  for (std::size_t i = 0; i < model.planes.size(); ++i) {
    const Plane& plane = model.planes[i];
    const std::string tag = std::to_string(i + 1);
    write_matrix_csv(out_dir / ("fig10_" + tag + ".csv"), total_delta_r(plane));

    std::ofstream np(out_dir / ("fig11_" + tag + ".csv"));
    std::ofstream sp(out_dir / ("fig12_" + tag + ".csv"));
    if (!np || !sp) throw DataError("cannot write readout CSVs in " + out_dir.string());
    np << "col,x,row,y,measured\n";
    sp << "col,x,spread,i_spread\n";
    std::vector<std::optional<std::size_t>> measured(plane.cols());
    std::vector<ReadoutResult> reads;
    for (std::size_t j = 1; j <= plane.cols(); ++j) {
      reads.push_back(read_plane(plane, j, model.readout));
      measured[j - 1] = reads.back().narrow_path;
    }
    std::vector<std::size_t> curve;
    try {
      curve = fill_gaps(measured);
    } catch (const UntrainedError&) {
      curve.assign(plane.cols(), 0);
    }
    for (std::size_t j = 1; j <= plane.cols(); ++j) {
      const double x = plane.x_quant().midpoint(j);
      const std::size_t row = curve[j - 1];
      np << j << ',' << format_real(x) << ',' << row << ',' << (row ? format_real(plane.y_quant().midpoint(row)) : "nan")
         << ',' << (measured[j - 1] ? 1 : 0) << '\n';
      sp << j << ',' << format_real(x) << ',' << reads[j - 1].spread << ',' << format_real(reads[j - 1].i_spread)
         << '\n';
    }
  }

  const auto eval = evaluation_set(cfg, data);
  std::vector<double> predicted;
  std::vector<double> truth;
  {
    std::ofstream out(out_dir / "fig13.csv");
    if (!out) throw DataError("cannot write fig13.csv");
    for (std::size_t k = 0; k < model.planes.size(); ++k) out << 'x' << k + 1 << ',';
    out << "y_true,y_hat\n";
    for (const auto& s : eval) {
      const double y_hat = infer(model, s.x).y_hat;
      predicted.push_back(y_hat);
      truth.push_back(s.y);
      for (double x : s.x) out << format_real(x) << ',';
      out << format_real(s.y) << ',' << format_real(y_hat) << '\n';
    }
  }
  summary.error = error_stats(predicted, truth);

  {
    std::ofstream out(out_dir / "metrics.txt");
    out << "samples=" << summary.samples << '\n'
        << "planes=" << model.planes.size() << '\n'
        << "rows=" << cfg.rows << '\n'
        << "cols=" << cfg.cols << '\n'
        << "seed=" << cfg.seed << '\n'
        << "mu_v=" << format_real(model.planes.front().params().mu_v) << '\n'
        << "eval_points=" << eval.size() << '\n'
        << "rmse=" << format_real(summary.error.rmse) << '\n'
        << "max_abs_err=" << format_real(summary.error.max_abs_err) << '\n'
        << "max_delta_r_ratio=" << format_real(summary.max_delta_r_ratio) << '\n'
        << "linear_regime=" << (summary.max_delta_r_ratio <= kLinearRegimeLimit ? "ok" : "violated") << '\n';
  }
  summary.runtime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  std::ofstream(out_dir / "timing.txt") << "runtime_s=" << format_real(summary.runtime_s) << '\n';
  if (trained) *trained = std::move(model);
  return summary;
}

}  // namespace ids
