#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ids/alm.hpp"

namespace ids {

/// Everything needed to build, train and evaluate a model. Read from a
/// key=value file; defaults reproduce the 2-input, 100 x 90 crossbar run.
struct ExperimentConfig {
  std::size_t n_inputs = 2;
  std::size_t rows = 90;   // y cells
  std::size_t cols = 100;  // x cells
  double x_lo = 1.0;
  double x_hi = 10.0;
  std::optional<double> y_lo;  // derived from the training data when unset
  std::optional<double> y_hi;
  double y_pad = 0.05;

  DeviceParams device;
  bool mu_v_set = false;       // otherwise calibrated from peak_delta_r
  double peak_delta_r = 100.0; // Ohm per fresh drop
  double r_couple = 1000.0;
  bool rectify = true;  // junction diodes; the plain crossbar smears each drop along its whole row and column

  PulseSpec pulse;
  ReadoutConfig readout;
  double epsilon_weight = 0.01;

  std::size_t samples = 800;
  std::uint64_t seed = 42;
  std::string target = "eq16";  // builtin function id; ignored when dataset is set
  std::string dataset;          // CSV path
  std::size_t eval_grid = 30;   // points per axis
  bool parallel = true;

  /// Applies one `key=value` assignment. Throws std::out_of_range on an
  /// unknown key and std::invalid_argument on a malformed value.
  void set(const std::string& key, const std::string& value);

  /// Device parameters with mu_v calibrated unless given explicitly.
  DeviceParams effective_device() const;
};

/// Parses `key=value` lines; '#' starts a comment. Errors carry the line.
ExperimentConfig parse_config(std::istream& in, ExperimentConfig base = {});
ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base = {});

/// sqrt(2 (sin x1 / x1)^2 + 3 (sin x2 / x2)^2)
double eq16(double x1, double x2);

/// `count` samples drawn uniformly over [x_lo, x_hi]^2 from one seeded generator.
std::vector<Sample> generate_eq16(std::size_t count, std::uint64_t seed, double x_lo, double x_hi);

/// Dataset CSV: header `x1,...,xN,y`, then one sample per line.
std::vector<Sample> read_dataset_csv(std::istream& in);
std::vector<Sample> read_dataset_csv(const std::filesystem::path& path);
void write_dataset_csv(std::ostream& out, std::span<const Sample> data);

/// Training data named by the config: the dataset file when set, else the builtin target.
std::vector<Sample> training_data(const ExperimentConfig& cfg);

/// y quantizer: config range if given, else data min/max padded by y_pad.
Quantizer y_quantizer(const ExperimentConfig& cfg, std::span<const Sample> data);

/// Fresh, untrained model sized for `data`.
Model make_model(const ExperimentConfig& cfg, std::span<const Sample> data);

/// Largest dR / R_off over all planes.
double max_delta_r_ratio(const Model& model);
inline constexpr double kLinearRegimeLimit = 0.05;

/// Evaluation points with ground truth: a full grid for the builtin target,
/// the training data itself for an external dataset.
std::vector<Sample> evaluation_set(const ExperimentConfig& cfg, std::span<const Sample> training);

/// Shortest round-trip decimal, locale independent.
std::string format_real(double v);

struct ExperimentSummary {
  ErrorStats error;
  double max_delta_r_ratio = 0.0;
  std::size_t samples = 0;
  double runtime_s = 0.0;
};

/// End-to-end run writing fig7.csv, fig10_<i>.csv, fig11_<i>.csv, fig12_<i>.csv,
/// fig13.csv, metrics.txt (deterministic) and timing.txt into `out_dir`.
/// The trained model is moved into `trained` when given.
ExperimentSummary run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& out_dir,
                                 Model* trained = nullptr);

/// Footprint of one drop at the centre cell of a fresh plane built from `cfg`.
Eigen::MatrixXd single_drop_footprint(const ExperimentConfig& cfg, std::span<const Sample> data);

}  // namespace ids
