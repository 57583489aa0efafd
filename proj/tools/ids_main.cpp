// ids: train memristor-crossbar IDS planes, query them, and reproduce the
// 2-input modelling experiment.

#include <cstdint>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ids/alm.hpp"
#include "ids/errors.hpp"
#include "ids/experiment.hpp"
#include "ids/snapshot.hpp"
#ifdef IDS_WITH_ORACLE
#include "ids/oracle.hpp"
#endif

namespace {

enum ExitCode : int { kOk = 0, kUsage = 2, kData = 3, kNumerical = 4 };

struct Options {
  std::string config;
  std::string state;
  std::string out = "ids_out";
  std::string data;
  std::optional<std::uint64_t> seed;
  std::vector<double> x;
  std::size_t plane = 0;
};

ids::ExperimentConfig resolve_config(const Options& opt) {
  ids::ExperimentConfig cfg;
  if (!opt.config.empty()) cfg = ids::load_config(opt.config);
  if (opt.seed) cfg.seed = *opt.seed;
  if (!opt.data.empty()) cfg.dataset = opt.data;
  return cfg;
}

void report_regime(double ratio) {
  std::cout << "max_delta_r_ratio=" << ids::format_real(ratio) << '\n';
  if (ratio > ids::kLinearRegimeLimit)
    std::cerr << "warning: max dR/R_off " << ratio << " exceeds the linear-regime limit " << ids::kLinearRegimeLimit
              << "; narrow paths read from these planes are biased\n";
}

int cmd_spread(const Options& opt) {
  if (opt.state.empty()) throw CLI::RequiredError("--state");
  const auto cfg = resolve_config(opt);
  const auto data = ids::training_data(cfg);
  ids::Model model = ids::make_model(cfg, data);
  ids::spread_dataset(model.planes, data, model.pulse, cfg.parallel);
  ids::save_model(model, opt.state);
  std::cout << "samples=" << data.size() << "\nplanes=" << model.planes.size() << '\n';
  report_regime(ids::max_delta_r_ratio(model));
  return kOk;
}

int cmd_query(const Options& opt) {
  if (opt.state.empty()) throw CLI::RequiredError("--state");
  const ids::Model model = ids::load_model(opt.state);
  const auto result = ids::infer(model, opt.x);
  std::cout << "plane,col,narrow_path,interpolated,spread,y,weight\n";
  for (std::size_t i = 0; i < result.planes.size(); ++i) {
    const auto& p = result.planes[i];
    std::cout << i + 1 << ',' << p.col << ',' << p.row << ',' << (p.measured_row ? 0 : 1) << ',' << p.spread << ','
              << ids::format_real(p.y) << ',' << ids::format_real(p.weight) << '\n';
  }
  std::cout << "y_hat=" << ids::format_real(result.y_hat) << '\n';
  return kOk;
}

int cmd_model(const Options& opt) {
  const auto cfg = resolve_config(opt);
  const auto summary = ids::run_experiment(cfg, opt.out);
  std::cout << "samples=" << summary.samples << "\nrmse=" << ids::format_real(summary.error.rmse)
            << "\nmax_abs_err=" << ids::format_real(summary.error.max_abs_err)
            << "\nruntime_s=" << ids::format_real(summary.runtime_s) << '\n';
  report_regime(summary.max_delta_r_ratio);
  std::cout << "artifacts=" << opt.out << '\n';
  return kOk;
}

int cmd_oracle(const Options& opt) {
#ifdef IDS_WITH_ORACLE
  if (opt.state.empty()) throw CLI::RequiredError("--state");
  const ids::Model model = ids::load_model(opt.state);
  std::cout << "plane,col,circuit_row,oracle_row,circuit_spread,oracle_spread\n";
  std::size_t columns = 0;
  std::size_t row_agree = 0;
  std::size_t spread_agree = 0;
  for (std::size_t i = 0; i < model.planes.size(); ++i) {
    if (opt.plane != 0 && opt.plane != i + 1) continue;
    const ids::Plane& plane = model.planes[i];
    const Eigen::MatrixXd ink = ids::total_delta_r(plane);
    for (std::size_t j = 1; j <= plane.cols(); ++j) {
      std::vector<double> column(plane.rows());
      for (std::size_t r = 0; r < plane.rows(); ++r)
        column[r] = ink(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j - 1));
      const auto circuit = ids::read_plane(plane, j, model.readout);
      const auto reference = ids::oracle::oracle_balance_row(column);
      const auto spread = ids::oracle::oracle_spread(column, model.readout.delta_threshold);
      auto show = [](std::optional<std::size_t> r) { return r ? std::to_string(*r) : std::string("none"); };
      std::cout << i + 1 << ',' << j << ',' << show(circuit.narrow_path) << ',' << show(reference) << ','
                << circuit.spread << ',' << spread << '\n';
      ++columns;
      row_agree += circuit.narrow_path == reference;
      spread_agree += circuit.spread == spread;
    }
  }
  std::cout << "columns=" << columns << "\nnarrow_path_agreement=" << row_agree << "\nspread_agreement=" << spread_agree
            << '\n';
  return kOk;
#else
  (void)opt;
  std::cerr << "ids was built without the oracle library\n";
  return kUsage;
#endif
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Memristor-crossbar ink drop spread simulator"};
  app.require_subcommand(1);
  Options opt;

  auto* spread = app.add_subcommand("spread", "Train planes from a dataset and write a state file");
  spread->add_option("--config", opt.config, "key=value configuration file")->check(CLI::ExistingFile);
  spread->add_option("--seed", opt.seed, "Random seed (overrides the config)");
  spread->add_option("--data", opt.data, "Dataset CSV (header x1,...,xN,y); default is the builtin target");
  spread->add_option("--state", opt.state, "Output state file")->required();

  auto* query = app.add_subcommand("query", "Infer y at an input point from a state file");
  query->add_option("--state", opt.state, "State file")->required()->check(CLI::ExistingFile);
  query->add_option("x", opt.x, "Input values x1 ... xN")->required();

  auto* model = app.add_subcommand("model", "Run the end-to-end experiment and write CSV artifacts");
  model->add_option("--config", opt.config, "key=value configuration file")->check(CLI::ExistingFile);
  model->add_option("--seed", opt.seed, "Random seed (overrides the config)");
  model->add_option("--data", opt.data, "Dataset CSV instead of the builtin target");
  model->add_option("--out", opt.out, "Artifact directory")->capture_default_str();

  auto* oracle = app.add_subcommand("oracle", "Compare circuit readouts with direct ink computations");
  oracle->add_option("--state", opt.state, "State file")->required()->check(CLI::ExistingFile);
  oracle->add_option("--plane", opt.plane, "Only this plane (1-based)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (spread->parsed()) return cmd_spread(opt);
    if (query->parsed()) return cmd_query(opt);
    if (model->parsed()) return cmd_model(opt);
    if (oracle->parsed()) return cmd_oracle(opt);
  } catch (const ids::DataError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kData;
  } catch (const ids::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return kNumerical;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid configuration: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kData;
  }
  return kUsage;
}
