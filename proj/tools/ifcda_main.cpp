// ifcda command-line driver.
//
//   ifcda run <config> [--out DIR] [--seed S] [--csv-header] [--dump-graph]
//   ifcda sweep <param> <grid> <config> [...same flags]
//   ifcda synth [key=value ...] [--out DIR] [--format csv|binary] [--seed S]

#include "ifcda/experiment.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

void print_summary(const ifcda::ExperimentOutcome& outcome) {
  if (!outcome.label.empty()) std::cout << outcome.label << ": ";
  if (!outcome.metrics) {
    std::cout << outcome.predictions.size() << " target samples labelled\n";
    return;
  }
  const auto& m = *outcome.metrics;
  if (m.scenario == ifcda::Scenario::kOpenSet) {
    std::cout << "OS = " << m.os << "  OS* = " << m.os_star
              << "  UNK = " << (m.unk ? *m.unk : 0.0) << '\n';
  } else {
    std::cout << "accuracy = " << m.accuracy << '\n';
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Importance-filtered cross-domain adaptation (closed-set and open-set)"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;
  bool csv_header = false;
  bool dump_graph = false;
  app.add_option("--out", out_dir, "Output directory for reports")->capture_default_str();
  app.add_option("--seed", seed, "Override the config seed");
  app.add_flag("--csv-header", csv_header, "Input CSV files have a header row");
  app.add_flag("--dump-graph", dump_graph, "Write similarity-graph edge lists");

  auto* run = app.add_subcommand("run", "Run one experiment config (fans out over sweep.* keys)");
  std::string config_path;
  run->add_option("config", config_path, "Experiment config file")->required();

  auto* sweep_cmd = app.add_subcommand("sweep", "Sweep one parameter over a grid");
  std::string parameter;
  std::string grid_text;
  sweep_cmd->add_option("param", parameter, "T, k, p, N, tau, alpha_set, gamma, beta, lambda, delta")
      ->required();
  sweep_cmd->add_option("grid", grid_text, "Comma-separated grid, e.g. 0.9,0.95,0.98")->required();
  sweep_cmd->add_option("config", config_path, "Base experiment config file")->required();

  auto* synth = app.add_subcommand("synth", "Write a synthetic source/target pair");
  std::vector<std::string> overrides;
  std::string format = "csv";
  synth->add_option("overrides", overrides, "key=value synthetic settings (classes, novel, ...)");
  synth->add_option("--format", format, "csv or binary")
      ->check(CLI::IsMember({"csv", "binary"}))
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // --help and --version exit 0; every other usage error is a parameter error
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (synth->parsed()) {
      ifcda::SyntheticSpec spec;
      if (seed) spec.seed = *seed;
      for (const std::string& item : overrides) {
        const auto eq = item.find('=');
        if (eq == std::string::npos) {
          throw ifcda::Error(ifcda::ErrorKind::kConfig, "expected key=value, got '" + item + "'");
        }
        ifcda::apply_synthetic_setting(spec, item.substr(0, eq), item.substr(eq + 1));
      }
      auto [source, target] = ifcda::make_synthetic(spec);
      std::filesystem::create_directories(out_dir);
      const auto fmt = format == "csv" ? ifcda::FileFormat::kCsv : ifcda::FileFormat::kBinary;
      const std::string ext = format == "csv" ? ".csv" : ".bin";
      ifcda::save_features(source, std::filesystem::path(out_dir) / ("source" + ext), fmt, csv_header);
      ifcda::save_features(target, std::filesystem::path(out_dir) / ("target" + ext), fmt, csv_header);
      std::cout << "wrote " << source.size() << " source and " << target.size()
                << " target samples to " << out_dir << '\n';
      return 0;
    }

    ifcda::RunOptions options;
    options.out_dir = out_dir;
    options.seed = seed;
    if (csv_header) options.csv_header = true;
    options.dump_graph = dump_graph;
    if (sweep_cmd->parsed()) {
      const auto& names = ifcda::sweepable_parameters();
      if (std::find(names.begin(), names.end(), parameter) == names.end()) {
        throw ifcda::Error(ifcda::ErrorKind::kConfig, "parameter '" + parameter + "' cannot be swept");
      }
      options.sweep = ifcda::SweepSpec{parameter, ifcda::parse_grid(grid_text)};
    }
    for (const auto& outcome : ifcda::run_experiment(config_path, options)) print_summary(outcome);
  } catch (const ifcda::Error& e) {
    std::cerr << "ifcda: " << e.what() << '\n';
    return ifcda::exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "ifcda: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
