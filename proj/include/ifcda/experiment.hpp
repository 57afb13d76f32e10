#pragma once

// Experiment configuration, batch runs, parameter sweeps and report output.
//
// Config files are flat `key = value` text with `#` comments:
//
//   scenario = osda            # csda | osda
//   source = data/amazon.csv   # or synthetic.* keys instead of source/target
//   target = data/webcam.csv
//   k = 20
//   alpha_set = 0.98
//   sweep.alpha_set = 0.90, 0.95, 0.98
//
// Reports are `metric = value` lines under a `# ifcda-report v1` header.

#include "ifcda/error.hpp"
#include "ifcda/evaluation.hpp"

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace ifcda {

struct DataSource {
  std::optional<SyntheticSpec> synthetic;  // used when set
  std::filesystem::path source_path;
  std::filesystem::path target_path;
  FileFormat format = FileFormat::kCsv;
  bool csv_header = false;
  bool source_has_labels = true;
  bool target_has_labels = true;
  bool standardize = true;
  bool synthetic_seed_set = false;  // else the synthetic seed follows `seed`
};

struct SweepSpec {
  std::string parameter;
  std::vector<std::string> grid;
};

struct ExperimentConfig {
  AdaptationConfig adaptation;
  DataSource data;
  std::optional<SweepSpec> sweep;
};

/// Names accepted by `sweep` and as `sweep.<name>` config keys.
const std::vector<std::string>& sweepable_parameters();

/// Applies one `key = value` assignment. Throws kConfig on unknown keys or
/// unparsable values. Relative data paths resolve against `base_dir`.
void apply_setting(ExperimentConfig& config, const std::string& key, const std::string& value,
                   const std::filesystem::path& base_dir = {});

ExperimentConfig parse_config_text(const std::string& text,
                                   const std::filesystem::path& base_dir = {});
ExperimentConfig parse_config_file(const std::filesystem::path& path);

/// Comma-separated list, optional surrounding brackets. Throws kConfig if empty.
std::vector<std::string> parse_grid(const std::string& text);

/// Applies `key = value` overrides to a synthetic generator spec.
void apply_synthetic_setting(SyntheticSpec& spec, const std::string& key, const std::string& value);

struct LoadedDomains {
  DomainDataset source;
  DomainDataset target;
};

LoadedDomains load_domains(const ExperimentConfig& config);

struct ExperimentOutcome {
  std::string label;  // "" for a single run, "<param>=<value>" in a sweep
  AdaptationResult result;
  Labels predictions;
  std::optional<MetricsReport> metrics;  // present when target labels exist
};

ExperimentOutcome run_single(const ExperimentConfig& config, const LoadedDomains& domains,
                             const GraphObserver& on_graph = {});

struct SweepRow {
  std::string value;
  ExperimentOutcome outcome;
  ExperimentConfig config;  // base config with the grid value applied
};

struct SweepTable {
  std::string parameter;
  std::vector<SweepRow> rows;
};

/// Graph callback that also receives the run label ("<param>=<value>").
using LabelledGraphObserver =
    std::function<void(const std::string& label, int iteration, const SimilarityGraph&)>;

/// One full run per grid value with every other setting (and the seed) fixed.
SweepTable sweep(const std::string& parameter, const std::vector<std::string>& grid,
                 const ExperimentConfig& base, const LoadedDomains& domains,
                 const LabelledGraphObserver& on_graph = {});

std::string format_report(const ExperimentConfig& config, const ExperimentOutcome& outcome);
std::string format_trajectory_csv(const ExperimentOutcome& outcome);
std::string format_sweep_csv(const SweepTable& table);

struct RunOptions {
  std::filesystem::path out_dir = ".";
  std::optional<std::uint64_t> seed;
  std::optional<bool> csv_header;
  bool dump_graph = false;
  std::optional<SweepSpec> sweep;  // overrides any sweep in the file
};

/// Loads the config, runs it (fanning out over `sweep.<param>` if present)
/// and writes report files into `out_dir` only after every run succeeded.
/// Returns one outcome per run.
std::vector<ExperimentOutcome> run_experiment(const std::filesystem::path& config_path,
                                              const RunOptions& options = {});

/// CLI exit code for an error kind: 2 config, 3 file, 4 data, 5 pipeline.
int exit_code_for(ErrorKind kind);

}  // namespace ifcda
