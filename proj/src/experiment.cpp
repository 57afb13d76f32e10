#include "ifcda/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace ifcda {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::string to_lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const char* expected) {
  throw Error(ErrorKind::kConfig, "key '" + key + "': cannot parse '" + value + "' as " + expected);
}

double parse_real(const std::string& key, const std::string& value) {
  double out = 0.0;
  const std::string v = trim(value);
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || !std::isfinite(out)) {
    bad_value(key, value, "a real number");
  }
  return out;
}

long long parse_integer(const std::string& key, const std::string& value) {
  long long out = 0;
  const std::string v = trim(value);
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) bad_value(key, value, "an integer");
  return out;
}

int parse_int(const std::string& key, const std::string& value) {
  const long long v = parse_integer(key, value);
  if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max()) {
    bad_value(key, value, "a 32-bit integer");
  }
  return static_cast<int>(v);
}

bool parse_bool(const std::string& key, const std::string& value) {
  const std::string v = to_lower(trim(value));
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  bad_value(key, value, "a boolean");
}

std::string format_real(double value) {
  char buffer[64];
  std::snprintf(buffer, sizeof buffer, "%.12g", value);
  return buffer;
}

std::string scenario_name(Scenario s) { return s == Scenario::kOpenSet ? "osda" : "csda"; }

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::kFile, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorKind::kFile, "write failed for " + path.string());
}

std::string file_suffix(const std::string& label) {
  if (label.empty()) return {};
  std::string out = "_" + label;
  std::replace(out.begin(), out.end(), '=', '_');
  return out;
}

}  // namespace

const std::vector<std::string>& sweepable_parameters() {
  static const std::vector<std::string> names = {"T",     "k",         "p",     "N",      "tau",
                                                 "alpha_set", "gamma", "beta", "lambda", "delta"};
  return names;
}

void apply_synthetic_setting(SyntheticSpec& spec, const std::string& key, const std::string& value) {
  if (key == "classes") spec.class_count = parse_int(key, value);
  else if (key == "novel") spec.novel_class_count = parse_int(key, value);
  else if (key == "samples") {
    spec.source_samples_per_class = spec.target_samples_per_class = parse_int(key, value);
  } else if (key == "samples_source") spec.source_samples_per_class = parse_int(key, value);
  else if (key == "samples_target") spec.target_samples_per_class = parse_int(key, value);
  else if (key == "dim") spec.dimension = parse_int(key, value);
  else if (key == "shift") spec.mean_shift = parse_real(key, value);
  else if (key == "rotation") spec.rotation_deg = parse_real(key, value);
  else if (key == "noise") spec.noise_scale = parse_real(key, value);
  else if (key == "radius") spec.cluster_radius = parse_real(key, value);
  else if (key == "arc") spec.arc_deg = parse_real(key, value);
  else if (key == "seed") spec.seed = static_cast<std::uint64_t>(parse_integer(key, value));
  else throw Error(ErrorKind::kConfig, "unknown synthetic key '" + key + "'");
}

std::vector<std::string> parse_grid(const std::string& text) {
  std::string body = trim(text);
  if (!body.empty() && body.front() == '[') body.erase(body.begin());
  if (!body.empty() && body.back() == ']') body.pop_back();
  std::vector<std::string> grid;
  std::istringstream in(body);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) grid.push_back(item);
  }
  if (grid.empty()) throw Error(ErrorKind::kConfig, "empty sweep grid");
  return grid;
}

void apply_setting(ExperimentConfig& config, const std::string& key, const std::string& raw_value,
                   const std::filesystem::path& base_dir) {
  const std::string value = trim(raw_value);
  AdaptationConfig& a = config.adaptation;
  DataSource& d = config.data;

  if (key.rfind("synthetic.", 0) == 0) {
    if (!d.synthetic) d.synthetic = SyntheticSpec{};
    const std::string sub = key.substr(10);
    if (sub == "seed") d.synthetic_seed_set = true;
    apply_synthetic_setting(*d.synthetic, sub, value);
    return;
  }
  if (key.rfind("sweep.", 0) == 0) {
    const std::string param = key.substr(6);
    const auto& names = sweepable_parameters();
    if (std::find(names.begin(), names.end(), param) == names.end()) {
      throw Error(ErrorKind::kConfig, "parameter '" + param + "' cannot be swept");
    }
    config.sweep = SweepSpec{param, parse_grid(value)};
    return;
  }

  if (key == "scenario") {
    const std::string v = to_lower(value);
    if (v == "csda") a.scenario = Scenario::kClosedSet;
    else if (v == "osda") a.scenario = Scenario::kOpenSet;
    else bad_value(key, value, "csda|osda");
  } else if (key == "source") {
    d.source_path = base_dir / value;
  } else if (key == "target") {
    d.target_path = base_dir / value;
  } else if (key == "format") {
    const std::string v = to_lower(value);
    if (v == "csv") d.format = FileFormat::kCsv;
    else if (v == "binary" || v == "raw") d.format = FileFormat::kBinary;
    else bad_value(key, value, "csv|binary");
  } else if (key == "csv_header") {
    d.csv_header = parse_bool(key, value);
  } else if (key == "labels" || key == "source_labels") {
    d.source_has_labels = parse_bool(key, value);
  } else if (key == "target_labels") {
    d.target_has_labels = parse_bool(key, value);
  } else if (key == "standardize") {
    d.standardize = parse_bool(key, value);
  } else if (key == "class_count") {
    a.class_count = parse_int(key, value);
  } else if (key == "k") {
    a.dimensions = parse_int(key, value);
  } else if (key == "p") {
    a.neighbors = parse_int(key, value);
  } else if (key == "T") {
    a.iterations = parse_int(key, value);
  } else if (key == "N") {
    a.keep_count = to_lower(value) == "all" ? 0 : parse_int(key, value);
  } else if (key == "tau") {
    a.threshold = parse_real(key, value);
  } else if (key == "alpha_set") {
    a.alpha_set = parse_real(key, value);
  } else if (key == "gamma") {
    a.gamma = parse_real(key, value);
  } else if (key == "beta") {
    a.beta = parse_real(key, value);
  } else if (key == "lambda") {
    a.lambda = parse_real(key, value);
  } else if (key == "delta") {
    a.delta = parse_real(key, value);
  } else if (key == "sigma") {
    if (to_lower(value) == "auto") a.sigma.reset();
    else a.sigma = parse_real(key, value);
  } else if (key == "tie_projections") {
    if (to_lower(value) == "auto") a.tie_projections.reset();
    else a.tie_projections = parse_bool(key, value);
  } else if (key == "normalize_embeddings") {
    a.normalize_embeddings = parse_bool(key, value);
  } else if (key == "seed") {
    a.seed = static_cast<std::uint64_t>(parse_integer(key, value));
  } else {
    throw Error(ErrorKind::kConfig, "unknown key '" + key + "'");
  }
}

ExperimentConfig parse_config_text(const std::string& text, const std::filesystem::path& base_dir) {
  ExperimentConfig config;
  std::istringstream in(text);
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorKind::kConfig, "line " + std::to_string(number) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw Error(ErrorKind::kConfig, "line " + std::to_string(number) + ": empty key");
    try {
      apply_setting(config, key, line.substr(eq + 1), base_dir);
    } catch (const Error& e) {
      throw e.with_context("line " + std::to_string(number));
    }
  }
  if (!config.data.synthetic && (config.data.source_path.empty() || config.data.target_path.empty())) {
    throw Error(ErrorKind::kConfig, "config needs source and target files or synthetic.* keys");
  }
  return config;
}

ExperimentConfig parse_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kFile, "cannot open config " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config_text(buffer.str(), path.parent_path());
}

LoadedDomains load_domains(const ExperimentConfig& config) {
  const DataSource& d = config.data;
  if (d.synthetic) {
    SyntheticSpec spec = *d.synthetic;
    if (!d.synthetic_seed_set) spec.seed = config.adaptation.seed;
    auto [source, target] = make_synthetic(spec);
    if (d.standardize) {
      source.features = standardize_rows(source.features);
      target.features = standardize_rows(target.features);
    }
    return {std::move(source), std::move(target)};
  }
  LoadOptions options;
  options.format = d.format;
  options.csv_header = d.csv_header;
  options.standardize = d.standardize;
  options.class_count = config.adaptation.class_count;
  options.role = Role::kSource;
  options.has_labels = d.source_has_labels;
  DomainDataset source = load_features(d.source_path, options);
  options.role = Role::kTarget;
  options.has_labels = d.target_has_labels;
  DomainDataset target = load_features(d.target_path, options);
  if (!source.labels) throw Error(ErrorKind::kData, "source file must carry labels");
  return {std::move(source), std::move(target)};
}

ExperimentOutcome run_single(const ExperimentConfig& config, const LoadedDomains& domains,
                             const GraphObserver& on_graph) {
  ExperimentOutcome outcome;
  outcome.result = run_ifcda(domains.source, domains.target, config.adaptation, on_graph);
  const Scenario scenario = config.adaptation.scenario;
  const int C = outcome.result.class_count;
  outcome.predictions = predict_hard(outcome.result.target_labels, scenario);
  if (domains.target.labels) {
    MetricsReport report =
        compute_metrics(outcome.predictions, *domains.target.labels, C, scenario);
    for (const IterationSnapshot& snap : outcome.result.iterations) {
      const MetricsReport step = compute_metrics(predict_hard(snap.target_labels, scenario),
                                                 *domains.target.labels, C, scenario);
      report.trajectory.push_back({snap.iteration, step.accuracy, step.os, step.os_star, step.unk});
    }
    outcome.metrics = std::move(report);
  }
  return outcome;
}

SweepTable sweep(const std::string& parameter, const std::vector<std::string>& grid,
                 const ExperimentConfig& base, const LoadedDomains& domains,
                 const LabelledGraphObserver& on_graph) {
  const auto& names = sweepable_parameters();
  if (std::find(names.begin(), names.end(), parameter) == names.end()) {
    throw Error(ErrorKind::kConfig, "parameter '" + parameter + "' cannot be swept");
  }
  if (grid.empty()) throw Error(ErrorKind::kConfig, "empty sweep grid");
  SweepTable table;
  table.parameter = parameter;
  for (const std::string& value : grid) {
    const std::string label = parameter + "=" + value;
    try {
      ExperimentConfig point = base;
      point.sweep.reset();
      apply_setting(point, parameter, value);
      GraphObserver observer;
      if (on_graph) observer = [&](int iteration, const SimilarityGraph& g) { on_graph(label, iteration, g); };
      ExperimentOutcome outcome = run_single(point, domains, observer);
      outcome.label = label;
      table.rows.push_back({value, std::move(outcome), std::move(point)});
    } catch (const Error& e) {
      throw e.with_context(label);
    }
  }
  return table;
}

std::string format_report(const ExperimentConfig& config, const ExperimentOutcome& outcome) {
  const AdaptationConfig& a = config.adaptation;
  std::ostringstream out;
  auto line = [&](const std::string& key, const std::string& value) {
    out << key << " = " << value << '\n';
  };
  out << "# ifcda-report v1\n";
  if (!outcome.label.empty()) line("run", outcome.label);
  line("scenario", scenario_name(a.scenario));
  line("classes", std::to_string(outcome.result.class_count));
  line("target_samples", std::to_string(outcome.predictions.size()));
  line("k", std::to_string(a.dimensions));
  line("p", std::to_string(a.neighbors));
  line("T", std::to_string(a.iterations));
  line("N", a.keep_count == 0 ? "all" : std::to_string(a.keep_count));
  line("tau", format_real(a.threshold));
  if (a.scenario == Scenario::kOpenSet) line("alpha_set", format_real(a.alpha_set));
  line("gamma", format_real(a.gamma));
  line("beta", format_real(a.beta));
  line("lambda", format_real(a.lambda));
  line("delta", format_real(a.delta));
  line("sigma", a.sigma ? format_real(*a.sigma) : "auto");
  line("tie_projections", a.ties_projections() ? "true" : "false");
  line("normalize_embeddings", a.normalize_embeddings ? "true" : "false");
  line("seed", std::to_string(a.seed));
  if (outcome.metrics) {
    const MetricsReport& m = *outcome.metrics;
    line("accuracy", format_real(m.accuracy));
    if (a.scenario == Scenario::kOpenSet) {
      line("OS", format_real(m.os));
      line("OS_star", format_real(m.os_star));
      line("UNK", m.unk ? format_real(*m.unk) : "nan");
    }
    for (std::size_t c = 0; c < m.per_class.size(); ++c) {
      if (m.per_class[c]) line("class_" + std::to_string(c + 1) + "_accuracy", format_real(*m.per_class[c]));
    }
  }
  std::vector<long> counts(static_cast<std::size_t>(outcome.result.class_count + 1), 0);
  for (int y : outcome.predictions) ++counts[static_cast<std::size_t>(y - 1)];
  for (std::size_t c = 0; c < counts.size(); ++c) {
    line("predicted_class_" + std::to_string(c + 1), std::to_string(counts[c]));
  }
  return out.str();
}

std::string format_trajectory_csv(const ExperimentOutcome& outcome) {
  std::ostringstream out;
  if (!outcome.metrics) return {};
  const bool open_set = outcome.metrics->scenario == Scenario::kOpenSet;
  out << (open_set ? "iter,OS,OS_star,UNK\n" : "iter,accuracy\n");
  for (const IterationMetrics& it : outcome.metrics->trajectory) {
    out << it.iteration;
    if (open_set) {
      out << ',' << format_real(it.os) << ',' << format_real(it.os_star) << ','
          << (it.unk ? format_real(*it.unk) : "nan");
    } else {
      out << ',' << format_real(it.accuracy);
    }
    out << '\n';
  }
  return out.str();
}

std::string format_sweep_csv(const SweepTable& table) {
  std::ostringstream out;
  out << table.parameter << ",accuracy,OS,OS_star,UNK\n";
  for (const SweepRow& row : table.rows) {
    out << row.value;
    if (const auto& m = row.outcome.metrics) {
      out << ',' << format_real(m->accuracy) << ',' << format_real(m->os) << ','
          << format_real(m->os_star) << ',' << (m->unk ? format_real(*m->unk) : "nan");
    } else {
      out << ",nan,nan,nan,nan";
    }
    out << '\n';
  }
  return out.str();
}

std::vector<ExperimentOutcome> run_experiment(const std::filesystem::path& config_path,
                                              const RunOptions& options) {
  ExperimentConfig config = parse_config_file(config_path);
  if (options.seed) config.adaptation.seed = *options.seed;
  if (options.csv_header) config.data.csv_header = *options.csv_header;
  if (options.sweep) config.sweep = options.sweep;
  const LoadedDomains domains = load_domains(config);

  struct GraphDump {
    std::string label;
    int iteration;
    SimilarityGraph graph;
  };
  std::vector<GraphDump> graphs;
  LabelledGraphObserver observer;
  if (options.dump_graph) {
    observer = [&](const std::string& label, int iteration, const SimilarityGraph& g) {
      graphs.push_back({label, iteration, g});
    };
  }

  std::vector<ExperimentOutcome> outcomes;
  std::vector<ExperimentConfig> configs;
  std::optional<SweepTable> table;
  if (config.sweep) {
    table = sweep(config.sweep->parameter, config.sweep->grid, config, domains, observer);
    for (const SweepRow& row : table->rows) {
      outcomes.push_back(row.outcome);
      configs.push_back(row.config);
    }
  } else {
    GraphObserver single;
    if (observer) single = [&](int iteration, const SimilarityGraph& g) { observer("", iteration, g); };
    outcomes.push_back(run_single(config, domains, single));
    configs.push_back(config);
  }

  std::error_code ec;
  std::filesystem::create_directories(options.out_dir, ec);
  if (ec) throw Error(ErrorKind::kFile, "cannot create " + options.out_dir.string());
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    const std::string suffix = file_suffix(outcomes[i].label);
    write_text(options.out_dir / ("report" + suffix + ".txt"), format_report(configs[i], outcomes[i]));
    if (outcomes[i].metrics) {
      write_text(options.out_dir / ("iterations" + suffix + ".csv"),
                 format_trajectory_csv(outcomes[i]));
    }
    std::ostringstream predictions;
    for (int y : outcomes[i].predictions) predictions << y << '\n';
    write_text(options.out_dir / ("predictions" + suffix + ".txt"), predictions.str());
  }
  if (table) {
    write_text(options.out_dir / ("sweep_" + table->parameter + ".csv"), format_sweep_csv(*table));
  }
  for (const GraphDump& dump : graphs) {
    write_edge_list(dump.graph, options.out_dir / ("graph" + file_suffix(dump.label) + "_iter" +
                                                  std::to_string(dump.iteration) + ".txt"));
  }
  return outcomes;
}

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kConfig:
    case ErrorKind::kParameter:
      return 2;
    case ErrorKind::kFile:
      return 3;
    case ErrorKind::kFormat:
    case ErrorKind::kData:
    case ErrorKind::kLabel:
      return 4;
    default:
      return 5;
  }
}

}  // namespace ifcda
