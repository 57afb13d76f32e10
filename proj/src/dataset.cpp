#include "ifcda/dataset.hpp"

#include "ifcda/error.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

namespace ifcda {

namespace {

static_assert(std::endian::native == std::endian::little,
              "binary feature files assume a little-endian host");

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) cells.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

double parse_double(const std::string& cell, std::size_t row) {
  double value = 0.0;
  const auto* begin = cell.data();
  const auto* end = cell.data() + cell.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end) {
    // from_chars rejects "nan"/"inf" spellings only on some toolchains.
    try {
      std::size_t used = 0;
      value = std::stod(cell, &used);
      if (used != cell.size()) throw std::invalid_argument(cell);
    } catch (const std::exception&) {
      throw Error(ErrorKind::kFormat,
                  "row " + std::to_string(row + 1) + ": cannot parse '" + cell + "'");
    }
  }
  return value;
}

int parse_label(const std::string& cell, std::size_t row) {
  const double value = parse_double(cell, row);
  if (!std::isfinite(value) || value != std::floor(value)) {
    throw Error(ErrorKind::kLabel,
                "row " + std::to_string(row + 1) + ": label '" + cell + "' is not an integer");
  }
  return static_cast<int>(value);
}

DomainDataset load_csv(const std::filesystem::path& path, const LoadOptions& options) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kFile, "cannot open " + path.string());

  std::vector<std::vector<std::string>> rows;
  std::string line;
  bool skipped_header = !options.csv_header;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    if (!skipped_header) {
      skipped_header = true;
      continue;
    }
    rows.push_back(split_csv_line(line));
  }
  if (rows.empty()) throw Error(ErrorKind::kFormat, path.string() + ": no samples");

  const std::size_t width = rows.front().size();
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != width) {
      throw Error(ErrorKind::kFormat, "ragged row " + std::to_string(r + 1) + ": expected " +
                                          std::to_string(width) + " cells, got " +
                                          std::to_string(rows[r].size()));
    }
  }
  const std::size_t feature_count = options.has_labels ? width - 1 : width;
  if (feature_count == 0) throw Error(ErrorKind::kFormat, "no feature columns");

  DomainDataset dataset;
  dataset.role = options.role;
  dataset.features.resize(static_cast<Eigen::Index>(feature_count),
                          static_cast<Eigen::Index>(rows.size()));
  Labels labels;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t f = 0; f < feature_count; ++f) {
      dataset.features(static_cast<Eigen::Index>(f), static_cast<Eigen::Index>(r)) =
          parse_double(rows[r][f], r);
    }
    if (options.has_labels) labels.push_back(parse_label(rows[r].back(), r));
  }
  if (options.has_labels) dataset.labels = std::move(labels);
  return dataset;
}

template <typename T>
T read_pod(std::istream& in, const std::string& what) {
  T value{};
  if (!in.read(reinterpret_cast<char*>(&value), sizeof(T))) {
    throw Error(ErrorKind::kFormat, "truncated binary file while reading " + what);
  }
  return value;
}

template <typename T>
void write_pod(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

DomainDataset load_binary(const std::filesystem::path& path, const LoadOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kFile, "cannot open " + path.string());
  const auto file_size = std::filesystem::file_size(path);

  const auto rows = read_pod<std::uint64_t>(in, "row count");
  const auto cols = read_pod<std::uint64_t>(in, "column count");
  const std::uint64_t payload = 16 + 8 * rows * cols;
  if (rows == 0 || cols == 0 || file_size < payload) {
    throw Error(ErrorKind::kFormat, path.string() + ": header dims inconsistent with file size");
  }
  const std::uint64_t trailer = file_size - payload;
  if (trailer != 0 && trailer != 8 * cols) {
    throw Error(ErrorKind::kFormat, path.string() + ": trailing bytes are not a label vector");
  }

  DomainDataset dataset;
  dataset.role = options.role;
  dataset.features.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  in.read(reinterpret_cast<char*>(dataset.features.data()),
          static_cast<std::streamsize>(8 * rows * cols));
  if (trailer != 0 && options.has_labels) {
    Labels labels(cols);
    for (auto& label : labels) label = static_cast<int>(read_pod<std::int64_t>(in, "labels"));
    dataset.labels = std::move(labels);
  }
  return dataset;
}

}  // namespace

void DomainDataset::validate(int class_count) const {
  if (!features.allFinite()) throw Error(ErrorKind::kData, "features contain non-finite values");
  if (!labels) return;
  if (static_cast<Eigen::Index>(labels->size()) != features.cols()) {
    throw Error(ErrorKind::kData, "label count " + std::to_string(labels->size()) +
                                      " != sample count " + std::to_string(features.cols()));
  }
  const int upper = role == Role::kSource ? class_count : class_count + 1;
  for (std::size_t i = 0; i < labels->size(); ++i) {
    const int y = (*labels)[i];
    if (y < 1 || (class_count > 0 && y > upper)) {
      throw Error(ErrorKind::kLabel, "sample " + std::to_string(i) + " has label " +
                                         std::to_string(y) + " outside 1.." +
                                         (class_count > 0 ? std::to_string(upper) : "C+1"));
    }
  }
}

void SoftLabelMatrix::validate(double tol) const {
  if (probs.rows() != class_count + 1) {
    throw Error(ErrorKind::kPrecondition, "soft label matrix must have C+1 rows");
  }
  if (!probs.allFinite() || (probs.array() < 0.0).any()) {
    throw Error(ErrorKind::kPrecondition, "soft labels must be finite and nonnegative");
  }
  if (!normalized) return;
  for (Eigen::Index j = 0; j < probs.cols(); ++j) {
    if (std::abs(probs.col(j).sum() - 1.0) > tol) {
      throw Error(ErrorKind::kPrecondition, "column " + std::to_string(j) + " does not sum to 1");
    }
  }
}

DomainDataset load_features(const std::filesystem::path& path, const LoadOptions& options) {
  if (!std::filesystem::exists(path)) throw Error(ErrorKind::kFile, "no such file: " + path.string());
  DomainDataset dataset = options.format == FileFormat::kCsv ? load_csv(path, options)
                                                             : load_binary(path, options);
  dataset.validate(options.class_count);
  if (options.standardize) dataset.features = standardize_rows(dataset.features);
  return dataset;
}

void save_features(const DomainDataset& dataset, const std::filesystem::path& path,
                   FileFormat format, bool csv_header) {
  if (format == FileFormat::kCsv) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorKind::kFile, "cannot write " + path.string());
    char buffer[32];
    if (csv_header) {
      for (Eigen::Index f = 0; f < dataset.dimension(); ++f) {
        out << (f ? "," : "") << 'x' << f;
      }
      if (dataset.labels) out << ",label";
      out << '\n';
    }
    for (Eigen::Index j = 0; j < dataset.size(); ++j) {
      for (Eigen::Index f = 0; f < dataset.dimension(); ++f) {
        // Shortest representation that round-trips exactly.
        auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof buffer, dataset.features(f, j));
        out << (f ? "," : "") << std::string_view(buffer, static_cast<std::size_t>(ptr - buffer));
      }
      if (dataset.labels) out << ',' << (*dataset.labels)[static_cast<std::size_t>(j)];
      out << '\n';
    }
    if (!out) throw Error(ErrorKind::kFile, "write failed for " + path.string());
    return;
  }

  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::kFile, "cannot write " + path.string());
  write_pod<std::uint64_t>(out, static_cast<std::uint64_t>(dataset.dimension()));
  write_pod<std::uint64_t>(out, static_cast<std::uint64_t>(dataset.size()));
  out.write(reinterpret_cast<const char*>(dataset.features.data()),
            static_cast<std::streamsize>(sizeof(double) * dataset.features.size()));
  if (dataset.labels) {
    for (int y : *dataset.labels) write_pod<std::int64_t>(out, y);
  }
  if (!out) throw Error(ErrorKind::kFile, "write failed for " + path.string());
}

Eigen::MatrixXd standardize_rows(const Eigen::MatrixXd& features) {
  Eigen::MatrixXd out = features;
  const double n = static_cast<double>(features.cols());
  for (Eigen::Index r = 0; r < out.rows(); ++r) {
    const double mean = out.row(r).mean();
    out.row(r).array() -= mean;
    const double sd = std::sqrt(out.row(r).squaredNorm() / n);
    if (sd > 0.0) out.row(r) /= sd;
  }
  return out;
}

SoftLabelMatrix to_one_hot(const Labels& labels, int class_count) {
  if (class_count < 1) throw Error(ErrorKind::kParameter, "class count must be >= 1");
  SoftLabelMatrix result;
  result.class_count = class_count;
  result.normalized = true;
  result.probs = Eigen::MatrixXd::Zero(class_count + 1, static_cast<Eigen::Index>(labels.size()));
  for (std::size_t j = 0; j < labels.size(); ++j) {
    const int y = labels[j];
    if (y < 1 || y > class_count + 1) {
      throw Error(ErrorKind::kLabel, "label " + std::to_string(y) + " at index " +
                                         std::to_string(j) + " outside 1.." +
                                         std::to_string(class_count + 1));
    }
    result.probs(y - 1, static_cast<Eigen::Index>(j)) = 1.0;
  }
  return result;
}

void SyntheticSpec::validate() const {
  if (class_count < 1 || novel_class_count < 0 || source_samples_per_class < 1 ||
      target_samples_per_class < 1) {
    throw Error(ErrorKind::kParameter, "synthetic counts must be >= 1 (novel >= 0)");
  }
  if (dimension < 2) throw Error(ErrorKind::kParameter, "synthetic dimension must be >= 2");
  if (noise_scale < 0.0 || cluster_radius < 0.0 || !(arc_deg > 0.0 && arc_deg <= 360.0) ||
      !std::isfinite(rotation_deg) ||
      !std::isfinite(mean_shift)) {
    throw Error(ErrorKind::kParameter, "synthetic scales must be finite and nonnegative");
  }
}

std::pair<DomainDataset, DomainDataset> make_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const Eigen::Index m = spec.dimension;
  const int C = spec.class_count;

  // Shared class means: evenly spaced on a circle in the first two coordinates,
  // seeded offsets in the remaining ones.
  std::uniform_real_distribution<double> phase_dist(0.0, 2.0 * std::numbers::pi);
  const double phase = phase_dist(rng);
  const double arc = spec.arc_deg * std::numbers::pi / 180.0;
  Eigen::MatrixXd means(m, C);
  for (int c = 0; c < C; ++c) {
    const double angle = phase + arc * c / C;
    means(0, c) = spec.cluster_radius * std::cos(angle);
    means(1, c) = spec.cluster_radius * std::sin(angle);
    for (Eigen::Index d = 2; d < m; ++d) means(d, c) = 0.5 * spec.cluster_radius * gauss(rng);
  }

  Eigen::VectorXd shift_dir(m);
  for (Eigen::Index d = 0; d < m; ++d) shift_dir(d) = gauss(rng);
  shift_dir.normalize();
  const Eigen::VectorXd shift = spec.mean_shift * shift_dir;

  const double theta = spec.rotation_deg * std::numbers::pi / 180.0;
  const double cos_t = std::cos(theta);
  const double sin_t = std::sin(theta);
  auto to_target = [&](Eigen::VectorXd x) {
    const double a = x(0);
    const double b = x(1);
    x(0) = cos_t * a - sin_t * b;
    x(1) = sin_t * a + cos_t * b;
    return Eigen::VectorXd(x + shift);
  };

  // Novel means: rejection-sampled in the target frame, away from every
  // transformed shared mean.
  Eigen::MatrixXd novel_means(m, spec.novel_class_count);
  {
    std::vector<Eigen::VectorXd> taken;
    for (int c = 0; c < C; ++c) taken.push_back(to_target(means.col(c)));
    const double min_gap = std::max(spec.cluster_radius, 1e-9) *
                           (C > 1 ? std::sin(std::numbers::pi / C) : 1.0);
    std::uniform_real_distribution<double> box(-1.5 * spec.cluster_radius,
                                               1.5 * spec.cluster_radius);
    for (int q = 0; q < spec.novel_class_count; ++q) {
      Eigen::VectorXd candidate(m);
      for (int attempt = 0;; ++attempt) {
        for (Eigen::Index d = 0; d < m; ++d) candidate(d) = box(rng);
        candidate += shift;
        double nearest = std::numeric_limits<double>::infinity();
        for (const auto& t : taken) nearest = std::min(nearest, (t - candidate).norm());
        if (nearest >= min_gap || attempt >= 1000) break;
      }
      taken.push_back(candidate);
      novel_means.col(q) = candidate;
    }
  }

  DomainDataset source;
  source.role = Role::kSource;
  source.features.resize(m, static_cast<Eigen::Index>(C) * spec.source_samples_per_class);
  Labels source_labels;
  Eigen::Index col = 0;
  for (int c = 0; c < C; ++c) {
    for (int s = 0; s < spec.source_samples_per_class; ++s, ++col) {
      for (Eigen::Index d = 0; d < m; ++d) {
        source.features(d, col) = means(d, c) + spec.noise_scale * gauss(rng);
      }
      source_labels.push_back(c + 1);
    }
  }
  source.labels = std::move(source_labels);

  DomainDataset target;
  target.role = Role::kTarget;
  const Eigen::Index nt =
      static_cast<Eigen::Index>(C + spec.novel_class_count) * spec.target_samples_per_class;
  target.features.resize(m, nt);
  Labels target_labels;
  col = 0;
  for (int c = 0; c < C; ++c) {
    for (int s = 0; s < spec.target_samples_per_class; ++s, ++col) {
      Eigen::VectorXd x(m);
      for (Eigen::Index d = 0; d < m; ++d) x(d) = means(d, c) + spec.noise_scale * gauss(rng);
      target.features.col(col) = to_target(x);
      target_labels.push_back(c + 1);
    }
  }
  for (int q = 0; q < spec.novel_class_count; ++q) {
    for (int s = 0; s < spec.target_samples_per_class; ++s, ++col) {
      for (Eigen::Index d = 0; d < m; ++d) {
        target.features(d, col) = novel_means(d, q) + spec.noise_scale * gauss(rng);
      }
      target_labels.push_back(C + 1);
    }
  }
  target.labels = std::move(target_labels);
  return {std::move(source), std::move(target)};
}

}  // namespace ifcda
