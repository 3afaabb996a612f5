#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "triplet/geometry.hpp"
#include "triplet/mining.hpp"

namespace triplet {

struct DatasetConfig {
  int num_classes = 8;
  int per_class = 32;
  int input_dim = 16;
  double intra_spread = 2.0;  // RMS norm of the noise vector added to each class center
  std::uint64_t seed = 0;

  void validate() const {
    if (num_classes < 2) throw InvalidArgument("num_classes must be >= 2");
    if (per_class < 2) throw InvalidArgument("per_class must be >= 2");
    if (input_dim < 2) throw InvalidArgument("input_dim must be >= 2");
    if (!std::isfinite(intra_spread) || intra_spread < 0.0) throw InvalidArgument("intra_spread must be >= 0");
  }
};

struct LabeledDataset {
  std::vector<Vector> points;
  std::vector<Label> labels;

  std::size_t size() const noexcept { return points.size(); }
  Eigen::Index dim() const noexcept { return points.empty() ? 0 : points.front().size(); }

  // Members of each class in order of appearance.
  std::map<Label, std::vector<std::size_t>> by_class() const {
    std::map<Label, std::vector<std::size_t>> out;
    for (std::size_t i = 0; i < labels.size(); ++i) out[labels[i]].push_back(i);
    return out;
  }

  friend bool operator==(const LabeledDataset&, const LabeledDataset&) = default;
};

// Class centers uniform on the sphere; each point is its center plus
// isotropic Gaussian noise (per-component stddev spread / sqrt(dim)),
// projected back onto the sphere. Classes are stored contiguously.
inline LabeledDataset generate(const DatasetConfig& config) {
  config.validate();
  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const Eigen::Index d = config.input_dim;
  auto draw = [&] {
    Vector v(d);
    for (Eigen::Index k = 0; k < d; ++k) v[k] = gauss(rng);
    return v;
  };

  std::vector<Vector> centers;
  centers.reserve(static_cast<std::size_t>(config.num_classes));
  while (centers.size() < static_cast<std::size_t>(config.num_classes)) {
    const Vector v = draw();
    if (v.norm() > kMinNorm) centers.push_back(v.normalized());
  }

  const double scale = config.intra_spread / std::sqrt(static_cast<double>(d));
  LabeledDataset ds;
  for (int c = 0; c < config.num_classes; ++c) {
    for (int k = 0; k < config.per_class; ++k) {
      Vector v = centers[static_cast<std::size_t>(c)] + scale * draw();
      ds.points.push_back(normalize(v).components());
      ds.labels.push_back(c);
    }
  }
  return ds;
}

// Decimal text with 12 significant digits.
inline std::string format_real(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

inline void write_csv(std::ostream& os, const LabeledDataset& ds) {
  os << "label";
  for (Eigen::Index k = 0; k < ds.dim(); ++k) os << ",x" << k;
  os << '\n';
  for (std::size_t i = 0; i < ds.size(); ++i) {
    os << ds.labels[i];
    for (Eigen::Index k = 0; k < ds.points[i].size(); ++k) os << ',' << format_real(ds.points[i][k]);
    os << '\n';
  }
}

namespace detail {

inline std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    out.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

template <typename T>
T parse_field(std::string_view field, std::size_t line_no) {
  while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) field.remove_prefix(1);
  while (!field.empty() && (field.back() == ' ' || field.back() == '\t' || field.back() == '\r')) {
    field.remove_suffix(1);
  }
  T value{};
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc{} || ptr != field.data() + field.size() || field.empty()) {
    throw ParseError(line_no, "cannot parse '" + std::string(field) + "'");
  }
  return value;
}

}  // namespace detail

// Accepts the header line `label,x0,...` (optional) then one row per point.
inline LabeledDataset read_csv(std::istream& is) {
  LabeledDataset ds;
  std::string line;
  std::size_t line_no = 0;
  std::size_t columns = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = detail::split_commas(line);
    if (line_no == 1 && fields.front() == "label") {
      columns = fields.size();
      continue;
    }
    if (columns == 0) columns = fields.size();
    if (fields.size() != columns) {
      throw ParseError(line_no, "expected " + std::to_string(columns) + " columns, found " +
                                    std::to_string(fields.size()));
    }
    if (columns < 3) throw ParseError(line_no, "need a label and at least two coordinates");
    ds.labels.push_back(detail::parse_field<Label>(fields[0], line_no));
    Vector v(static_cast<Eigen::Index>(columns - 1));
    for (std::size_t k = 1; k < columns; ++k) {
      v[static_cast<Eigen::Index>(k - 1)] = detail::parse_field<double>(fields[k], line_no);
    }
    ds.points.push_back(std::move(v));
  }
  if (ds.points.empty()) throw ParseError(0, "dataset file has no rows");
  return ds;
}

inline void save(const LabeledDataset& ds, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  write_csv(os, ds);
  if (!os) throw IoError("write failed: " + path.string());
}

inline LabeledDataset load(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());
  return read_csv(is);
}

}  // namespace triplet
