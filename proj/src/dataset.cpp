#include "rockgraph/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <sstream>

#include "rockgraph/errors.hpp"
#include "rockgraph/random.hpp"

namespace rockgraph {

namespace {

constexpr const char* kManifestHeader = "id,graph_path,voxel_path,subcube_size,porosity,k_gpa,mu_gpa";

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

double parse_double(const std::string& s, const std::string& what) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw FormatError("");
    return v;
  } catch (const std::exception&) {
    throw FormatError("manifest field '" + what + "' is not a number: '" + s + "'");
  }
}

}  // namespace

void write_manifest(std::span<const Sample> samples, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  out << kManifestHeader << '\n' << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (const auto& s : samples) {
    for (const auto* field : {&s.id, &s.graph_path, &s.voxel_path}) {
      if (field->find_first_of(",\n") != std::string::npos) {
        throw InvalidArgument("manifest fields may not contain commas or newlines: " + *field);
      }
    }
    out << s.id << ',' << s.graph_path << ',' << s.voxel_path << ',' << s.subcube_size << ','
        << s.porosity << ',';
    if (s.labels) out << s.labels->k << ',' << s.labels->mu;
    else out << ',';
    out << '\n';
  }
}

std::vector<Sample> read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open manifest " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kManifestHeader) {
    throw FormatError("manifest header must be '" + std::string(kManifestHeader) + "'");
  }
  std::vector<Sample> out;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto c = split_csv(line);
    if (c.size() != 7) {
      throw FormatError("manifest line " + std::to_string(lineno) + " has " + std::to_string(c.size()) +
                        " fields, expected 7");
    }
    Sample s;
    s.id = c[0];
    s.graph_path = c[1];
    s.voxel_path = c[2];
    s.subcube_size = static_cast<std::size_t>(parse_double(c[3], "subcube_size"));
    s.porosity = parse_double(c[4], "porosity");
    if (!(s.porosity >= 0.0 && s.porosity <= 1.0)) {
      throw FormatError("manifest line " + std::to_string(lineno) + ": porosity outside [0, 1]");
    }
    if (!c[5].empty() || !c[6].empty()) {
      s.labels = ElasticModuli{parse_double(c[5], "k_gpa"), parse_double(c[6], "mu_gpa")};
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::filesystem::path resolve_path(const std::filesystem::path& manifest, const std::string& entry) {
  const std::filesystem::path p(entry);
  if (p.is_absolute()) return p;
  return manifest.parent_path() / p;
}

Split make_split(std::span<const std::string> ids, SplitRatios ratios, std::uint64_t seed) {
  if (ids.empty()) throw InvalidArgument("cannot split an empty id list");
  if (ratios.train < 0 || ratios.val < 0 || ratios.test < 0 ||
      std::abs(ratios.train + ratios.val + ratios.test - 1.0) > 1e-9) {
    throw InvalidArgument("split ratios must be non-negative and sum to 1");
  }
  std::vector<std::string> order(ids.begin(), ids.end());
  Rng rng(seed);
  shuffle(order.begin(), order.end(), rng);

  const std::size_t n = order.size();
  auto rounded = [&](double r) { return static_cast<std::size_t>(std::floor(static_cast<double>(n) * r + 0.5)); };
  const std::size_t n_val = std::min(rounded(ratios.val), n);
  const std::size_t n_test = std::min(rounded(ratios.test), n - n_val);
  const std::size_t n_train = n - n_val - n_test;

  Split s;
  auto it = order.begin();
  s.train.assign(it, it + static_cast<std::ptrdiff_t>(n_train));
  it += static_cast<std::ptrdiff_t>(n_train);
  s.val.assign(it, it + static_cast<std::ptrdiff_t>(n_val));
  it += static_cast<std::ptrdiff_t>(n_val);
  s.test.assign(it, order.end());
  return s;
}

void write_split(const Split& split, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  auto section = [&](const char* name, const std::vector<std::string>& ids) {
    out << '[' << name << "]\n";
    for (const auto& id : ids) out << id << '\n';
  };
  section("train", split.train);
  section("val", split.val);
  section("test", split.test);
}

Split read_split(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open split file " + path.string());
  Split s;
  std::vector<std::string>* current = nullptr;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line == "[train]") current = &s.train;
    else if (line == "[val]") current = &s.val;
    else if (line == "[test]") current = &s.test;
    else if (current == nullptr) throw FormatError("split file entry before any section header");
    else current->push_back(line);
  }
  return s;
}

ElasticModuli synth_labels(double phi, const DemParams& params, double noise_sigma, std::uint64_t seed) {
  if (!(noise_sigma >= 0.0)) throw InvalidArgument("noise sigma must be non-negative");
  auto m = dem_moduli(params, phi);
  if (noise_sigma > 0.0) {
    Rng rng(seed);
    m.k += noise_sigma * standard_normal(rng);
    m.mu += noise_sigma * standard_normal(rng);
  }
  return {std::max(m.k, 0.0), std::max(m.mu, 0.0)};
}

ElasticModuli synth_labels(const VoxelGrid& grid, const DemParams& params, double noise_sigma,
                           std::uint64_t seed) {
  return synth_labels(porosity(grid), params, noise_sigma, seed);
}

Standardizer::Standardizer(std::vector<double> mean, std::vector<double> stddev)
    : mean_(std::move(mean)), std_(std::move(stddev)) {
  if (mean_.size() != std_.size()) throw InvalidArgument("standardizer mean/std sizes differ");
  for (double s : std_) {
    if (!(s > 0.0)) throw InvalidArgument("standardizer std must be positive");
  }
}

Standardizer Standardizer::fit(std::span<const std::vector<double>> rows) {
  if (rows.empty()) throw InvalidArgument("standardizer needs at least one vector");
  const std::size_t d = rows.front().size();
  std::vector<double> mean(d, 0.0), var(d, 0.0);
  for (const auto& r : rows) {
    if (r.size() != d) throw InvalidArgument("standardizer rows have inconsistent dimension");
    for (std::size_t j = 0; j < d; ++j) mean[j] += r[j];
  }
  const double n = static_cast<double>(rows.size());
  for (auto& m : mean) m /= n;
  for (const auto& r : rows) {
    for (std::size_t j = 0; j < d; ++j) var[j] += (r[j] - mean[j]) * (r[j] - mean[j]);
  }
  std::vector<double> sd(d);
  for (std::size_t j = 0; j < d; ++j) {
    const double s = std::sqrt(var[j] / n);
    sd[j] = s > 1e-12 * std::max(1.0, std::abs(mean[j])) ? s : 1.0;
  }
  return Standardizer(std::move(mean), std::move(sd));
}

void Standardizer::apply_in_place(std::span<double> x) const {
  if (x.size() != mean_.size()) throw InvalidArgument("standardizer dimension mismatch");
  for (std::size_t j = 0; j < x.size(); ++j) x[j] = (x[j] - mean_[j]) / std_[j];
}

std::vector<double> Standardizer::apply(std::span<const double> x) const {
  std::vector<double> out(x.begin(), x.end());
  apply_in_place(out);
  return out;
}

std::vector<double> Standardizer::inverse(std::span<const double> z) const {
  if (z.size() != mean_.size()) throw InvalidArgument("standardizer dimension mismatch");
  std::vector<double> out(z.size());
  for (std::size_t j = 0; j < z.size(); ++j) out[j] = z[j] * std_[j] + mean_[j];
  return out;
}

}  // namespace rockgraph
