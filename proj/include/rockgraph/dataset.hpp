#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rockgraph/effmed.hpp"
#include "rockgraph/scoring.hpp"
#include "rockgraph/voxelgrid.hpp"

namespace rockgraph {

struct Sample {
  std::string id;
  std::string graph_path;
  std::string voxel_path;  // empty when absent
  std::size_t subcube_size = 0;
  double porosity = 0.0;
  std::optional<ElasticModuli> labels;
};

// CSV with header id,graph_path,voxel_path,subcube_size,porosity,k_gpa,mu_gpa.
// Missing labels are written as empty cells. Relative paths are kept as
// written; resolve_path() interprets them against the manifest's directory.
void write_manifest(std::span<const Sample> samples, const std::filesystem::path& path);
std::vector<Sample> read_manifest(const std::filesystem::path& path);
std::filesystem::path resolve_path(const std::filesystem::path& manifest, const std::string& entry);

struct SplitRatios {
  double train = 0.8;
  double val = 0.1;
  double test = 0.1;
};

struct Split {
  std::vector<std::string> train;
  std::vector<std::string> val;
  std::vector<std::string> test;
};

// Seeded shuffle, then contiguous slices [train | val | test]. Validation and
// test counts are n * ratio rounded half up; train takes the remainder.
Split make_split(std::span<const std::string> ids, SplitRatios ratios, std::uint64_t seed);

// Text file with one "[train]" / "[val]" / "[test]" section per partition.
void write_split(const Split& split, const std::filesystem::path& path);
Split read_split(const std::filesystem::path& path);

// DEM moduli at the grid's porosity plus independent Gaussian noise per
// modulus, clamped at zero.
ElasticModuli synth_labels(const VoxelGrid& grid, const DemParams& params, double noise_sigma,
                           std::uint64_t seed);
ElasticModuli synth_labels(double porosity, const DemParams& params, double noise_sigma, std::uint64_t seed);

// Per-feature z-score transform. Constant columns get std = 1.
class Standardizer {
 public:
  Standardizer() = default;
  Standardizer(std::vector<double> mean, std::vector<double> stddev);

  static Standardizer fit(std::span<const std::vector<double>> rows);

  std::size_t dim() const { return mean_.size(); }
  const std::vector<double>& mean() const { return mean_; }
  const std::vector<double>& stddev() const { return std_; }

  std::vector<double> apply(std::span<const double> x) const;
  std::vector<double> inverse(std::span<const double> z) const;
  void apply_in_place(std::span<double> x) const;

 private:
  std::vector<double> mean_;
  std::vector<double> std_;
};

}  // namespace rockgraph
