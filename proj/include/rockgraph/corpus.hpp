#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "rockgraph/dataset.hpp"
#include "rockgraph/effmed.hpp"
#include "rockgraph/mapper.hpp"
#include "rockgraph/voxelgrid.hpp"

namespace rockgraph {

// Synthetic corpus: each sample is a subcube of its own sphere pack, mapped
// to a graph and labeled by DEM at the subcube porosity plus noise.
struct CorpusParams {
  std::size_t n_samples = 500;
  std::vector<std::size_t> sizes{32, 48, 64};  // subcube edge lengths, cycled
  std::size_t parent_size = 64;
  double radius_min = 3.0;
  double radius_max = 7.0;
  // Target porosity range; the sphere count is chosen per sample from a
  // uniform draw in this range.
  double porosity_min = 0.02;
  double porosity_max = 0.45;
  MapperParams mapper;
  DemParams dem;
  double noise_sigma = 0.5;
  std::uint64_t seed = 0;

  void validate() const;
};

struct CorpusSample {
  Sample meta;  // paths empty until written
  VoxelGrid grid;
  RockGraph graph;
};

CorpusSample make_corpus_sample(const CorpusParams& params, std::size_t index);
std::vector<CorpusSample> make_corpus(const CorpusParams& params);

// Writes <dir>/voxels/<id>.raw, <dir>/graphs/<id>.json and <dir>/manifest.csv
// with paths relative to dir. Returns the manifest path.
std::filesystem::path write_corpus(std::vector<CorpusSample>& samples, const std::filesystem::path& dir,
                                   bool write_voxels = true);

}  // namespace rockgraph
