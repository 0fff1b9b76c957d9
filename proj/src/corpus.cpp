#include "rockgraph/corpus.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>

#include "rockgraph/errors.hpp"
#include "rockgraph/random.hpp"

namespace rockgraph {

void CorpusParams::validate() const {
  if (sizes.empty()) throw InvalidArgument("corpus needs at least one subcube size");
  for (auto s : sizes) {
    if (s == 0 || s > parent_size) throw InvalidArgument("subcube sizes must lie in [1, parent_size]");
  }
  if (!(radius_min > 0.0 && radius_min <= radius_max)) throw InvalidArgument("need 0 < radius_min <= radius_max");
  if (!(porosity_min > 0.0 && porosity_min <= porosity_max && porosity_max < 1.0)) {
    throw InvalidArgument("need 0 < porosity_min <= porosity_max < 1");
  }
  if (!(noise_sigma >= 0.0)) throw InvalidArgument("noise sigma must be non-negative");
  mapper.validate();
  dem.validate();
}

namespace {

std::string sample_id(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "s%05zu", index);
  return buf;
}

// Boolean-model estimate: uniformly placed spheres leave a pore fraction of
// about exp(-n E[V] / V_box).
std::size_t spheres_for(double target_phi, double volume, double r0, double r1) {
  const double mean_r3 = (std::pow(r1, 4) - std::pow(r0, 4)) / (4.0 * (r1 - r0 + 1e-300));
  const double ev = 4.0 / 3.0 * std::numbers::pi * (r1 > r0 ? mean_r3 : r0 * r0 * r0);
  return static_cast<std::size_t>(std::lround(-std::log(target_phi) * volume / ev));
}

}  // namespace

CorpusSample make_corpus_sample(const CorpusParams& params, std::size_t index) {
  Rng rng(derive_seed(params.seed, index));
  const std::size_t size = params.sizes[index % params.sizes.size()];
  const double target = uniform(rng, params.porosity_min, params.porosity_max);
  const std::size_t l = params.parent_size;
  SpherePackParams pack;
  pack.dims = {l, l, l};
  pack.radius_min = params.radius_min;
  pack.radius_max = params.radius_max;
  pack.n_spheres = std::max<std::size_t>(1, spheres_for(target, static_cast<double>(l * l * l), params.radius_min,
                                                         params.radius_max));
  pack.seed = rng();
  const auto parent = gen_sphere_pack(pack);
  const Index3 origin{uniform_index(rng, l - size + 1), uniform_index(rng, l - size + 1),
                      uniform_index(rng, l - size + 1)};
  auto grid = subcube(parent, origin, {size, size, size});
  auto graph = build_graph(grid, params.mapper);

  CorpusSample s{Sample{}, std::move(grid), std::move(graph)};
  s.meta.id = sample_id(index);
  s.meta.subcube_size = size;
  s.meta.porosity = porosity(s.grid);
  s.meta.labels = synth_labels(s.meta.porosity, params.dem, params.noise_sigma, rng());
  return s;
}

std::vector<CorpusSample> make_corpus(const CorpusParams& params) {
  params.validate();
  std::vector<CorpusSample> out;
  out.reserve(params.n_samples);
  for (std::size_t i = 0; i < params.n_samples; ++i) out.push_back(make_corpus_sample(params, i));
  return out;
}

std::filesystem::path write_corpus(std::vector<CorpusSample>& samples, const std::filesystem::path& dir,
                                   bool write_voxels) {
  namespace fs = std::filesystem;
  fs::create_directories(dir / "graphs");
  if (write_voxels) fs::create_directories(dir / "voxels");
  std::vector<Sample> rows;
  rows.reserve(samples.size());
  for (auto& s : samples) {
    s.meta.graph_path = "graphs/" + s.meta.id + ".json";
    write_graph(s.graph, dir / s.meta.graph_path);
    if (write_voxels) {
      s.meta.voxel_path = "voxels/" + s.meta.id + ".raw";
      write_raw(s.grid, dir / s.meta.voxel_path);
    }
    rows.push_back(s.meta);
  }
  const auto manifest = dir / "manifest.csv";
  write_manifest(rows, manifest);
  return manifest;
}

}  // namespace rockgraph
