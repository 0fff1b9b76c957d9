#include "rockgraph/voxelgrid.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <sstream>
#include <string>

#include "rockgraph/errors.hpp"
#include "rockgraph/random.hpp"

namespace rockgraph {

namespace {

void check_dims(const Dims& dims) {
  if (dims.nx == 0 || dims.ny == 0 || dims.nz == 0) {
    throw InvalidArgument("voxel grid dimensions must be positive");
  }
}

}  // namespace

VoxelGrid::VoxelGrid(Dims dims, double resolution_m, std::vector<std::uint8_t> data)
    : dims_(dims), resolution_(resolution_m), data_(std::move(data)) {
  check_dims(dims_);
  if (!(resolution_ > 0.0) || !std::isfinite(resolution_)) {
    throw InvalidArgument("voxel resolution must be positive and finite");
  }
  if (data_.size() != dims_.count()) {
    throw InvalidArgument("voxel payload length " + std::to_string(data_.size()) +
                          " does not match nx*ny*nz = " + std::to_string(dims_.count()));
  }
  if (std::any_of(data_.begin(), data_.end(), [](std::uint8_t v) { return v > 1; })) {
    throw InvalidArgument("voxel values must be 0 (pore) or 1 (solid)");
  }
}

VoxelGrid VoxelGrid::filled(Dims dims, double resolution_m, Phase phase) {
  check_dims(dims);
  return VoxelGrid(dims, resolution_m,
                   std::vector<std::uint8_t>(dims.count(), static_cast<std::uint8_t>(phase)));
}

double porosity(const VoxelGrid& grid) {
  const auto data = grid.data();
  const auto pores = std::count(data.begin(), data.end(), std::uint8_t{0});
  return static_cast<double>(pores) / static_cast<double>(data.size());
}

VoxelGrid rasterize_spheres(Dims dims, double resolution_m, std::span<const Sphere> spheres) {
  check_dims(dims);
  std::vector<std::uint8_t> data(dims.count(), 0);
  const std::array<std::size_t, 3> extent{dims.nx, dims.ny, dims.nz};

  for (const auto& s : spheres) {
    if (!(s.radius > 0.0)) continue;
    // Voxel i has its center at i + 0.5; only the sphere's bounding box can hit.
    std::array<std::size_t, 3> lo{}, hi{};
    bool empty = false;
    for (int a = 0; a < 3; ++a) {
      const double first = std::ceil(s.center[a] - s.radius - 0.5);
      const double last = std::floor(s.center[a] + s.radius - 0.5);
      const double clamped_lo = std::max(first, 0.0);
      const double clamped_hi = std::min(last, static_cast<double>(extent[a]) - 1.0);
      if (clamped_lo > clamped_hi) {
        empty = true;
        break;
      }
      lo[a] = static_cast<std::size_t>(clamped_lo);
      hi[a] = static_cast<std::size_t>(clamped_hi);
    }
    if (empty) continue;

    const double r2 = s.radius * s.radius;
    for (std::size_t z = lo[2]; z <= hi[2]; ++z) {
      const double dz = static_cast<double>(z) + 0.5 - s.center[2];
      for (std::size_t y = lo[1]; y <= hi[1]; ++y) {
        const double dy = static_cast<double>(y) + 0.5 - s.center[1];
        const double dyz = dy * dy + dz * dz;
        if (dyz > r2) continue;
        for (std::size_t x = lo[0]; x <= hi[0]; ++x) {
          const double dx = static_cast<double>(x) + 0.5 - s.center[0];
          if (dx * dx + dyz <= r2) data[x + dims.nx * (y + dims.ny * z)] = 1;
        }
      }
    }
  }
  return VoxelGrid(dims, resolution_m, std::move(data));
}

std::vector<Sphere> sample_spheres(const SpherePackParams& params) {
  check_dims(params.dims);
  if (!(params.radius_min > 0.0) || params.radius_max < params.radius_min) {
    throw InvalidArgument("sphere radius range must satisfy 0 < min <= max");
  }
  Rng rng(params.seed);
  std::vector<Sphere> spheres;
  spheres.reserve(params.n_spheres);
  for (std::size_t i = 0; i < params.n_spheres; ++i) {
    Sphere s{};
    s.center[0] = uniform(rng, 0.0, static_cast<double>(params.dims.nx));
    s.center[1] = uniform(rng, 0.0, static_cast<double>(params.dims.ny));
    s.center[2] = uniform(rng, 0.0, static_cast<double>(params.dims.nz));
    s.radius = uniform(rng, params.radius_min, params.radius_max);
    spheres.push_back(s);
  }
  return spheres;
}

VoxelGrid gen_sphere_pack(const SpherePackParams& params) {
  const auto spheres = sample_spheres(params);
  return rasterize_spheres(params.dims, params.resolution_m, spheres);
}

VoxelGrid subcube(const VoxelGrid& grid, Index3 origin, Dims size) {
  check_dims(size);
  const auto& d = grid.dims();
  for (std::size_t a = 0; a < 3; ++a) {
    if (origin[a] > d[a] || size[a] > d[a] - origin[a]) {
      throw InvalidArgument("subcube region exceeds the parent volume");
    }
  }
  std::vector<std::uint8_t> out(size.count());
  const auto src = grid.data();
  std::size_t k = 0;
  for (std::size_t z = 0; z < size.nz; ++z) {
    for (std::size_t y = 0; y < size.ny; ++y) {
      const auto row = src.begin() + static_cast<std::ptrdiff_t>(
                                         grid.index(origin[0], origin[1] + y, origin[2] + z));
      std::copy(row, row + static_cast<std::ptrdiff_t>(size.nx), out.begin() + static_cast<std::ptrdiff_t>(k));
      k += size.nx;
    }
  }
  return VoxelGrid(size, grid.resolution(), std::move(out));
}

std::filesystem::path header_path(const std::filesystem::path& raw_path) {
  auto p = raw_path;
  p += ".hdr";
  return p;
}

void write_raw(const VoxelGrid& grid, const std::filesystem::path& path) {
  {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot open " + path.string() + " for writing");
    const auto data = grid.data();
    out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
    if (!out) throw FormatError("failed writing " + path.string());
  }
  std::ofstream hdr(header_path(path), std::ios::trunc);
  if (!hdr) throw FormatError("cannot open " + header_path(path).string() + " for writing");
  hdr << "nx " << grid.dims().nx << '\n'
      << "ny " << grid.dims().ny << '\n'
      << "nz " << grid.dims().nz << '\n'
      << "resolution_m " << std::setprecision(std::numeric_limits<double>::max_digits10)
      << grid.resolution() << '\n'
      << "phase_convention " << kPhaseConvention << '\n';
}

VoxelGrid read_raw(const std::filesystem::path& path) {
  std::ifstream hdr(header_path(path));
  if (!hdr) throw FormatError("missing header sidecar " + header_path(path).string());

  std::map<std::string, std::string> fields;
  std::string line;
  while (std::getline(hdr, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string key, value;
    ls >> key >> value;
    if (key.empty() || value.empty()) throw FormatError("malformed header line: " + line);
    fields[key] = value;
  }
  auto field = [&](const std::string& key) -> const std::string& {
    auto it = fields.find(key);
    if (it == fields.end()) throw FormatError("header is missing '" + key + "'");
    return it->second;
  };
  auto as_size = [&](const std::string& key) {
    try {
      std::size_t pos = 0;
      const auto v = std::stoull(field(key), &pos);
      if (pos != field(key).size() || v == 0) throw FormatError("");
      return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
      throw FormatError("header field '" + key + "' must be a positive integer");
    }
  };

  Dims dims{as_size("nx"), as_size("ny"), as_size("nz")};
  double resolution = 0.0;
  try {
    resolution = std::stod(field("resolution_m"));
  } catch (const std::invalid_argument&) {
    throw FormatError("header field 'resolution_m' is not a number");
  }
  if (auto it = fields.find("phase_convention"); it != fields.end() && it->second != kPhaseConvention) {
    throw FormatError("unsupported phase convention '" + it->second + "'");
  }

  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw FormatError("cannot open " + path.string());
  const auto size = static_cast<std::size_t>(in.tellg());
  if (size != dims.count()) {
    throw FormatError("payload has " + std::to_string(size) + " bytes but header declares " +
                      std::to_string(dims.count()));
  }
  in.seekg(0);
  std::vector<std::uint8_t> data(size);
  in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(size));
  if (!in) throw FormatError("failed reading " + path.string());
  try {
    return VoxelGrid(dims, resolution, std::move(data));
  } catch (const InvalidArgument& e) {
    throw FormatError(e.what());
  }
}

}  // namespace rockgraph
