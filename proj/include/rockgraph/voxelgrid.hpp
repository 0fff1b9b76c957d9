#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace rockgraph {

// Phase labels stored in a voxel volume. The encoding is fixed and written
// into every raw header as "pore=0,solid=1".
enum class Phase : std::uint8_t { Pore = 0, Solid = 1 };

inline constexpr const char* kPhaseConvention = "pore=0,solid=1";

struct Dims {
  std::size_t nx = 0;
  std::size_t ny = 0;
  std::size_t nz = 0;

  std::size_t count() const { return nx * ny * nz; }
  std::size_t operator[](std::size_t axis) const { return axis == 0 ? nx : axis == 1 ? ny : nz; }
  bool operator==(const Dims&) const = default;
};

using Index3 = std::array<std::size_t, 3>;

// Dense binary phase volume, x-fastest ordering. Immutable after construction.
class VoxelGrid {
 public:
  // Throws InvalidArgument if any dimension is zero, resolution is not
  // positive, the payload length is wrong, or a value is not 0/1.
  VoxelGrid(Dims dims, double resolution_m, std::vector<std::uint8_t> data);

  static VoxelGrid filled(Dims dims, double resolution_m, Phase phase);

  const Dims& dims() const { return dims_; }
  double resolution() const { return resolution_; }
  std::span<const std::uint8_t> data() const { return data_; }

  std::size_t index(std::size_t x, std::size_t y, std::size_t z) const {
    return x + dims_.nx * (y + dims_.ny * z);
  }
  Phase at(std::size_t x, std::size_t y, std::size_t z) const {
    return static_cast<Phase>(data_[index(x, y, z)]);
  }

  bool operator==(const VoxelGrid&) const = default;

 private:
  Dims dims_;
  double resolution_;
  std::vector<std::uint8_t> data_;
};

// Fraction of pore (0) voxels.
double porosity(const VoxelGrid& grid);

struct Sphere {
  std::array<double, 3> center;  // voxel units
  double radius;                 // voxel units
};

// Solid spheres drawn onto a pore background. A voxel (i, j, k) is solid when
// its center (i + 0.5, j + 0.5, k + 0.5) lies within a sphere's radius.
VoxelGrid rasterize_spheres(Dims dims, double resolution_m, std::span<const Sphere> spheres);

struct SpherePackParams {
  Dims dims;
  std::size_t n_spheres = 0;
  double radius_min = 1.0;
  double radius_max = 1.0;
  std::uint64_t seed = 0;
  double resolution_m = 2e-6;
};

// The sphere sequence drawn for a seed is a prefix-stable stream: the first k
// spheres of an n-sphere pack equal the spheres of a k-sphere pack.
std::vector<Sphere> sample_spheres(const SpherePackParams& params);
VoxelGrid gen_sphere_pack(const SpherePackParams& params);

// Copy of the axis-aligned block [origin, origin + size).
VoxelGrid subcube(const VoxelGrid& grid, Index3 origin, Dims size);

// Writes the unsigned 8-bit payload to `path` and a text header to
// header_path(path).
void write_raw(const VoxelGrid& grid, const std::filesystem::path& path);
VoxelGrid read_raw(const std::filesystem::path& path);
std::filesystem::path header_path(const std::filesystem::path& raw_path);

}  // namespace rockgraph
