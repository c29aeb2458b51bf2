// Batch arithmetic over point clouds and residual vectors.
//
// Each kernel has a portable scalar reference in xcal::kernels::scalar and,
// on x86-64, an AVX2 variant in xcal::kernels::avx2. The free functions in
// xcal::kernels dispatch at runtime to the widest variant the CPU supports.
// The variants use the same operation order (no fused multiply-add), so
// they agree bit for bit.

#pragma once

#include <cstdint>
#include <span>

namespace xcal::kernels {

enum class Isa { kScalar, kAvx2 };

// Row-major 3x3 rotation and translation: out = R * p + t.
struct AffineMap {
  double r[9];
  double t[3];
};

struct FloorExtent {
  double x_min, x_max, z_min, z_max;
};

struct FloorGridGeometry {
  double origin_x, origin_z;
  double inv_cell;
  std::int32_t nx, nz;
};

// Function table implemented by every ISA variant.
struct KernelTable {
  void (*transform_points)(const AffineMap& m, std::span<const double> x,
                           std::span<const double> y,
                           std::span<const double> z, std::span<double> ox,
                           std::span<double> oy, std::span<double> oz);
  FloorExtent (*floor_extent)(std::span<const double> x,
                              std::span<const double> z);
  // Flat cell index iz * nx + ix, or -1 when the point is outside the grid.
  void (*floor_cells)(const FloorGridGeometry& g, std::span<const double> x,
                      std::span<const double> z,
                      std::span<std::int32_t> cells);
  // Huber IRLS weight: 1 for |r| <= M, M / |r| beyond.
  void (*huber_weights)(std::span<const double> r, double M,
                        std::span<double> w);
};

namespace scalar {
const KernelTable& table();
}  // namespace scalar

#if defined(__x86_64__)
namespace avx2 {
const KernelTable& table();
}  // namespace avx2
#endif

bool isa_available(Isa isa);
Isa active_isa();
// Pins dispatch to one variant (tests and benchmarking). Throws
// std::invalid_argument if the variant is unavailable on this CPU.
void force_isa(Isa isa);
const KernelTable& table_for(Isa isa);

void transform_points(const AffineMap& m, std::span<const double> x,
                      std::span<const double> y, std::span<const double> z,
                      std::span<double> ox, std::span<double> oy,
                      std::span<double> oz);
FloorExtent floor_extent(std::span<const double> x, std::span<const double> z);
void floor_cells(const FloorGridGeometry& g, std::span<const double> x,
                 std::span<const double> z, std::span<std::int32_t> cells);
void huber_weights(std::span<const double> r, double M, std::span<double> w);

const char* isa_name(Isa isa);

}  // namespace xcal::kernels
