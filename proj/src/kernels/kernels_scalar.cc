#include <algorithm>
#include <cmath>
#include <limits>

#include "xcal/kernels.h"

namespace xcal::kernels::scalar {
namespace {

void transform_points(const AffineMap& m, std::span<const double> x,
                      std::span<const double> y, std::span<const double> z,
                      std::span<double> ox, std::span<double> oy,
                      std::span<double> oz) {
  const std::size_t n = x.size();
  for (std::size_t i = 0; i < n; ++i) {
    const double px = x[i], py = y[i], pz = z[i];
    ox[i] = ((m.r[0] * px + m.r[1] * py) + m.r[2] * pz) + m.t[0];
    oy[i] = ((m.r[3] * px + m.r[4] * py) + m.r[5] * pz) + m.t[1];
    oz[i] = ((m.r[6] * px + m.r[7] * py) + m.r[8] * pz) + m.t[2];
  }
}

FloorExtent floor_extent(std::span<const double> x, std::span<const double> z) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  FloorExtent e{inf, -inf, inf, -inf};
  for (std::size_t i = 0; i < x.size(); ++i) {
    e.x_min = std::min(e.x_min, x[i]);
    e.x_max = std::max(e.x_max, x[i]);
    e.z_min = std::min(e.z_min, z[i]);
    e.z_max = std::max(e.z_max, z[i]);
  }
  return e;
}

void floor_cells(const FloorGridGeometry& g, std::span<const double> x,
                 std::span<const double> z, std::span<std::int32_t> cells) {
  const double nx = g.nx, nz = g.nz;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double fx = std::floor((x[i] - g.origin_x) * g.inv_cell);
    const double fz = std::floor((z[i] - g.origin_z) * g.inv_cell);
    const bool inside = fx >= 0.0 && fx < nx && fz >= 0.0 && fz < nz;
    cells[i] = inside ? static_cast<std::int32_t>(fz * nx + fx) : -1;
  }
}

void huber_weights(std::span<const double> r, double M, std::span<double> w) {
  for (std::size_t i = 0; i < r.size(); ++i) {
    const double a = std::abs(r[i]);
    w[i] = a <= M ? 1.0 : M / a;
  }
}

constexpr KernelTable kTable{transform_points, floor_extent, floor_cells,
                             huber_weights};

}  // namespace

const KernelTable& table() { return kTable; }

}  // namespace xcal::kernels::scalar
