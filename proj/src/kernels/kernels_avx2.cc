// Built with -mavx2 only (no -mfma) so every product is rounded before the
// following add, exactly as in the scalar reference.

#include <immintrin.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "xcal/kernels.h"

namespace xcal::kernels::avx2 {
namespace {

constexpr std::size_t kLanes = 4;

void transform_points(const AffineMap& m, std::span<const double> x,
                      std::span<const double> y, std::span<const double> z,
                      std::span<double> ox, std::span<double> oy,
                      std::span<double> oz) {
  const std::size_t n = x.size();
  __m256d r[9];
  for (int k = 0; k < 9; ++k) r[k] = _mm256_set1_pd(m.r[k]);
  const __m256d t0 = _mm256_set1_pd(m.t[0]);
  const __m256d t1 = _mm256_set1_pd(m.t[1]);
  const __m256d t2 = _mm256_set1_pd(m.t[2]);

  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    const __m256d px = _mm256_loadu_pd(x.data() + i);
    const __m256d py = _mm256_loadu_pd(y.data() + i);
    const __m256d pz = _mm256_loadu_pd(z.data() + i);
    auto row = [&](const __m256d& a, const __m256d& b, const __m256d& c,
                   const __m256d& t) {
      __m256d s = _mm256_add_pd(_mm256_mul_pd(a, px), _mm256_mul_pd(b, py));
      s = _mm256_add_pd(s, _mm256_mul_pd(c, pz));
      return _mm256_add_pd(s, t);
    };
    _mm256_storeu_pd(ox.data() + i, row(r[0], r[1], r[2], t0));
    _mm256_storeu_pd(oy.data() + i, row(r[3], r[4], r[5], t1));
    _mm256_storeu_pd(oz.data() + i, row(r[6], r[7], r[8], t2));
  }
  for (; i < n; ++i) {
    const double px = x[i], py = y[i], pz = z[i];
    ox[i] = ((m.r[0] * px + m.r[1] * py) + m.r[2] * pz) + m.t[0];
    oy[i] = ((m.r[3] * px + m.r[4] * py) + m.r[5] * pz) + m.t[1];
    oz[i] = ((m.r[6] * px + m.r[7] * py) + m.r[8] * pz) + m.t[2];
  }
}

double hmin(__m256d v) {
  alignas(32) double a[kLanes];
  _mm256_store_pd(a, v);
  return std::min(std::min(a[0], a[1]), std::min(a[2], a[3]));
}

double hmax(__m256d v) {
  alignas(32) double a[kLanes];
  _mm256_store_pd(a, v);
  return std::max(std::max(a[0], a[1]), std::max(a[2], a[3]));
}

FloorExtent floor_extent(std::span<const double> x, std::span<const double> z) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  __m256d xmin = _mm256_set1_pd(inf), xmax = _mm256_set1_pd(-inf);
  __m256d zmin = _mm256_set1_pd(inf), zmax = _mm256_set1_pd(-inf);
  const std::size_t n = x.size();
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    const __m256d px = _mm256_loadu_pd(x.data() + i);
    const __m256d pz = _mm256_loadu_pd(z.data() + i);
    xmin = _mm256_min_pd(xmin, px);
    xmax = _mm256_max_pd(xmax, px);
    zmin = _mm256_min_pd(zmin, pz);
    zmax = _mm256_max_pd(zmax, pz);
  }
  FloorExtent e{hmin(xmin), hmax(xmax), hmin(zmin), hmax(zmax)};
  for (; i < n; ++i) {
    e.x_min = std::min(e.x_min, x[i]);
    e.x_max = std::max(e.x_max, x[i]);
    e.z_min = std::min(e.z_min, z[i]);
    e.z_max = std::max(e.z_max, z[i]);
  }
  return e;
}

void floor_cells(const FloorGridGeometry& g, std::span<const double> x,
                 std::span<const double> z, std::span<std::int32_t> cells) {
  const __m256d ox = _mm256_set1_pd(g.origin_x);
  const __m256d oz = _mm256_set1_pd(g.origin_z);
  const __m256d inv = _mm256_set1_pd(g.inv_cell);
  const __m256d nx = _mm256_set1_pd(g.nx);
  const __m256d nz = _mm256_set1_pd(g.nz);
  const __m256d zero = _mm256_setzero_pd();
  const __m256d outside = _mm256_set1_pd(-1.0);
  const std::size_t n = x.size();
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    const __m256d fx = _mm256_floor_pd(
        _mm256_mul_pd(_mm256_sub_pd(_mm256_loadu_pd(x.data() + i), ox), inv));
    const __m256d fz = _mm256_floor_pd(
        _mm256_mul_pd(_mm256_sub_pd(_mm256_loadu_pd(z.data() + i), oz), inv));
    __m256d inside = _mm256_and_pd(_mm256_cmp_pd(fx, zero, _CMP_GE_OQ),
                                   _mm256_cmp_pd(fx, nx, _CMP_LT_OQ));
    inside = _mm256_and_pd(inside, _mm256_cmp_pd(fz, zero, _CMP_GE_OQ));
    inside = _mm256_and_pd(inside, _mm256_cmp_pd(fz, nz, _CMP_LT_OQ));
    const __m256d flat = _mm256_add_pd(_mm256_mul_pd(fz, nx), fx);
    const __m256d idx = _mm256_blendv_pd(outside, flat, inside);
    _mm_storeu_si128(reinterpret_cast<__m128i*>(cells.data() + i),
                     _mm256_cvttpd_epi32(idx));
  }
  const double dnx = g.nx, dnz = g.nz;
  for (; i < n; ++i) {
    const double fx = std::floor((x[i] - g.origin_x) * g.inv_cell);
    const double fz = std::floor((z[i] - g.origin_z) * g.inv_cell);
    const bool in = fx >= 0.0 && fx < dnx && fz >= 0.0 && fz < dnz;
    cells[i] = in ? static_cast<std::int32_t>(fz * dnx + fx) : -1;
  }
}

void huber_weights(std::span<const double> r, double M, std::span<double> w) {
  const __m256d m = _mm256_set1_pd(M);
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d sign = _mm256_set1_pd(-0.0);
  const std::size_t n = r.size();
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    const __m256d a = _mm256_andnot_pd(sign, _mm256_loadu_pd(r.data() + i));
    const __m256d inlier = _mm256_cmp_pd(a, m, _CMP_LE_OQ);
    const __m256d down = _mm256_div_pd(m, a);
    _mm256_storeu_pd(w.data() + i, _mm256_blendv_pd(down, one, inlier));
  }
  for (; i < n; ++i) {
    const double a = std::abs(r[i]);
    w[i] = a <= M ? 1.0 : M / a;
  }
}

constexpr KernelTable kTable{transform_points, floor_extent, floor_cells,
                             huber_weights};

}  // namespace

const KernelTable& table() { return kTable; }

}  // namespace xcal::kernels::avx2
