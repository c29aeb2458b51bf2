#include <atomic>
#include <stdexcept>
#include <string>

#include "xcal/kernels.h"

namespace xcal::kernels {
namespace {

Isa detect() {
#if defined(XCAL_HAVE_AVX2)
  if (__builtin_cpu_supports("avx2")) return Isa::kAvx2;
#endif
  return Isa::kScalar;
}

std::atomic<Isa>& current() {
  static std::atomic<Isa> isa{detect()};
  return isa;
}

const KernelTable& active() { return table_for(current().load()); }

}  // namespace

bool isa_available(Isa isa) {
  switch (isa) {
    case Isa::kScalar:
      return true;
    case Isa::kAvx2:
#if defined(XCAL_HAVE_AVX2)
      return __builtin_cpu_supports("avx2");
#else
      return false;
#endif
  }
  return false;
}

Isa active_isa() { return current().load(); }

void force_isa(Isa isa) {
  if (!isa_available(isa)) {
    throw std::invalid_argument(std::string("kernel variant unavailable: ") +
                                isa_name(isa));
  }
  current().store(isa);
}

const KernelTable& table_for(Isa isa) {
#if defined(XCAL_HAVE_AVX2)
  if (isa == Isa::kAvx2) return avx2::table();
#endif
  (void)isa;
  return scalar::table();
}

void transform_points(const AffineMap& m, std::span<const double> x,
                      std::span<const double> y, std::span<const double> z,
                      std::span<double> ox, std::span<double> oy,
                      std::span<double> oz) {
  active().transform_points(m, x, y, z, ox, oy, oz);
}

FloorExtent floor_extent(std::span<const double> x, std::span<const double> z) {
  return active().floor_extent(x, z);
}

void floor_cells(const FloorGridGeometry& g, std::span<const double> x,
                 std::span<const double> z, std::span<std::int32_t> cells) {
  active().floor_cells(g, x, z, cells);
}

void huber_weights(std::span<const double> r, double M, std::span<double> w) {
  active().huber_weights(r, M, w);
}

const char* isa_name(Isa isa) {
  return isa == Isa::kAvx2 ? "avx2" : "scalar";
}

}  // namespace xcal::kernels
