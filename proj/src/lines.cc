#include "xcal/lines.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include "xcal/kernels.h"

namespace xcal {

void PointCloud::reserve(std::size_t n) {
  x.reserve(n);
  y.reserve(n);
  z.reserve(n);
}

void PointCloud::push_back(const Vec3& p) {
  x.push_back(p.x());
  y.push_back(p.y());
  z.push_back(p.z());
}

void PointCloud::append(const PointCloud& other) {
  x.insert(x.end(), other.x.begin(), other.x.end());
  y.insert(y.end(), other.y.begin(), other.y.end());
  z.insert(z.end(), other.z.begin(), other.z.end());
}

std::int64_t IntensityGrid::total() const {
  return std::accumulate(counts.begin(), counts.end(), std::int64_t{0});
}

namespace {

constexpr std::int64_t kMaxCells = 50'000'000;

kernels::FloorGridGeometry geometry_of(const IntensityGrid& g) {
  return {g.origin_x, g.origin_z, 1.0 / g.cell_size, g.nx, g.nz};
}

// Points of the cloud bucketed by floor cell (counting sort).
struct CellIndex {
  std::vector<std::int32_t> start;  // size cells + 1
  std::vector<std::int32_t> points;

  std::span<const std::int32_t> in(int cell) const {
    return {points.data() + start[cell],
            static_cast<std::size_t>(start[cell + 1] - start[cell])};
  }
};

CellIndex bucket_points(const IntensityGrid& grid, const PointCloud& cloud) {
  std::vector<std::int32_t> cells(cloud.size());
  kernels::floor_cells(geometry_of(grid), cloud.x, cloud.z, cells);
  const int n_cells = grid.nx * grid.nz;
  CellIndex idx;
  idx.start.assign(n_cells + 1, 0);
  for (std::int32_t c : cells) {
    if (c >= 0) ++idx.start[c + 1];
  }
  std::partial_sum(idx.start.begin(), idx.start.end(), idx.start.begin());
  idx.points.resize(idx.start.back());
  std::vector<std::int32_t> fill(idx.start.begin(), idx.start.end() - 1);
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (cells[i] >= 0) idx.points[fill[cells[i]]++] = static_cast<std::int32_t>(i);
  }
  return idx;
}

struct Run {
  Vec2 a, b;  // sample positions of the two extreme qualified samples
  double length = 0.0;
  int start_cell = 0;
};

// Centroid and principal direction of the kept points.
void principal_line(const std::vector<Vec2>& pts, const std::vector<char>& keep,
                    Vec2& centroid, Vec2& dir) {
  Vec2 sum = Vec2::Zero();
  std::size_t n = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (keep[i]) {
      sum += pts[i];
      ++n;
    }
  }
  centroid = sum / static_cast<double>(n);
  Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (keep[i]) {
      const Vec2 d = pts[i] - centroid;
      cov += d * d.transpose();
    }
  }
  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(cov);
  dir = eig.eigenvectors().col(1);
}

struct Detector {
  const IntensityGrid& grid;
  const PointCloud& cloud;
  const LineExtractionConfig& cfg;
  CellIndex index;
  std::vector<char> qualified;

  Detector(const IntensityGrid& g, const PointCloud& c,
           const LineExtractionConfig& config)
      : grid(g), cloud(c), cfg(config), index(bucket_points(g, c)) {
    const int n_cells = grid.nx * grid.nz;
    qualified.assign(n_cells, 0);
    for (int cell = 0; cell < n_cells; ++cell) {
      const auto pts = index.in(cell);
      if (static_cast<int>(pts.size()) < cfg.min_support) continue;
      double lo = cloud.y[pts[0]], hi = lo;
      for (std::int32_t p : pts) {
        lo = std::min(lo, cloud.y[p]);
        hi = std::max(hi, cloud.y[p]);
      }
      qualified[cell] = (hi - lo) >= cfg.min_height_extent;
    }
  }

  int cell_of(const Vec2& xz) const {
    const int ix = static_cast<int>(std::floor((xz.x() - grid.origin_x) / grid.cell_size));
    const int iz = static_cast<int>(std::floor((xz.y() - grid.origin_z) / grid.cell_size));
    return grid.contains(ix, iz) ? iz * grid.nx + ix : -1;
  }

  bool is_qualified(const Vec2& xz) const {
    const int c = cell_of(xz);
    return c >= 0 && qualified[c];
  }

  // Farthest qualified sample from `origin` along `dir`, tolerating a gap of
  // one cell.
  double extend(const Vec2& origin, const Vec2& dir) const {
    const double step = 0.5 * grid.cell_size;
    double last = 0.0;
    int misses = 0;
    for (int k = 1;; ++k) {
      const Vec2 s = origin + (k * step) * dir;
      if (cell_of(s) < 0) break;
      if (is_qualified(s)) {
        last = k * step;
        misses = 0;
      } else if (++misses > 2) {
        break;
      }
    }
    return last;
  }

  std::vector<int> cells_along(const Run& r) const {
    std::vector<int> cells;
    const Vec2 d = r.b - r.a;
    const double len = d.norm();
    const int n = std::max(1, static_cast<int>(std::ceil(len / (0.25 * grid.cell_size))));
    for (int k = 0; k <= n; ++k) {
      const int c = cell_of(r.a + d * (static_cast<double>(k) / n));
      if (c >= 0 && qualified[c] &&
          (cells.empty() || cells.back() != c) &&
          std::find(cells.begin(), cells.end(), c) == cells.end()) {
        cells.push_back(c);
      }
    }
    return cells;
  }

  std::vector<Run> find_runs() const {
    const int n_dirs = std::max(1, static_cast<int>(std::round(kPi / cfg.sweep_step)));
    const double min_len = (cfg.min_run_cells - 1) * grid.cell_size;
    std::vector<Run> runs;
    for (int cell = 0; cell < grid.nx * grid.nz; ++cell) {
      if (!qualified[cell]) continue;
      const Vec2 c = grid.cell_center(cell % grid.nx, cell / grid.nx);
      Run best;
      for (int k = 0; k < n_dirs; ++k) {
        const double th = k * kPi / n_dirs;
        const Vec2 d(std::cos(th), std::sin(th));
        const double fwd = extend(c, d);
        const double bwd = extend(c, -d);
        if (fwd + bwd > best.length) {
          best = {c - bwd * d, c + fwd * d, fwd + bwd, cell};
        }
      }
      if (best.length >= min_len && best.length > 0.0) runs.push_back(best);
    }
    std::stable_sort(runs.begin(), runs.end(), [](const Run& a, const Run& b) {
      return a.length > b.length;
    });

    std::vector<char> covered(qualified.size(), 0);
    std::vector<Run> accepted;
    for (const Run& r : runs) {
      const std::vector<int> cells = cells_along(r);
      if (cells.empty()) continue;
      const auto taken = std::count_if(cells.begin(), cells.end(),
                                       [&](int c) { return covered[c] != 0; });
      if (2 * taken > static_cast<long>(cells.size())) continue;
      for (int c : cells) covered[c] = 1;
      accepted.push_back(r);
    }
    return accepted;
  }

  // Least-squares floor line through the points near a run, and the extent
  // of those points along it.
  struct FittedRun {
    Vec2 centroid, dir;
    double t_min = 0.0, t_max = 0.0;
    Vec2 end(int k) const { return centroid + (k == 0 ? t_min : t_max) * dir; }
  };

  template <typename Fn>
  void for_points_near(const Vec2& a, const Vec2& b, double radius, Fn&& fn) const {
    const int r = static_cast<int>(std::ceil(radius / grid.cell_size)) + 1;
    const Vec2 lo = a.cwiseMin(b), hi = a.cwiseMax(b);
    const int ix0 = static_cast<int>(std::floor((lo.x() - grid.origin_x) / grid.cell_size)) - r;
    const int ix1 = static_cast<int>(std::floor((hi.x() - grid.origin_x) / grid.cell_size)) + r;
    const int iz0 = static_cast<int>(std::floor((lo.y() - grid.origin_z) / grid.cell_size)) - r;
    const int iz1 = static_cast<int>(std::floor((hi.y() - grid.origin_z) / grid.cell_size)) + r;
    const Vec2 d = b - a;
    const double len2 = d.squaredNorm();
    for (int iz = std::max(0, iz0); iz <= std::min(grid.nz - 1, iz1); ++iz) {
      for (int ix = std::max(0, ix0); ix <= std::min(grid.nx - 1, ix1); ++ix) {
        for (std::int32_t p : index.in(iz * grid.nx + ix)) {
          const Vec2 q(cloud.x[p], cloud.z[p]);
          const double s = len2 > 0.0 ? std::clamp((q - a).dot(d) / len2, 0.0, 1.0) : 0.0;
          if ((q - (a + s * d)).norm() <= radius) fn(p, q);
        }
      }
    }
  }

  FittedRun fit(const Run& r) const {
    const double radius = grid.cell_size;
    std::vector<Vec2> pts;
    for_points_near(r.a, r.b, radius, [&](std::int32_t, const Vec2& q) { pts.push_back(q); });
    FittedRun f;
    if (pts.size() < 2) {
      f.centroid = 0.5 * (r.a + r.b);
      f.dir = (r.b - r.a).normalized();
    } else {
      // Points of an adjoining wall sit inside the search radius near a
      // corner; trim to a band of three robust sigmas and refit.
      std::vector<char> keep(pts.size(), 1);
      for (int pass = 0; pass < 8; ++pass) {
        principal_line(pts, keep, f.centroid, f.dir);
        std::vector<double> dist(pts.size());
        for (std::size_t i = 0; i < pts.size(); ++i) {
          const Vec2 rel = pts[i] - f.centroid;
          dist[i] = std::abs(rel.x() * f.dir.y() - rel.y() * f.dir.x());
        }
        std::vector<double> sorted = dist;
        const auto mid = sorted.begin() + static_cast<std::ptrdiff_t>(sorted.size() / 2);
        std::nth_element(sorted.begin(), mid, sorted.end());
        const double band = std::max(3.0 * 1.4826 * *mid, 1e-9);
        bool changed = false;
        std::size_t kept = 0;
        std::vector<char> next(pts.size());
        for (std::size_t i = 0; i < pts.size(); ++i) {
          next[i] = dist[i] <= band;
          kept += next[i];
          changed |= next[i] != keep[i];
        }
        if (!changed || kept < 2) break;
        keep = std::move(next);
      }
    }
    if (f.dir.dot(r.b - r.a) < 0.0) f.dir = -f.dir;
    // Extent of points lying on the fitted line, searched a little past the
    // coarse run ends.
    const Vec2 a = r.a - radius * f.dir, b = r.b + radius * f.dir;
    f.t_min = (r.a - f.centroid).dot(f.dir);
    f.t_max = (r.b - f.centroid).dot(f.dir);
    const double band = 0.5 * grid.cell_size;
    for_points_near(a, b, radius, [&](std::int32_t, const Vec2& q) {
      const Vec2 rel = q - f.centroid;
      const double t = rel.dot(f.dir);
      if (std::abs(rel.x() * f.dir.y() - rel.y() * f.dir.x()) <= band) {
        f.t_min = std::min(f.t_min, t);
        f.t_max = std::max(f.t_max, t);
      }
    });
    return f;
  }

  // A pole scans as a ring of points around its axis; a circle fit recovers
  // the axis where the median of the ring is off by the sampling. Keeps
  // `center` unchanged when the points do not look like a thin pole.
  void fit_pole_center(const Vec2& guess, double radius, Vec2& center) const {
    std::vector<Vec2> pts;
    for_points_near(guess, guess, radius, [&](std::int32_t, const Vec2& q) {
      pts.push_back(q - guess);
    });
    if (pts.size() < 5) return;
    std::vector<char> keep(pts.size(), 1);
    Vec2 c = Vec2::Zero();
    double rad = 0.0;
    for (int pass = 0; pass < 8; ++pass) {
      Eigen::MatrixXd A(static_cast<Eigen::Index>(pts.size()), 3);
      Eigen::VectorXd b(A.rows());
      Eigen::Index n = 0;
      for (std::size_t i = 0; i < pts.size(); ++i) {
        if (!keep[i]) continue;
        A.row(n) << pts[i].x(), pts[i].y(), 1.0;
        b(n) = -pts[i].squaredNorm();
        ++n;
      }
      if (n < 5) return;
      const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A.topRows(n));
      if (qr.rank() < 3) return;  // all points on one spot: a line, not a ring
      const Eigen::Vector3d x = qr.solve(b.head(n));
      c = Vec2(-0.5 * x(0), -0.5 * x(1));
      const double r2 = c.squaredNorm() - x(2);
      if (!(r2 > 0.0)) return;
      rad = std::sqrt(r2);
      std::vector<double> res(pts.size());
      for (std::size_t i = 0; i < pts.size(); ++i) res[i] = std::abs((pts[i] - c).norm() - rad);
      std::vector<double> sorted = res;
      const auto mid = sorted.begin() + static_cast<std::ptrdiff_t>(sorted.size() / 2);
      std::nth_element(sorted.begin(), mid, sorted.end());
      const double band = std::max(3.0 * 1.4826 * *mid, 1e-9);
      bool changed = false;
      for (std::size_t i = 0; i < pts.size(); ++i) {
        const char k = res[i] <= band;
        changed |= k != keep[i];
        keep[i] = k;
      }
      if (!changed) break;
    }
    // The kept points must wrap around the center (a half ring has mean
    // resultant length 2/pi); a spot plus stray floor points does not.
    Vec2 resultant = Vec2::Zero();
    int kept = 0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (!keep[i]) continue;
      resultant += (pts[i] - c).normalized();
      ++kept;
    }
    if (kept < 5 || resultant.norm() > 0.8 * kept) return;
    if (rad < 0.5 * grid.cell_size && c.norm() < 0.5 * grid.cell_size) center = guess + c;
  }

  // Support, height range and refined position of a candidate at `xz`,
  // counting points within `radius` (half a cell by default).
  bool back_check(const Vec2& xz, bool recenter, VerticalLine3D& out,
                  double radius = 0.0) const {
    if (radius <= 0.0) radius = 0.5 * grid.cell_size;
    std::vector<double> xs, zs;
    double lo = 0.0, hi = 0.0;
    int support = 0;
    for_points_near(xz, xz, radius, [&](std::int32_t p, const Vec2& q) {
      const double y = cloud.y[p];
      if (support == 0) {
        lo = hi = y;
      } else {
        lo = std::min(lo, y);
        hi = std::max(hi, y);
      }
      ++support;
      if (recenter) {
        xs.push_back(q.x());
        zs.push_back(q.y());
      }
    });
    if (support < cfg.min_support || hi - lo < cfg.min_height_extent) {
      return false;
    }
    Vec2 pos = xz;
    if (recenter) {
      auto median = [](std::vector<double>& v) {
        const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
        std::nth_element(v.begin(), mid, v.end());
        return *mid;
      };
      pos = {median(xs), median(zs)};
      fit_pole_center(pos, radius, pos);
    }
    out = {pos.x(), pos.y(), lo, hi, support};
    return true;
  }

  bool is_peak(int cell) const {
    const int ix = cell % grid.nx, iz = cell / grid.nx;
    const std::int32_t c = grid.counts[cell];
    for (int dz = -1; dz <= 1; ++dz) {
      for (int dx = -1; dx <= 1; ++dx) {
        if (dx == 0 && dz == 0) continue;
        if (!grid.contains(ix + dx, iz + dz)) continue;
        const int n = (iz + dz) * grid.nx + ix + dx;
        // Equal neighbours: the lower index wins, so a pole split evenly
        // across two cells still yields one peak.
        if (grid.counts[n] > c || (grid.counts[n] == c && n < cell)) return false;
      }
    }
    return true;
  }
};

bool mode_has_runs(DetectorMode m) { return m != DetectorMode::kPeaks; }
bool mode_has_peaks(DetectorMode m) { return m != DetectorMode::kSegmentEndpoints; }

}  // namespace

IntensityGrid project_to_floor(const PointCloud& cloud, double cell_size) {
  if (cloud.empty()) {
    throw Error("project_to_floor: empty point cloud");
  }
  if (!(cell_size > 0.0)) {
    throw Error("project_to_floor: cell_size must be positive");
  }
  const kernels::FloorExtent e = kernels::floor_extent(cloud.x, cloud.z);
  if (!std::isfinite(e.x_min) || !std::isfinite(e.x_max) ||
      !std::isfinite(e.z_min) || !std::isfinite(e.z_max)) {
    throw Error("project_to_floor: non-finite coordinates");
  }
  IntensityGrid g;
  g.origin_x = e.x_min;
  g.origin_z = e.z_min;
  g.cell_size = cell_size;
  const double inv = 1.0 / cell_size;
  // Same expression as the binning kernel, so the extreme point lands in
  // the last cell.
  const double fx = std::floor((e.x_max - g.origin_x) * inv) + 1.0;
  const double fz = std::floor((e.z_max - g.origin_z) * inv) + 1.0;
  if (fx * fz > static_cast<double>(kMaxCells)) {
    throw Error("project_to_floor: grid too large; increase cell_size");
  }
  g.nx = static_cast<int>(fx);
  g.nz = static_cast<int>(fz);
  g.counts.assign(static_cast<std::size_t>(g.nx) * g.nz, 0);

  std::vector<std::int32_t> cells(cloud.size());
  kernels::floor_cells(geometry_of(g), cloud.x, cloud.z, cells);
  for (std::int32_t c : cells) {
    if (c >= 0) ++g.counts[c];
  }
  return g;
}

std::vector<VerticalLine3D> detect_vertical_lines(
    const IntensityGrid& grid, const PointCloud& cloud,
    const LineExtractionConfig& config) {
  std::vector<VerticalLine3D> out;
  if (cloud.empty() || grid.counts.empty()) return out;
  const Detector det(grid, cloud, config);
  const double cell = grid.cell_size;

  std::vector<char> near_run(grid.counts.size(), 0);
  if (mode_has_runs(config.detector_mode)) {
    const std::vector<Run> runs = det.find_runs();
    std::vector<Detector::FittedRun> fitted;
    fitted.reserve(runs.size());
    for (const Run& r : runs) {
      fitted.push_back(det.fit(r));
      for (int c : det.cells_along(r)) {
        const int ix = c % grid.nx, iz = c / grid.nx;
        for (int dz = -1; dz <= 1; ++dz) {
          for (int dx = -1; dx <= 1; ++dx) {
            if (grid.contains(ix + dx, iz + dz)) {
              near_run[(iz + dz) * grid.nx + ix + dx] = 1;
            }
          }
        }
      }
    }

    // Endpoints shared by two non-parallel runs become the intersection of
    // the fitted lines (a corner); the rest stay free wall ends.
    std::vector<std::array<char, 2>> used(fitted.size(), {0, 0});
    std::vector<Vec2> corners;
    for (std::size_t i = 0; i < fitted.size(); ++i) {
      for (std::size_t j = i + 1; j < fitted.size(); ++j) {
        const auto& a = fitted[i];
        const auto& b = fitted[j];
        const double cross = a.dir.x() * b.dir.y() - a.dir.y() * b.dir.x();
        if (std::abs(cross) < std::sin(deg_to_rad(20.0))) continue;
        const Vec2 d = b.centroid - a.centroid;
        const double s = (d.x() * b.dir.y() - d.y() * b.dir.x()) / cross;
        const Vec2 X = a.centroid + s * a.dir;
        for (int ea = 0; ea < 2; ++ea) {
          for (int eb = 0; eb < 2; ++eb) {
            if (used[i][ea] || used[j][eb]) continue;
            if ((a.end(ea) - X).norm() <= 1.5 * cell &&
                (b.end(eb) - X).norm() <= 1.5 * cell) {
              used[i][ea] = used[j][eb] = 1;
              corners.push_back(X);
            }
          }
        }
      }
    }
    VerticalLine3D v;
    for (const Vec2& X : corners) {
      if (det.back_check(X, false, v)) out.push_back(v);
    }
    for (std::size_t i = 0; i < fitted.size(); ++i) {
      for (int e = 0; e < 2; ++e) {
        if (!used[i][e] && det.back_check(fitted[i].end(e), false, v)) {
          out.push_back(v);
        }
      }
    }
  }

  if (mode_has_peaks(config.detector_mode)) {
    for (int cell_id = 0; cell_id < grid.nx * grid.nz; ++cell_id) {
      if (!det.qualified[cell_id] || near_run[cell_id] || !det.is_peak(cell_id)) {
        continue;
      }
      const Vec2 c = grid.cell_center(cell_id % grid.nx, cell_id / grid.nx);
      VerticalLine3D v;
      // The first pass reaches the cell corners so a pole anywhere in the
      // cell is found; the second pass, half a cell around the median,
      // recovers poles that straddle a cell border.
      if (!det.back_check(c, true, v, std::sqrt(0.5) * cell)) continue;
      VerticalLine3D refined;
      if (det.back_check({v.x, v.z}, true, refined)) v = refined;
      out.push_back(v);
    }
  }

  // One candidate per line: a pole beside a wall or a corner seen as a peak
  // too would otherwise match its true segment and a neighbouring one.
  // Earlier entries win, so corners beat wall ends and both beat peaks.
  std::vector<VerticalLine3D> unique;
  for (const VerticalLine3D& v : out) {
    const bool dup = std::any_of(unique.begin(), unique.end(), [&](const VerticalLine3D& u) {
      return std::hypot(u.x - v.x, u.z - v.z) < cell;
    });
    if (!dup) unique.push_back(v);
  }
  return unique;
}

Vec2 vertical_direction_in_image(const CameraIntrinsics& K, const Rigid3& T,
                                 const VerticalLine3D& candidate) {
  const Projection lo = project_point(K, T, candidate.point_at(candidate.y_min));
  const Projection hi = project_point(K, T, candidate.point_at(candidate.y_max));
  const Vec2 d = hi.pixel - lo.pixel;
  const double n = d.norm();
  if (!(n > 1e-12)) {
    throw GeometryError("vertical_direction_in_image: candidate projects to a point");
  }
  return d / n;
}

Vec2 vertical_direction_far_field(const CameraIntrinsics& K, const Rigid3& T) {
  const Vec3 dz = T.rotation.conjugate().rotate(Vec3::UnitY());
  const Vec2 d(K.fx * dz.x(), K.fy * dz.y());
  const double n = d.norm();
  if (!(n > 1e-12)) {
    throw GeometryError("vertical axis is parallel to the optical axis");
  }
  return d / n;
}

double segment_angle_to(const Segment2D& s, const Vec2& dir) {
  const Vec2 d = s.p1 - s.p0;
  const double n = d.norm();
  if (!(n > 1e-9)) return 0.5 * kPi;
  const double c = std::abs(d.dot(dir)) / (n * dir.norm());
  return std::acos(std::clamp(c, 0.0, 1.0));
}

std::vector<Segment2D> filter_segments_2d(const std::vector<Segment2D>& segments,
                                          const Vec2& expected_dir,
                                          double angle_tol) {
  std::vector<Segment2D> kept;
  for (const auto& s : segments) {
    if (segment_angle_to(s, expected_dir) <= angle_tol) kept.push_back(s);
  }
  return kept;
}

bool in_fov(const VerticalLine3D& candidate, const CameraIntrinsics& K,
            const Rigid3& T, double margin) {
  const Vec3 p = candidate.point_at(candidate.mid_height());
  const Vec3 pc = T.rotation.conjugate().rotate(p - T.translation);
  if (pc.z() <= 1e-9) return false;
  const Projection pr = project_point(K, T, p);
  return pr.pixel.x() >= -margin && pr.pixel.x() <= K.width + margin &&
         pr.pixel.y() >= -margin && pr.pixel.y() <= K.height + margin;
}

std::vector<VerticalLine3D> fov_filter(
    const std::vector<VerticalLine3D>& candidates, const CameraIntrinsics& K,
    const Rigid3& T, double margin) {
  std::vector<VerticalLine3D> kept;
  for (const auto& c : candidates) {
    if (in_fov(c, K, T, margin)) kept.push_back(c);
  }
  return kept;
}

}  // namespace xcal
