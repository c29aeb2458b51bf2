// Vertical-line candidates from lidar clouds and the image-side filters used
// before matching.
//
// Vertical structures (poles, wall corners, door frames) collapse to a dense
// spot when the cloud is projected onto the floor plane (x, z). Counting
// points per floor cell gives an intensity image: isolated maxima are poles,
// straight high-intensity runs are walls and their endpoints are corners.

#pragma once

#include <cstdint>
#include <vector>

#include "xcal/geom.h"

namespace xcal {

// Structure-of-arrays cloud in the lidar frame, meters.
struct PointCloud {
  std::vector<double> x, y, z;

  std::size_t size() const { return x.size(); }
  bool empty() const { return x.empty(); }
  void reserve(std::size_t n);
  void push_back(const Vec3& p);
  Vec3 point(std::size_t i) const { return {x[i], y[i], z[i]}; }
  void append(const PointCloud& other);
  bool operator==(const PointCloud&) const = default;
};

struct IntensityGrid {
  double origin_x = 0.0;  // floor coordinates of the lower cell corner
  double origin_z = 0.0;
  double cell_size = 0.0;
  int nx = 0;
  int nz = 0;
  std::vector<std::int32_t> counts;  // row-major, index iz * nx + ix

  std::int32_t at(int ix, int iz) const { return counts[iz * nx + ix]; }
  bool contains(int ix, int iz) const {
    return ix >= 0 && ix < nx && iz >= 0 && iz < nz;
  }
  Vec2 cell_center(int ix, int iz) const {
    return {origin_x + (ix + 0.5) * cell_size, origin_z + (iz + 0.5) * cell_size};
  }
  std::int64_t total() const;
};

enum class DetectorMode { kSegmentEndpoints, kPeaks, kBoth };

struct LineExtractionConfig {
  double cell_size = 0.25;
  int min_support = 15;
  double min_height_extent = 0.5;
  DetectorMode detector_mode = DetectorMode::kBoth;
  // Shortest straight run, in cells, accepted as a wall.
  int min_run_cells = 4;
  // Angular resolution of the run sweep.
  double sweep_step = deg_to_rad(1.0);
};

// Bins every point by (x, z). The grid spans the cloud's floor extent, so
// all points are in bounds. Throws Error for an empty cloud.
IntensityGrid project_to_floor(const PointCloud& cloud, double cell_size);

std::vector<VerticalLine3D> detect_vertical_lines(
    const IntensityGrid& grid, const PointCloud& cloud,
    const LineExtractionConfig& config = {});

// Image direction of a vertical candidate: the normalized pixel difference
// between its projections at y_max and y_min. Throws BehindCameraError.
Vec2 vertical_direction_in_image(const CameraIntrinsics& K, const Rigid3& T,
                                 const VerticalLine3D& candidate);

// Far-field approximation of the above: the lidar vertical axis expressed in
// the camera frame (vertical column of R^-1), scaled by the focal lengths.
// Ignores perspective, so it drifts from the exact direction toward the
// image borders when the camera is pitched.
Vec2 vertical_direction_far_field(const CameraIntrinsics& K, const Rigid3& T);

// Acute angle between a segment and a unit direction, radians in [0, pi/2].
double segment_angle_to(const Segment2D& s, const Vec2& dir);

std::vector<Segment2D> filter_segments_2d(const std::vector<Segment2D>& segments,
                                          const Vec2& expected_dir,
                                          double angle_tol);

// Keeps candidates whose mid-height point is in front of the camera and
// inside the image grown by `margin` pixels on every side.
std::vector<VerticalLine3D> fov_filter(
    const std::vector<VerticalLine3D>& candidates, const CameraIntrinsics& K,
    const Rigid3& T, double margin);

bool in_fov(const VerticalLine3D& candidate, const CameraIntrinsics& K,
            const Rigid3& T, double margin);

}  // namespace xcal
