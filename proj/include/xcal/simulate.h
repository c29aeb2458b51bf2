// Deterministic synthetic ground truth: a room with walls and poles, a rig
// trajectory, noisy motion pairs, lidar clouds and labeled image segments.
//
// World frame: y up, floor at y = 0. The lidar frame has y as its vertical
// axis when the rig is upright. The default trajectory alternates upright
// poses (yaw only, used for line observations) with tilted poses that excite
// rotation about horizontal axes, so the motion is never degenerate.

#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "xcal/geom.h"
#include "xcal/handeye.h"
#include "xcal/lines.h"

namespace xcal {

struct WallSegment {
  Vec2 a = Vec2::Zero();  // floor (x, z), meters
  Vec2 b = Vec2::Zero();
};

struct SceneSpec {
  double x_min = -5.0, x_max = 5.0;
  double z_min = -5.0, z_max = 5.0;
  int n_poles = 8;
  std::vector<WallSegment> walls;
  double pole_height_min = 2.0, pole_height_max = 3.0;
  double wall_height = 2.5;
  double points_per_meter = 200.0;    // along each pole
  double wall_points_per_m2 = 200.0;
  double floor_points_per_m2 = 20.0;
  double pole_radius = 0.05;
  double point_noise = 0.005;  // isotropic sigma, meters
  double min_pole_separation = 1.0;
  double wall_clearance = 1.0;  // poles keep this distance from walls
  std::uint64_t rng_seed = 1;

  // 10 m x 10 m room bounded by four walls.
  static SceneSpec room();
  void validate() const;
};

struct Pole {
  double x = 0.0, z = 0.0, height = 0.0;
};

struct Scene {
  SceneSpec spec;
  std::vector<Pole> poles;
  // Ground-truth vertical lines in the world frame: poles first, then wall
  // corners (intersections of wall segments).
  std::vector<VerticalLine3D> lines;
};

enum class DegenerateMode { kNone, kPureTranslation, kSingleAxis };

struct TrajectorySpec {
  int n_poses = 20;
  double rotation_min = deg_to_rad(10.0);  // yaw change per step
  double rotation_max = deg_to_rad(40.0);
  double tilt_min = deg_to_rad(15.0);  // tilt of the excitation poses
  double tilt_max = deg_to_rad(35.0);
  double translation_min = 0.3;  // meters per step
  double translation_max = 1.5;
  double sensor_height = 1.0;
  double lidar_rot_noise = deg_to_rad(0.05);  // per rotation-vector component
  double lidar_trans_noise = 0.005;           // meters per component
  double lidar_vertical_noise_factor = 2.0;
  double cam_rot_noise = deg_to_rad(0.05);
  double cam_dir_noise = deg_to_rad(3.0);  // tangent perturbation of the direction
  double cam_corrupt_fraction = 0.2;
  double corrupt_rot_min = deg_to_rad(3.0);
  double corrupt_rot_max = deg_to_rad(7.0);
  double corrupt_dir_min = deg_to_rad(10.0);
  double corrupt_dir_max = deg_to_rad(30.0);
  DegenerateMode degenerate_mode = DegenerateMode::kNone;
  std::uint64_t rng_seed = 2;

  void validate() const;
};

enum class OutlierMode { kRandom, kAdjacent, kMixed };

struct CameraSpec {
  CameraIntrinsics K;
  double noise_px = 0.5;  // endpoint sigma
  double outlier_fraction = 0.2;  // share of all emitted segments
  OutlierMode outlier_mode = OutlierMode::kMixed;
  double adjacent_offset_min = 4.0;  // pixels
  double adjacent_offset_max = 12.0;
  double min_segment_px = 20.0;
  // Chance that the 2D detector misses a visible line. Clutter next to a
  // missed line can still be emitted.
  double miss_rate = 0.1;
  std::uint64_t rng_seed = 3;
};

struct SimConfig {
  SceneSpec scene = SceneSpec::room();
  TrajectorySpec trajectory;
  CameraSpec camera;
  Rigid3 extrinsic = default_extrinsic();

  // Camera looking horizontally, its y axis pointing down the lidar
  // vertical, mounted about 0.9 m from the lidar.
  static Rigid3 default_extrinsic();
  // Sets the scene, trajectory and camera seeds from one master seed.
  void set_seed(std::uint64_t seed);
  void validate() const;
};

struct Trajectory {
  std::vector<Rigid3> poses;  // lidar frame -> world
  std::vector<char> upright;  // lidar y axis equals world up
  std::vector<Rigid3> motions;  // exact consecutive L^k_{k+1}
};

struct LabeledSegments {
  std::vector<Segment2D> segments;
  std::vector<int> labels;  // ground-truth line index, -1 for outliers
};

struct PoseObservation {
  int pose_id = 0;
  PointCloud cloud;
  std::vector<Segment2D> segments;
  std::vector<int> segment_labels;  // empty when unknown
};

struct SimOutput {
  Rigid3 ground_truth_extrinsic;
  CameraIntrinsics K;
  Scene scene;
  Trajectory trajectory;
  std::vector<MotionPair> motion_pairs;
  std::vector<int> corrupt_pair_ids;
  std::vector<PoseObservation> observations;
};

// Seeded 64-bit generator for stream `stream` and element `index`. Streams
// are independent of each other and of evaluation order.
std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream,
                         std::uint64_t index = 0);

// Throws Error when poles cannot be packed at the requested separation.
Scene generate_scene(const SceneSpec& spec);

Trajectory generate_trajectory(const TrajectorySpec& spec,
                               const SceneSpec& room = SceneSpec::room());

// All C(N,2) pairs ordered like build_pairs, each measured independently
// with the configured noise. Only consecutive pairs carry a valid camera
// translation direction. Corrupted pair ids are appended to `corrupt_ids`.
std::vector<MotionPair> make_motion_pairs(const std::vector<Rigid3>& poses,
                                          const Rigid3& extrinsic_gt,
                                          const TrajectorySpec& spec,
                                          std::vector<int>* corrupt_ids = nullptr);

// Cloud in the lidar frame of `pose`. Deterministic for a given
// (spec seed, pose_id).
PointCloud observe_lidar(const Scene& scene, const Rigid3& pose, int pose_id);

// Segments of the ground-truth lines visible from the camera at
// pose * extrinsic, plus `outlier_count` outlier segments.
LabeledSegments observe_camera(const Scene& scene, const Rigid3& pose,
                               const Rigid3& extrinsic, const CameraSpec& spec,
                               int outlier_count, int pose_id);

// Ground-truth lines expressed in the lidar frame of `pose`.
std::vector<VerticalLine3D> lines_in_lidar_frame(const Scene& scene,
                                                 const Rigid3& pose);

// Index of the ground-truth line within `max_dist` (floor distance, lidar
// frame of `pose`) of the candidate, or -1.
int nearest_ground_truth_line(const Scene& scene, const Rigid3& pose,
                              const VerticalLine3D& candidate, double max_dist);

SimOutput simulate(const SimConfig& config);

struct Metrics {
  double rotation_error = 0.0;      // normalized, [0, 1]
  double rotation_error_deg = 0.0;  // rotation_error * 90
  double translation_error = 0.0;   // meters
  double translation_ratio = 0.0;   // error / |t_gt|
};

Metrics evaluate(const Rigid3& estimate, const Rigid3& gt);

}  // namespace xcal
