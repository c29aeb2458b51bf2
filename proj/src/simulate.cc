#include "xcal/simulate.h"

#include <algorithm>
#include <cmath>

#include "xcal/kernels.h"
#include "xcal/refine.h"

namespace xcal {

namespace {

enum Stream : std::uint64_t {
  kStreamScene = 1,
  kStreamTrajectory = 2,
  kStreamPairs = 3,
  kStreamLidar = 4,
  kStreamCamera = 5,
};

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

double gauss(std::mt19937_64& rng, double sigma) {
  if (sigma == 0.0) return 0.0;
  return std::normal_distribution<double>(0.0, sigma)(rng);
}

Vec3 gauss3(std::mt19937_64& rng, double sigma) {
  const double a = gauss(rng, sigma);
  const double b = gauss(rng, sigma);
  const double c = gauss(rng, sigma);
  return {a, b, c};
}

Quat perturb(const Quat& q, std::mt19937_64& rng, double sigma) {
  if (sigma == 0.0) return q;
  return (q * Quat::from_rotation_vector(gauss3(rng, sigma))).normalized();
}

Quat yaw(double angle) { return Quat::from_axis_angle(Vec3::UnitY(), angle); }

double point_segment_distance(const Vec2& p, const WallSegment& w) {
  const Vec2 d = w.b - w.a;
  const double len2 = d.squaredNorm();
  const double s = len2 > 0.0 ? std::clamp((p - w.a).dot(d) / len2, 0.0, 1.0) : 0.0;
  return (p - (w.a + s * d)).norm();
}

// Intersection of two closed segments, if any (non-parallel only).
bool segment_intersection(const WallSegment& p, const WallSegment& q, Vec2& out) {
  const Vec2 r = p.b - p.a, s = q.b - q.a;
  const double cross = r.x() * s.y() - r.y() * s.x();
  if (std::abs(cross) < 1e-12) return false;
  const Vec2 d = q.a - p.a;
  const double t = (d.x() * s.y() - d.y() * s.x()) / cross;
  const double u = (d.x() * r.y() - d.y() * r.x()) / cross;
  constexpr double eps = 1e-9;
  if (t < -eps || t > 1.0 + eps || u < -eps || u > 1.0 + eps) return false;
  out = p.a + t * r;
  return true;
}

// Liang-Barsky clip of segment a-b to [0, w] x [0, h].
bool clip_to_image(Vec2& a, Vec2& b, double w, double h) {
  double t0 = 0.0, t1 = 1.0;
  const Vec2 d = b - a;
  const double p[4] = {-d.x(), d.x(), -d.y(), d.y()};
  const double q[4] = {a.x(), w - a.x(), a.y(), h - a.y()};
  for (int i = 0; i < 4; ++i) {
    if (p[i] == 0.0) {
      if (q[i] < 0.0) return false;
      continue;
    }
    const double r = q[i] / p[i];
    if (p[i] < 0.0) {
      t0 = std::max(t0, r);
    } else {
      t1 = std::min(t1, r);
    }
    if (t0 > t1) return false;
  }
  const Vec2 a0 = a;
  a = a0 + t0 * d;
  b = a0 + t1 * d;
  return true;
}

Vec2 rotate2(const Vec2& v, double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  return {c * v.x() - s * v.y(), s * v.x() + c * v.y()};
}

}  // namespace

std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream,
                         std::uint64_t index) {
  const std::uint64_t a = splitmix64(seed);
  const std::uint64_t b = splitmix64(a ^ splitmix64(stream));
  const std::uint64_t c = splitmix64(b ^ splitmix64(index + 0x632be59bd9b4e019ULL));
  std::seed_seq seq{static_cast<std::uint32_t>(c), static_cast<std::uint32_t>(c >> 32),
                    static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
  return std::mt19937_64(seq);
}

SceneSpec SceneSpec::room() {
  SceneSpec s;
  const Vec2 c00(s.x_min, s.z_min), c10(s.x_max, s.z_min);
  const Vec2 c11(s.x_max, s.z_max), c01(s.x_min, s.z_max);
  s.walls = {{c00, c10}, {c10, c11}, {c11, c01}, {c01, c00}};
  return s;
}

void SceneSpec::validate() const {
  if (!(x_max > x_min) || !(z_max > z_min)) {
    throw Error("scene: room extent is degenerate");
  }
  if (n_poles < 0) throw Error("scene: n_poles must be non-negative");
  if (!(points_per_meter > 0.0)) throw Error("scene: points_per_meter must be positive");
  if (wall_points_per_m2 < 0.0 || floor_points_per_m2 < 0.0) {
    throw Error("scene: densities must be non-negative");
  }
  if (!(pole_height_max >= pole_height_min) || !(pole_height_min > 0.0)) {
    throw Error("scene: invalid pole height range");
  }
  if (!(wall_height > 0.0)) throw Error("scene: wall_height must be positive");
  if (pole_radius < 0.0 || point_noise < 0.0) {
    throw Error("scene: pole_radius and point_noise must be non-negative");
  }
  for (const auto& w : walls) {
    if ((w.b - w.a).norm() < 1e-9) throw Error("scene: zero-length wall");
  }
}

void TrajectorySpec::validate() const {
  if (n_poses < 3) {
    throw Error("trajectory: n_poses must be at least 3 (got " +
                std::to_string(n_poses) + ")");
  }
  const double sigmas[] = {lidar_rot_noise, lidar_trans_noise, cam_rot_noise,
                           cam_dir_noise, lidar_vertical_noise_factor};
  for (double s : sigmas) {
    if (!(s >= 0.0)) throw Error("trajectory: noise levels must be non-negative");
  }
  if (!(cam_corrupt_fraction >= 0.0 && cam_corrupt_fraction <= 1.0)) {
    throw Error("trajectory: cam_corrupt_fraction must be in [0, 1]");
  }
  if (!(rotation_max >= rotation_min && rotation_min >= 0.0) ||
      !(tilt_max >= tilt_min && tilt_min >= 0.0) ||
      !(translation_max >= translation_min && translation_min >= 0.0) ||
      !(corrupt_rot_max >= corrupt_rot_min) || !(corrupt_dir_max >= corrupt_dir_min)) {
    throw Error("trajectory: invalid range");
  }
}

Rigid3 SimConfig::default_extrinsic() {
  // Camera z (forward) along lidar z, camera y (down) along lidar -y, then a
  // 25 degree yaw, a slight downward pitch and roll.
  const Quat base = Quat::from_axis_angle(Vec3::UnitZ(), kPi);
  const Quat pitch = Quat::from_axis_angle(Vec3::UnitX(), deg_to_rad(-3.0));
  const Quat roll = Quat::from_axis_angle(Vec3::UnitZ(), deg_to_rad(2.0));
  const Quat R = (yaw(deg_to_rad(25.0)) * base * pitch * roll).normalized().canonical();
  return {R, Vec3(0.4224, 0.6745, -0.4616)};
}

void SimConfig::set_seed(std::uint64_t seed) {
  scene.rng_seed = splitmix64(seed ^ 0x5ce7e5eedULL);
  trajectory.rng_seed = splitmix64(seed ^ 0x7a7ec7041ULL);
  camera.rng_seed = splitmix64(seed ^ 0xca3e7aULL);
}

void SimConfig::validate() const {
  scene.validate();
  trajectory.validate();
  camera.K.validate();
  if (!extrinsic.rotation.is_unit()) throw Error("extrinsic rotation is not unit");
  if (!(camera.outlier_fraction >= 0.0 && camera.outlier_fraction < 1.0)) {
    throw Error("camera: outlier_fraction must be in [0, 1)");
  }
  if (camera.noise_px < 0.0) throw Error("camera: noise_px must be non-negative");
}

Scene generate_scene(const SceneSpec& spec) {
  spec.validate();
  Scene scene;
  scene.spec = spec;
  auto rng = make_rng(spec.rng_seed, kStreamScene);
  const double m = spec.wall_clearance;
  if (spec.n_poles > 0 && (spec.x_max - spec.x_min <= 2 * m || spec.z_max - spec.z_min <= 2 * m)) {
    throw Error("scene: room too small for poles at the requested wall clearance");
  }
  constexpr int kAttempts = 10000;
  for (int k = 0; k < spec.n_poles; ++k) {
    bool placed = false;
    for (int attempt = 0; attempt < kAttempts && !placed; ++attempt) {
      const Vec2 p(uniform(rng, spec.x_min + m, spec.x_max - m),
                   uniform(rng, spec.z_min + m, spec.z_max - m));
      bool ok = true;
      for (const auto& w : spec.walls) {
        ok = ok && point_segment_distance(p, w) >= spec.wall_clearance;
      }
      for (const auto& q : scene.poles) {
        ok = ok && (p - Vec2(q.x, q.z)).norm() >= spec.min_pole_separation;
      }
      if (ok) {
        const double h = uniform(rng, spec.pole_height_min, spec.pole_height_max);
        scene.poles.push_back({p.x(), p.y(), h});
        placed = true;
      }
    }
    if (!placed) {
      throw Error("scene: cannot place " + std::to_string(spec.n_poles) +
                  " poles with separation " + std::to_string(spec.min_pole_separation) +
                  " m");
    }
  }
  for (const auto& p : scene.poles) {
    scene.lines.push_back({p.x, p.z, 0.0, p.height, 0});
  }
  std::vector<Vec2> corners;
  for (std::size_t i = 0; i < spec.walls.size(); ++i) {
    for (std::size_t j = i + 1; j < spec.walls.size(); ++j) {
      Vec2 X;
      if (!segment_intersection(spec.walls[i], spec.walls[j], X)) continue;
      const bool dup = std::any_of(corners.begin(), corners.end(),
                                   [&](const Vec2& c) { return (c - X).norm() < 1e-6; });
      if (!dup) corners.push_back(X);
    }
  }
  for (const Vec2& c : corners) {
    scene.lines.push_back({c.x(), c.y(), 0.0, spec.wall_height, 0});
  }
  return scene;
}

Trajectory generate_trajectory(const TrajectorySpec& spec, const SceneSpec& room) {
  spec.validate();
  auto rng = make_rng(spec.rng_seed, kStreamTrajectory);
  const double margin = 2.0;
  const double bx0 = std::min(room.x_min + margin, 0.5 * (room.x_min + room.x_max));
  const double bx1 = std::max(room.x_max - margin, 0.5 * (room.x_min + room.x_max));
  const double bz0 = std::min(room.z_min + margin, 0.5 * (room.z_min + room.z_max));
  const double bz1 = std::max(room.z_max - margin, 0.5 * (room.z_min + room.z_max));
  auto inside = [&](const Vec2& p) {
    return p.x() >= bx0 && p.x() <= bx1 && p.y() >= bz0 && p.y() <= bz1;
  };

  Trajectory traj;
  Vec2 pos(uniform(rng, bx0, bx1), uniform(rng, bz0, bz1));
  double heading = uniform(rng, 0.0, 2.0 * kPi);
  for (int k = 0; k < spec.n_poses; ++k) {
    if (k > 0) {
      const double step = uniform(rng, spec.translation_min, spec.translation_max);
      Vec2 next = pos;
      bool found = false;
      for (int attempt = 0; attempt < 64 && !found; ++attempt) {
        const double dir = uniform(rng, 0.0, 2.0 * kPi);
        next = pos + step * Vec2(std::cos(dir), std::sin(dir));
        found = inside(next);
      }
      if (!found) {
        const Vec2 center(0.5 * (bx0 + bx1), 0.5 * (bz0 + bz1));
        const Vec2 d = center - pos;
        next = d.norm() > 1e-9 ? Vec2(pos + step * d.normalized()) : pos;
      }
      pos = next;
      if (spec.degenerate_mode != DegenerateMode::kPureTranslation) {
        const double sign = uniform(rng, 0.0, 1.0) < 0.5 ? -1.0 : 1.0;
        heading += sign * uniform(rng, spec.rotation_min, spec.rotation_max);
      }
    }
    const bool tilted = spec.degenerate_mode == DegenerateMode::kNone && (k % 2 == 1);
    Quat R = yaw(heading);
    double height = spec.sensor_height;
    if (tilted) {
      const double a = uniform(rng, 0.0, 2.0 * kPi);
      const double tilt = uniform(rng, spec.tilt_min, spec.tilt_max);
      R = (R * Quat::from_axis_angle(Vec3(std::cos(a), 0.0, std::sin(a)), tilt)).normalized();
      height += uniform(rng, -0.15, 0.15);
    }
    traj.poses.push_back({R, Vec3(pos.x(), height, pos.y())});
    traj.upright.push_back(tilted ? 0 : 1);
  }
  for (int k = 0; k + 1 < spec.n_poses; ++k) {
    traj.motions.push_back(traj.poses[k].inverse() * traj.poses[k + 1]);
  }
  return traj;
}

std::vector<MotionPair> make_motion_pairs(const std::vector<Rigid3>& poses,
                                          const Rigid3& extrinsic_gt,
                                          const TrajectorySpec& spec,
                                          std::vector<int>* corrupt_ids) {
  const int n = static_cast<int>(poses.size());
  const Rigid3 T_inv = extrinsic_gt.inverse();
  std::vector<MotionPair> pairs;
  for (int gap = 1; gap < n; ++gap) {
    for (int i = 0; i + gap < n; ++i) {
      const int j = i + gap;
      MotionPair p;
      p.id = static_cast<int>(pairs.size());
      p.pose_i = i;
      p.pose_j = j;
      auto rng = make_rng(spec.rng_seed, kStreamPairs, static_cast<std::uint64_t>(p.id));

      const Rigid3 L = poses[i].inverse() * poses[j];
      const Rigid3 C = T_inv * L * extrinsic_gt;

      p.lidar_motion.rotation = perturb(L.rotation, rng, spec.lidar_rot_noise);
      const double ts = spec.lidar_trans_noise;
      p.lidar_motion.translation =
          L.translation + Vec3(gauss(rng, ts), gauss(rng, ts * spec.lidar_vertical_noise_factor),
                               gauss(rng, ts));

      Quat qc = perturb(C.rotation, rng, spec.cam_rot_noise);
      const double cn = C.translation.norm();
      Vec3 dir = cn > 1e-9 ? Vec3(C.translation / cn) : Vec3::Zero();
      if (cn > 1e-9 && spec.cam_dir_noise > 0.0) {
        const Vec3 nv = gauss3(rng, spec.cam_dir_noise);
        dir = (dir + (nv - nv.dot(dir) * dir)).normalized();
      }

      const bool corrupt = spec.cam_corrupt_fraction > 0.0 &&
                           uniform(rng, 0.0, 1.0) < spec.cam_corrupt_fraction;
      if (corrupt) {
        // Grossly wrong two-view estimate: the rotation angle is off by a
        // few degrees and the translation direction by more.
        const double theta = rotation_angle(qc);
        const double delta = uniform(rng, spec.corrupt_rot_min, spec.corrupt_rot_max);
        double sign = uniform(rng, 0.0, 1.0) < 0.5 ? -1.0 : 1.0;
        if (theta - delta < deg_to_rad(0.5)) sign = 1.0;
        Vec3 own = qc.rotation_vector();
        own = own.norm() > 1e-9 ? Vec3(own.normalized()) : Vec3::UnitY();
        // Tilt the corruption axis up to 60 degrees off the pair's own axis:
        // the angle still moves by at least delta / 2, the axis moves too.
        Vec3 perp = own.cross(gauss3(rng, 1.0));
        perp = perp.norm() > 1e-9 ? Vec3(perp.normalized()) : own.unitOrthogonal();
        const double beta = uniform(rng, 0.0, deg_to_rad(60.0));
        const Vec3 axis = std::cos(beta) * own + std::sin(beta) * perp;
        qc = (qc * Quat::from_axis_angle(axis, sign * delta)).normalized();
        if (dir.norm() > 0.5) {
          Vec3 perp = dir.cross(gauss3(rng, 1.0));
          if (perp.norm() < 1e-9) perp = dir.unitOrthogonal();
          const double ang = uniform(rng, spec.corrupt_dir_min, spec.corrupt_dir_max);
          dir = Quat::from_axis_angle(perp, ang).rotate(dir).normalized();
        }
        if (corrupt_ids) corrupt_ids->push_back(p.id);
      }
      p.cam_rotation = qc;
      p.cam_translation_dir = dir;
      p.valid = gap == 1 && cn > 1e-9;
      pairs.push_back(p);
    }
  }
  return pairs;
}

PointCloud observe_lidar(const Scene& scene, const Rigid3& pose, int pose_id) {
  const SceneSpec& s = scene.spec;
  auto rng = make_rng(s.rng_seed, kStreamLidar, static_cast<std::uint64_t>(pose_id));
  PointCloud world;
  auto noisy = [&](const Vec3& p) { return Vec3(p + gauss3(rng, s.point_noise)); };

  for (const Pole& pole : scene.poles) {
    const int n = static_cast<int>(std::lround(s.points_per_meter * pole.height));
    for (int k = 0; k < n; ++k) {
      const double y = uniform(rng, 0.0, pole.height);
      const double phi = uniform(rng, 0.0, 2.0 * kPi);
      world.push_back(noisy({pole.x + s.pole_radius * std::cos(phi), y,
                             pole.z + s.pole_radius * std::sin(phi)}));
    }
  }
  for (const WallSegment& w : s.walls) {
    const double len = (w.b - w.a).norm();
    const int n = static_cast<int>(std::lround(s.wall_points_per_m2 * len * s.wall_height));
    for (int k = 0; k < n; ++k) {
      const Vec2 f = w.a + uniform(rng, 0.0, 1.0) * (w.b - w.a);
      world.push_back(noisy({f.x(), uniform(rng, 0.0, s.wall_height), f.y()}));
    }
  }
  const double area = (s.x_max - s.x_min) * (s.z_max - s.z_min);
  const int n_floor = static_cast<int>(std::lround(s.floor_points_per_m2 * area));
  for (int k = 0; k < n_floor; ++k) {
    world.push_back(noisy({uniform(rng, s.x_min, s.x_max), 0.0,
                           uniform(rng, s.z_min, s.z_max)}));
  }

  const Rigid3 inv = pose.inverse();
  const Mat3 R = inv.rotation_matrix();
  kernels::AffineMap map{};
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) map.r[3 * r + c] = R(r, c);
    map.t[r] = inv.translation[r];
  }
  PointCloud local;
  local.x.resize(world.size());
  local.y.resize(world.size());
  local.z.resize(world.size());
  kernels::transform_points(map, world.x, world.y, world.z, local.x, local.y, local.z);
  return local;
}

LabeledSegments observe_camera(const Scene& scene, const Rigid3& pose,
                               const Rigid3& extrinsic, const CameraSpec& spec,
                               int outlier_count, int pose_id) {
  auto rng = make_rng(spec.rng_seed, kStreamCamera, static_cast<std::uint64_t>(pose_id));
  const CameraIntrinsics& K = spec.K;
  const Rigid3 cam = pose * extrinsic;  // camera -> world
  const Rigid3 cam_inv = cam.inverse();
  const double W = K.width, H = K.height;

  LabeledSegments out;
  std::vector<Segment2D> clean;
  for (std::size_t li = 0; li < scene.lines.size(); ++li) {
    const VerticalLine3D& l = scene.lines[li];
    const Vec3 lo = cam_inv.apply(l.point_at(l.y_min));
    const Vec3 hi = cam_inv.apply(l.point_at(l.y_max));
    if (lo.z() <= 0.1 || hi.z() <= 0.1) continue;
    Vec2 a = project_point(K, cam, l.point_at(l.y_min)).pixel;
    Vec2 b = project_point(K, cam, l.point_at(l.y_max)).pixel;
    if (!clip_to_image(a, b, W, H) || (b - a).norm() < spec.min_segment_px) continue;
    clean.push_back({a, b});
    if (spec.miss_rate > 0.0 && uniform(rng, 0.0, 1.0) < spec.miss_rate) continue;
    const Vec2 na(gauss(rng, spec.noise_px), gauss(rng, spec.noise_px));
    const Vec2 nb(gauss(rng, spec.noise_px), gauss(rng, spec.noise_px));
    out.segments.push_back({a + na, b + nb});
    out.labels.push_back(static_cast<int>(li));
  }

  for (int k = 0; k < outlier_count; ++k) {
    const bool coin = uniform(rng, 0.0, 1.0) < 0.5;
    const bool adjacent =
        !clean.empty() && (spec.outlier_mode == OutlierMode::kAdjacent ||
                           (spec.outlier_mode == OutlierMode::kMixed && coin));
    Segment2D s;
    if (adjacent) {
      // Clutter edge running alongside a true structure (texture, shadow,
      // second silhouette edge).
      const auto& base = clean[std::uniform_int_distribution<std::size_t>(
          0, clean.size() - 1)(rng)];
      const Vec2 d = base.p1 - base.p0;
      const Vec2 nrm = Vec2(-d.y(), d.x()).normalized();
      const double off = (uniform(rng, 0.0, 1.0) < 0.5 ? -1.0 : 1.0) *
                         uniform(rng, spec.adjacent_offset_min, spec.adjacent_offset_max);
      const double t0 = uniform(rng, 0.0, 0.3), t1 = uniform(rng, 0.7, 1.0);
      const Vec2 mid = base.p0 + 0.5 * (t0 + t1) * d + off * nrm;
      const Vec2 half = rotate2(0.5 * (t1 - t0) * d, deg_to_rad(uniform(rng, -1.0, 1.0)));
      s = {mid - half, mid + half};
    } else {
      const Vec2 c(uniform(rng, 0.0, W), uniform(rng, 0.0, H));
      const double len = uniform(rng, 30.0, 200.0);
      const double ang = uniform(rng, 0.0, kPi);
      const Vec2 half = 0.5 * len * Vec2(std::cos(ang), std::sin(ang));
      s = {c - half, c + half};
    }
    out.segments.push_back(s);
    out.labels.push_back(-1);
  }
  return out;
}

std::vector<VerticalLine3D> lines_in_lidar_frame(const Scene& scene, const Rigid3& pose) {
  const Rigid3 inv = pose.inverse();
  std::vector<VerticalLine3D> out;
  out.reserve(scene.lines.size());
  for (const auto& l : scene.lines) {
    const Vec3 lo = inv.apply(l.point_at(l.y_min));
    const Vec3 hi = inv.apply(l.point_at(l.y_max));
    out.push_back({lo.x(), lo.z(), std::min(lo.y(), hi.y()), std::max(lo.y(), hi.y()), 0});
  }
  return out;
}

int nearest_ground_truth_line(const Scene& scene, const Rigid3& pose,
                              const VerticalLine3D& candidate, double max_dist) {
  const auto lines = lines_in_lidar_frame(scene, pose);
  int best = -1;
  double best_d = max_dist;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const double d = std::hypot(lines[i].x - candidate.x, lines[i].z - candidate.z);
    if (d <= best_d) {
      best_d = d;
      best = static_cast<int>(i);
    }
  }
  return best;
}

SimOutput simulate(const SimConfig& config) {
  config.validate();
  SimOutput out;
  out.ground_truth_extrinsic = config.extrinsic;
  out.K = config.camera.K;
  out.scene = generate_scene(config.scene);
  out.trajectory = generate_trajectory(config.trajectory, config.scene);
  out.motion_pairs = make_motion_pairs(out.trajectory.poses, config.extrinsic,
                                       config.trajectory, &out.corrupt_pair_ids);
  const double f = config.camera.outlier_fraction;
  for (std::size_t k = 0; k < out.trajectory.poses.size(); ++k) {
    if (!out.trajectory.upright[k]) continue;
    const int pose_id = static_cast<int>(k);
    const Rigid3& pose = out.trajectory.poses[k];
    PoseObservation obs;
    obs.pose_id = pose_id;
    obs.cloud = observe_lidar(out.scene, pose, pose_id);
    LabeledSegments seg =
        observe_camera(out.scene, pose, config.extrinsic, config.camera, 0, pose_id);
    const int n_true = static_cast<int>(seg.segments.size());
    int n_out = 0;
    if (f > 0.0 && n_true > 0) {
      n_out = std::max(1, static_cast<int>(std::lround(f / (1.0 - f) * n_true)));
      seg = observe_camera(out.scene, pose, config.extrinsic, config.camera, n_out, pose_id);
    }
    obs.segments = std::move(seg.segments);
    obs.segment_labels = std::move(seg.labels);
    out.observations.push_back(std::move(obs));
  }
  return out;
}

Metrics evaluate(const Rigid3& estimate, const Rigid3& gt) {
  Metrics m;
  m.rotation_error = rotation_error(estimate.rotation, gt.rotation);
  m.rotation_error_deg = 90.0 * m.rotation_error;
  const double n = gt.translation.norm();
  m.translation_error = (estimate.translation - gt.translation).norm();
  m.translation_ratio = n > 0.0 ? m.translation_error / n : 0.0;
  return m;
}

}  // namespace xcal
