#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "xcal/lines.h"
#include "xcal/simulate.h"

using namespace xcal;

namespace {

void add_pole(PointCloud& c, double x, double z, int n, double height = 2.5) {
  for (int i = 0; i < n; ++i) c.push_back({x, height * i / std::max(1, n - 1), z});
}

void add_wall(PointCloud& c, Vec2 a, Vec2 b, double step = 0.02, double height = 2.5) {
  const double len = (b - a).norm();
  for (double s = 0; s <= len + 1e-12; s += step) {
    const Vec2 p = a + (b - a) * (s / len);
    for (double h = 0; h <= height + 1e-12; h += 0.1) c.push_back({p.x(), h, p.y()});
  }
}

bool has_candidate_near(const std::vector<VerticalLine3D>& c, double x, double z, double tol) {
  for (const VerticalLine3D& l : c) {
    if (std::hypot(l.x - x, l.z - z) <= tol) return true;
  }
  return false;
}

// Camera looking along lidar -z with its y axis pointing down the lidar vertical.
Rigid3 level_camera() { return {Quat::from_axis_angle({1, 0, 0}, kPi), Vec3::Zero()}; }

double point_segment(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 d = b - a;
  const double t = std::clamp((p - a).dot(d) / d.squaredNorm(), 0.0, 1.0);
  return (a + t * d - p).norm();
}

}  // namespace

TEST(ProjectToFloor, SinglePoleOneCell) {
  PointCloud c;
  for (int i = 0; i < 1000; ++i) c.push_back({2.0, 0.003 * i, 3.0});
  const IntensityGrid g = project_to_floor(c, 0.1);
  int occupied = 0;
  for (std::int32_t v : g.counts) occupied += v > 0;
  EXPECT_EQ(occupied, 1);
  EXPECT_EQ(g.total(), 1000);
}

TEST(ProjectToFloor, TwoPolesTwoCells) {
  PointCloud c;
  add_pole(c, 0, 0, 50);
  add_pole(c, 5, 5, 70);
  const IntensityGrid g = project_to_floor(c, 0.5);
  std::vector<std::int32_t> nonzero;
  for (std::int32_t v : g.counts) {
    if (v > 0) nonzero.push_back(v);
  }
  EXPECT_EQ(nonzero, (std::vector<std::int32_t>{50, 70}));
}

TEST(ProjectToFloor, ConservesCount) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-7, 7);
  for (int trial = 0; trial < 20; ++trial) {
    PointCloud c;
    const int n = 1 + trial * 97;
    for (int i = 0; i < n; ++i) c.push_back({u(rng), u(rng), u(rng)});
    EXPECT_EQ(project_to_floor(c, 0.25).total(), n);
  }
}

TEST(ProjectToFloor, Errors) {
  EXPECT_THROW(project_to_floor({}, 0.25), Error);
  PointCloud c;
  c.push_back({0, 0, 0});
  EXPECT_THROW(project_to_floor(c, 0.0), Error);
}

TEST(DetectVerticalLines, CornerAndPole) {
  PointCloud c;
  add_wall(c, {3, 4}, {-1, 4});
  add_wall(c, {3, 4}, {3, 0});
  add_pole(c, 1, 1, 200);
  const LineExtractionConfig cfg;
  const auto cand = detect_vertical_lines(project_to_floor(c, cfg.cell_size), c, cfg);
  EXPECT_TRUE(has_candidate_near(cand, 3, 4, cfg.cell_size));
  EXPECT_TRUE(has_candidate_near(cand, 1, 1, cfg.cell_size));
  for (const VerticalLine3D& l : cand) {
    EXPECT_LT(l.y_min, l.y_max);
    EXPECT_GE(l.support, cfg.min_support);
  }
}

TEST(DetectVerticalLines, PeaksOnlyAndEndpointsOnly) {
  PointCloud c;
  add_wall(c, {3, 4}, {-1, 4});
  add_wall(c, {3, 4}, {3, 0});
  add_pole(c, 1, 1, 200);
  LineExtractionConfig cfg;
  cfg.detector_mode = DetectorMode::kPeaks;
  const auto peaks = detect_vertical_lines(project_to_floor(c, cfg.cell_size), c, cfg);
  EXPECT_TRUE(has_candidate_near(peaks, 1, 1, cfg.cell_size));
  cfg.detector_mode = DetectorMode::kSegmentEndpoints;
  const auto ends = detect_vertical_lines(project_to_floor(c, cfg.cell_size), c, cfg);
  EXPECT_TRUE(has_candidate_near(ends, 3, 4, cfg.cell_size));
}

TEST(DetectVerticalLines, FlatFloorHasNoLines) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0, 5);
  PointCloud c;
  for (int i = 0; i < 5000; ++i) c.push_back({u(rng), 0.0, u(rng)});
  EXPECT_TRUE(detect_vertical_lines(project_to_floor(c, 0.25), c).empty());
}

TEST(DetectVerticalLines, SparsePoleRejected) {
  PointCloud c;
  add_pole(c, 1, 1, 2);
  LineExtractionConfig cfg;
  cfg.min_support = 10;
  EXPECT_TRUE(detect_vertical_lines(project_to_floor(c, cfg.cell_size), c, cfg).empty());
}

TEST(DetectVerticalLines, SimulatorRecallAndPrecision) {
  const LineExtractionConfig cfg;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    SimConfig sc;
    sc.set_seed(seed);
    const SimOutput sim = simulate(sc);
    int found = 0, total = 0;
    for (const PoseObservation& obs : sim.observations) {
      const Rigid3& pose = sim.trajectory.poses[obs.pose_id];
      const auto cand = detect_vertical_lines(project_to_floor(obs.cloud, cfg.cell_size), obs.cloud, cfg);
      for (const VerticalLine3D& gt : lines_in_lidar_frame(sim.scene, pose)) {
        ++total;
        found += has_candidate_near(cand, gt.x, gt.z, cfg.cell_size);
      }
      // Every candidate lies near a pole or a wall.
      for (const VerticalLine3D& l : cand) {
        const Vec3 w = pose.apply(l.point_at(l.mid_height()));
        const Vec2 p(w.x(), w.z());
        double d = 1e9;
        for (const Pole& pole : sim.scene.poles) d = std::min(d, std::hypot(pole.x - p.x(), pole.z - p.y()));
        for (const WallSegment& wall : sim.scene.spec.walls) d = std::min(d, point_segment(p, wall.a, wall.b));
        EXPECT_LE(d, 2 * cfg.cell_size) << "seed " << seed << " pose " << obs.pose_id;
      }
    }
    EXPECT_GE(found, 0.9 * total) << "seed " << seed;
  }
}

TEST(DetectVerticalLines, PoleCenterFromRingIsExact) {
  // A pole of radius 5 cm scanned at random azimuths, on a sparse floor.
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> phi(0.0, 2.0 * kPi), h(0.0, 2.5), f(0.0, 4.0);
  PointCloud c;
  const double px = 1.93, pz = 2.07;
  for (int i = 0; i < 400; ++i) {
    const double a = phi(rng);
    c.push_back({px + 0.05 * std::cos(a), h(rng), pz + 0.05 * std::sin(a)});
  }
  for (int i = 0; i < 300; ++i) c.push_back({f(rng), 0.0, f(rng)});
  const auto cand = detect_vertical_lines(project_to_floor(c, 0.25), c);
  ASSERT_EQ(cand.size(), 1u);
  EXPECT_NEAR(cand[0].x, px, 1e-9);
  EXPECT_NEAR(cand[0].z, pz, 1e-9);
}

TEST(DetectVerticalLines, CornerOfNoiseFreeWallsIsExact) {
  PointCloud c;
  add_wall(c, {3, 4}, {-1, 4});
  add_wall(c, {3, 4}, {3, 0});
  LineExtractionConfig cfg;
  cfg.detector_mode = DetectorMode::kSegmentEndpoints;
  const auto cand = detect_vertical_lines(project_to_floor(c, cfg.cell_size), c, cfg);
  double best = 1e9;
  for (const VerticalLine3D& l : cand) best = std::min(best, std::hypot(l.x - 3.0, l.z - 4.0));
  EXPECT_LT(best, 1e-9);
}

TEST(DetectVerticalLines, OneCandidatePerLine) {
  const LineExtractionConfig cfg;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    SimConfig sc;
    sc.set_seed(seed);
    const SimOutput sim = simulate(sc);
    for (const PoseObservation& obs : sim.observations) {
      const auto cand = detect_vertical_lines(project_to_floor(obs.cloud, cfg.cell_size), obs.cloud, cfg);
      for (std::size_t i = 0; i < cand.size(); ++i) {
        for (std::size_t j = i + 1; j < cand.size(); ++j) {
          EXPECT_GE(std::hypot(cand[i].x - cand[j].x, cand[i].z - cand[j].z), cfg.cell_size);
        }
      }
    }
  }
}

TEST(VerticalDirection, LevelCamera) {
  const CameraIntrinsics K;
  const VerticalLine3D l{0.5, -4.0, 0.0, 2.0, 0};
  const Vec2 d = vertical_direction_in_image(K, level_camera(), l);
  EXPECT_NEAR(std::abs(d.y()), 1.0, 1e-3);
  EXPECT_NEAR(d.norm(), 1.0, 1e-12);
}

TEST(VerticalDirection, RolledCamera) {
  const CameraIntrinsics K;
  const Rigid3 T{level_camera().rotation * Quat::from_axis_angle({0, 0, 1}, kPi / 2), Vec3::Zero()};
  const VerticalLine3D l{0.3, -5.0, -0.5, 1.5, 0};
  const Vec2 d = vertical_direction_in_image(K, T, l);
  EXPECT_NEAR(std::abs(d.x()), 1.0, 1e-3);
}

TEST(VerticalDirection, SwapHeightsFlipsSign) {
  const CameraIntrinsics K;
  const Rigid3 T = SimConfig::default_extrinsic();
  VerticalLine3D l{-1.0, -3.0, 0.2, 2.4, 0};
  // Put the line in front of the default camera.
  const Vec3 ahead = T.apply({0.5, 0.0, 4.0});
  l.x = ahead.x();
  l.z = ahead.z();
  const Vec2 a = vertical_direction_in_image(K, T, l);
  std::swap(l.y_min, l.y_max);
  const Vec2 b = vertical_direction_in_image(K, T, l);
  EXPECT_LT((a + b).norm(), 1e-12);
}

TEST(VerticalDirection, FarFieldAgreesBeyondFiveMeters) {
  const CameraIntrinsics K;
  const Rigid3 T = SimConfig::default_extrinsic();
  const Vec2 far = vertical_direction_far_field(K, T);
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(-0.3, 0.3), depth(5.5, 12.0);
  for (int i = 0; i < 200; ++i) {
    const double d = depth(rng);
    const Vec3 p = T.apply({u(rng) * d, 0.0, d});
    const VerticalLine3D l{p.x(), p.z(), 0.0, 2.0, 0};
    const Vec2 exact = vertical_direction_in_image(K, T, l);
    const double angle = std::acos(std::min(1.0, std::abs(exact.dot(far))));
    EXPECT_LT(angle, deg_to_rad(2.0));
  }
}

TEST(FilterSegments2d, Examples) {
  const Segment2D vertical{{100, 10}, {101, 200}};
  const Segment2D diagonal{{0, 0}, {100, 100}};
  const Segment2D flipped{vertical.p1, vertical.p0};
  const auto kept = filter_segments_2d({vertical, diagonal, flipped}, {0, 1}, deg_to_rad(5.0));
  ASSERT_EQ(kept.size(), 2u);
  EXPECT_EQ(kept[0].p0, vertical.p0);
  EXPECT_EQ(kept[1].p0, flipped.p0);
  EXPECT_EQ(filter_segments_2d(kept, {0, 1}, deg_to_rad(5.0)).size(), 2u);
}

TEST(SegmentAngle, AcuteAndSymmetric) {
  const Segment2D s{{0, 0}, {1, 1}};
  EXPECT_NEAR(segment_angle_to(s, {0, 1}), kPi / 4, 1e-12);
  EXPECT_NEAR(segment_angle_to(s, {0, -1}), kPi / 4, 1e-12);
}

TEST(FovFilter, Examples) {
  const CameraIntrinsics K;
  const Rigid3 T = Rigid3::identity();  // camera y runs along the lidar vertical
  const VerticalLine3D centered{0.0, 4.0, -1.0, 1.0, 0};
  const VerticalLine3D behind{0.0, -4.0, -1.0, 1.0, 0};
  // u = 320 + 500 x / 4 = -2
  const VerticalLine3D outside{-322.0 * 4.0 / 500.0, 4.0, -1.0, 1.0, 0};
  EXPECT_TRUE(in_fov(centered, K, T, 0.0));
  EXPECT_FALSE(in_fov(behind, K, T, 5.0));
  EXPECT_TRUE(in_fov(outside, K, T, 5.0));
  EXPECT_FALSE(in_fov(outside, K, T, 0.0));
  const auto kept = fov_filter({centered, behind, outside}, K, T, 5.0);
  ASSERT_EQ(kept.size(), 2u);
  EXPECT_EQ(kept[0].z, centered.z);
  EXPECT_EQ(kept[1].x, outside.x);
  EXPECT_EQ(fov_filter(kept, K, T, 5.0).size(), 2u);
}
