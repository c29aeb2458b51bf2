#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "xcal/refine.h"
#include "xcal/simulate.h"

using namespace xcal;

namespace {

SimConfig zero_noise(int n_poses = 10, std::uint64_t seed = 1) {
  SimConfig c;
  c.set_seed(seed);
  c.scene.point_noise = 0;
  c.trajectory.n_poses = n_poses;
  c.trajectory.lidar_rot_noise = 0;
  c.trajectory.lidar_trans_noise = 0;
  c.trajectory.cam_rot_noise = 0;
  c.trajectory.cam_dir_noise = 0;
  c.trajectory.cam_corrupt_fraction = 0;
  c.camera.noise_px = 0;
  c.camera.outlier_fraction = 0;
  c.camera.miss_rate = 0;
  return c;
}

// Matches of the exact ground-truth lines against exact segments.
std::vector<LineMatch> exact_matches(const SimOutput& sim) {
  std::vector<LineMatch> all;
  for (const PoseObservation& obs : sim.observations) {
    const auto lines = lines_in_lidar_frame(sim.scene, sim.trajectory.poses[obs.pose_id]);
    const auto m = match_lines(lines, obs.segments, sim.ground_truth_extrinsic, sim.K, {}, obs.pose_id);
    all.insert(all.end(), m.begin(), m.end());
  }
  return all;
}

}  // namespace

TEST(PointLineResidual, Examples) {
  const CameraIntrinsics K;
  const VerticalLine3D c{0.0, 4.0, -1.0, 1.0, 0};
  const Rigid3 T = Rigid3::identity();
  Line2D on{1.0, 0.0, -320.0, true};
  EXPECT_NEAR(point_line_residual(on, c, 0.5, T, K), 0.0, 1e-12);
  Line2D off{1.0, 0.0, -330.0, true};
  EXPECT_NEAR(point_line_residual(off, c, 0.5, T, K), -10.0, 1e-12);
  Line2D flipped{-1.0, 0.0, 330.0, true};
  EXPECT_NEAR(point_line_residual(flipped, c, 0.5, T, K), 10.0, 1e-12);
}

TEST(PointLineResidual, Errors) {
  const CameraIntrinsics K;
  const VerticalLine3D c{0.0, -4.0, -1.0, 1.0, 0};
  EXPECT_THROW(point_line_residual({1, 0, 0, true}, c, 0.0, Rigid3::identity(), K), BehindCameraError);
  EXPECT_THROW(point_line_residual({2, 0, 0, false}, {0, 4, -1, 1, 0}, 0.0, Rigid3::identity(), K),
               GeometryError);
}

TEST(HuberWeight, Examples) {
  EXPECT_EQ(huber_weight(2.0, 3.0), 1.0);
  EXPECT_EQ(huber_weight(6.0, 3.0), 0.5);
  EXPECT_EQ(huber_weight(-6.0, 3.0), 0.5);
  EXPECT_EQ(huber_weight(0.0, 3.0), 1.0);
  EXPECT_EQ(huber_loss(2.0, 3.0), 2.0);
  EXPECT_EQ(huber_loss(6.0, 3.0), 13.5);
}

TEST(MatchLines, GroundTruthIsPerfectLabeledMatching) {
  const SimOutput sim = simulate(zero_noise());
  int total = 0;
  for (const PoseObservation& obs : sim.observations) {
    const auto lines = lines_in_lidar_frame(sim.scene, sim.trajectory.poses[obs.pose_id]);
    const auto m = match_lines(lines, obs.segments, sim.ground_truth_extrinsic, sim.K, {}, obs.pose_id);
    EXPECT_EQ(m.size(), obs.segments.size()) << "pose " << obs.pose_id;
    for (const LineMatch& x : m) {
      EXPECT_EQ(obs.segment_labels[x.segment_index], x.candidate_index);
      EXPECT_LT(std::abs(x.residual), 1e-6);
      ++total;
    }
  }
  EXPECT_GT(total, 10);
}

TEST(MatchLines, FarOutlierNeverMatched) {
  const SimOutput sim = simulate(zero_noise());
  const PoseObservation& obs = sim.observations.front();
  const auto lines = lines_in_lidar_frame(sim.scene, sim.trajectory.poses[obs.pose_id]);
  std::vector<Segment2D> segs = obs.segments;
  segs.push_back({{5, 5}, {5.5, 60}});  // near-vertical, far from every projection
  const auto m = match_lines(lines, segs, sim.ground_truth_extrinsic, sim.K);
  for (const LineMatch& x : m) EXPECT_NE(x.segment_index, static_cast<int>(segs.size()) - 1);
}

// A few centimetres of init error shifts projections by several pixels; most
// matches must survive and stay correct.
TEST(MatchLines, SmallInitErrorKeepsCorrectMatches) {
  int total = 0, wrong = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    SimConfig c;
    c.set_seed(seed);
    c.camera.outlier_fraction = 0;
    const SimOutput sim = simulate(c);
    Rigid3 T0 = sim.ground_truth_extrinsic;
    T0.translation += Vec3(0.03, 0.0, 0.0);
    const LineExtractionConfig ec;
    for (const PoseObservation& obs : sim.observations) {
      const auto cand = detect_vertical_lines(project_to_floor(obs.cloud, ec.cell_size), obs.cloud, ec);
      for (const LineMatch& m : match_lines(cand, obs.segments, T0, sim.K, {}, obs.pose_id)) {
        const int gt = nearest_ground_truth_line(sim.scene, sim.trajectory.poses[obs.pose_id],
                                                 m.candidate, ec.cell_size);
        ++total;
        wrong += obs.segment_labels[m.segment_index] != gt;
      }
    }
  }
  EXPECT_GT(total, 150);
  EXPECT_LT(wrong, 0.05 * total);
}

TEST(RefineTranslation, RecoversFromHorizontalPerturbation) {
  const SimOutput sim = simulate(zero_noise());
  const auto matches = exact_matches(sim);
  const Rigid3& gt = sim.ground_truth_extrinsic;
  const Vec3 t0 = gt.translation + Vec3(0.2 / std::sqrt(2.0), 0.0, 0.2 / std::sqrt(2.0));
  const RefineResult r = refine_translation(matches, gt.rotation, t0, sim.K);
  EXPECT_LT((r.translation - gt.translation).norm(), 1e-6);
  EXPECT_LE(r.iterations, 10);
  EXPECT_TRUE(r.converged);
}

TEST(RefineTranslation, VerticalComponentKeepsInitialValue) {
  const SimOutput sim = simulate(zero_noise());
  const Rigid3& gt = sim.ground_truth_extrinsic;
  const Vec3 t0 = gt.translation + Vec3(0.05, 0.1, -0.05);
  const RefineResult r = refine_translation(exact_matches(sim), gt.rotation, t0, sim.K);
  EXPECT_EQ(r.translation.y(), t0.y());
  EXPECT_LT(std::hypot(r.translation.x() - gt.translation.x(), r.translation.z() - gt.translation.z()), 1e-6);
}

TEST(RefineTranslation, StartAtTruthStaysThere) {
  const SimOutput sim = simulate(zero_noise());
  const Rigid3& gt = sim.ground_truth_extrinsic;
  const RefineResult r = refine_translation(exact_matches(sim), gt.rotation, gt.translation, sim.K);
  EXPECT_LT((r.translation - gt.translation).norm(), 1e-9);
}

TEST(RefineTranslation, Errors) {
  EXPECT_THROW(refine_translation({}, Quat::identity(), Vec3::Zero(), {}), GeometryError);
  const SimOutput sim = simulate(zero_noise());
  auto m = exact_matches(sim);
  m.resize(2);
  EXPECT_THROW(refine_translation(m, sim.ground_truth_extrinsic.rotation,
                                  sim.ground_truth_extrinsic.translation, sim.K),
               GeometryError);
}

TEST(RefineTranslation, ObjectiveNonIncreasingOnInliers) {
  SimConfig c = zero_noise();
  c.camera.noise_px = 0.5;
  const SimOutput sim = simulate(c);
  const Rigid3& gt = sim.ground_truth_extrinsic;
  for (PenaltyMode mode : {PenaltyMode::kOls, PenaltyMode::kHuber}) {
    RefineConfig rc;
    rc.penalty_mode = mode;
    const RefineResult r = refine_translation(exact_matches(sim), gt.rotation,
                                              gt.translation + Vec3(0.15, 0, -0.1), sim.K, rc);
    ASSERT_GE(r.objective_history.size(), 2u);
    for (std::size_t i = 1; i < r.objective_history.size(); ++i) {
      EXPECT_LE(r.objective_history[i], r.objective_history[i - 1] + 1e-12)
          << i << " " << r.objective_history[i] - r.objective_history[i - 1];
    }
  }
}

TEST(RefineTranslation, HuberEqualsOlsWhenAllResidualsSmall) {
  SimConfig c = zero_noise();
  c.camera.noise_px = 0.3;
  const SimOutput sim = simulate(c);
  const Rigid3& gt = sim.ground_truth_extrinsic;
  const auto matches = exact_matches(sim);
  RefineConfig ols, hub;
  ols.penalty_mode = PenaltyMode::kOls;
  hub.huber_M = 50.0;  // every residual stays inside
  const Vec3 t0 = gt.translation + Vec3(0.01, 0, 0.01);
  const RefineResult a = refine_translation(matches, gt.rotation, t0, sim.K, ols);
  const RefineResult b = refine_translation(matches, gt.rotation, t0, sim.K, hub);
  EXPECT_LT((a.translation - b.translation).norm(), 1e-10);
  EXPECT_EQ(b.inlier_fraction, 1.0);
}

TEST(FrozenDepthRow, MatchesFiniteDifference) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1, 1);
  const CameraIntrinsics K;
  const Rigid3 T = SimConfig::default_extrinsic();
  for (int i = 0; i < 200; ++i) {
    const Vec3 pc(u(rng), u(rng), 3.0 + 2.0 * std::abs(u(rng)));
    const Vec3 p = T.apply(pc);
    const Line2D line = segment_to_line({{u(rng) * 300 + 320, 0}, {u(rng) * 300 + 320, 480}});
    const Vec3 t = T.translation + Vec3(u(rng), u(rng), u(rng)) * 0.05;
    const double depth = T.rotation.conjugate().rotate(p - t).z();
    const ResidualRow row = frozen_depth_row(line, p, T.rotation, depth, K);
    // Residual with depth frozen, evaluated directly.
    const auto frozen = [&](const Vec3& tt) {
      const Vec3 q = K.matrix() * T.rotation.conjugate().rotate(p - tt);
      return (line.w0 * q.x() + line.w1 * q.y() + line.w2 * q.z()) / depth;
    };
    EXPECT_NEAR(row.a.dot(t) + row.b, frozen(t), 1e-9);
    const double h = 1e-6;
    for (int k = 0; k < 3; ++k) {
      Vec3 dp = t, dm = t;
      dp[k] += h;
      dm[k] -= h;
      const double fd = (frozen(dp) - frozen(dm)) / (2 * h);
      EXPECT_NEAR(row.a[k], fd, 1e-6 * std::max(1.0, std::abs(fd)));
    }
  }
}

TEST(FrozenDepthRow, EqualsFullJacobianOnTheLine) {
  // Where the residual vanishes the depth derivative term drops out, so the
  // frozen row is the true gradient of the perspective residual.
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-1, 1);
  const CameraIntrinsics K;
  const Rigid3 T = SimConfig::default_extrinsic();
  for (int i = 0; i < 200; ++i) {
    const Vec3 p = T.apply({u(rng), u(rng), 3.0 + 2.0 * std::abs(u(rng))});
    const Projection pr = project_point(K, T, p);
    const Line2D line = segment_to_line({pr.pixel, pr.pixel + Vec2(u(rng) * 20, 100)});
    const ResidualRow row = frozen_depth_row(line, p, T.rotation, pr.depth, K);
    const auto full = [&](const Vec3& tt) {
      return line.eval(project_point(K, {T.rotation, tt}, p).pixel);
    };
    const double h = 1e-6;
    for (int k = 0; k < 3; ++k) {
      Vec3 dp = T.translation, dm = T.translation;
      dp[k] += h;
      dm[k] -= h;
      const double fd = (full(dp) - full(dm)) / (2 * h);
      EXPECT_NEAR(row.a[k], fd, 1e-6 * std::max(1.0, std::abs(fd)));
    }
  }
}

TEST(ErrorRatio, TableTwoRows) {
  const Vec3 gt(0.4224, 0.6745, -0.4616);
  const TranslationError best = error_ratio({0.4322, 0.6734, -0.4675}, gt);
  EXPECT_NEAR(best.error, 0.0115, 0.0005);
  EXPECT_NEAR(100 * best.ratio, 1.25, 0.05);
  const TranslationError worst = error_ratio({0.3992, 0.1861, -0.3964}, gt);
  EXPECT_NEAR(worst.error, 0.4932, 0.0005);
  EXPECT_NEAR(100 * worst.ratio, 53.60, 0.05);
  const TranslationError same = error_ratio(gt, gt);
  EXPECT_EQ(same.error, 0.0);
  EXPECT_EQ(same.ratio, 0.0);
  EXPECT_THROW(error_ratio(gt, Vec3::Zero()), Error);
}
