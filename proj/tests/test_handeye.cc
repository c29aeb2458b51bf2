#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "xcal/handeye.h"
#include "xcal/simulate.h"

using namespace xcal;

namespace {

Quat random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  return Quat{n(rng), n(rng), n(rng), n(rng)}.normalized();
}

Vec3 random_vec(std::mt19937_64& rng, double s) {
  std::uniform_real_distribution<double> u(-s, s);
  return {u(rng), u(rng), u(rng)};
}

struct Motions {
  std::vector<Rigid3> lidar;
  std::vector<CameraMotion> cam;
};

// Noise-free consecutive motions: C = T^-1 L T.
Motions exact_motions(const Rigid3& T, int n_motions, std::mt19937_64& rng) {
  Motions m;
  for (int k = 0; k < n_motions; ++k) {
    const Vec3 axis = random_vec(rng, 1.0).normalized();
    const double angle = deg_to_rad(15.0 + 25.0 * (k % 3) / 2.0);
    const Rigid3 L{Quat::from_axis_angle(axis, angle), random_vec(rng, 1.0)};
    const Rigid3 C = T.inverse() * L * T;
    m.lidar.push_back(L);
    m.cam.push_back({C.rotation, C.translation.normalized()});
  }
  return m;
}

MotionPair pair_with(const Quat& ql, const Quat& qc) {
  MotionPair p;
  p.lidar_motion.rotation = ql;
  p.cam_rotation = qc;
  return p;
}

const Rigid3 kGt{Quat{0.9, -0.2, 0.3, 0.25}.normalized(), Vec3(0.4224, 0.6745, -0.4616)};

}  // namespace

TEST(BuildPairs, Counts) {
  std::mt19937_64 rng(1);
  EXPECT_EQ(build_pairs(exact_motions(kGt, 1, rng).lidar, exact_motions(kGt, 1, rng).cam).size(), 1u);
  const Motions m3 = exact_motions(kGt, 2, rng);
  const auto p3 = build_pairs(m3.lidar, m3.cam);
  ASSERT_EQ(p3.size(), 3u);
  EXPECT_EQ(std::make_pair(p3[0].pose_i, p3[0].pose_j), std::make_pair(0, 1));
  EXPECT_EQ(std::make_pair(p3[1].pose_i, p3[1].pose_j), std::make_pair(1, 2));
  EXPECT_EQ(std::make_pair(p3[2].pose_i, p3[2].pose_j), std::make_pair(0, 2));
  const Motions m10 = exact_motions(kGt, 9, rng);
  EXPECT_EQ(build_pairs(m10.lidar, m10.cam).size(), 45u);
}

TEST(BuildPairs, ValidOnlyForConsecutivePairs) {
  std::mt19937_64 rng(2);
  const Motions m = exact_motions(kGt, 4, rng);
  for (const MotionPair& p : build_pairs(m.lidar, m.cam)) {
    EXPECT_EQ(p.valid, p.pose_j - p.pose_i == 1);
    EXPECT_NEAR(p.cam_translation_dir.norm(), 1.0, 1e-9);
  }
}

TEST(BuildPairs, LengthMismatch) {
  std::mt19937_64 rng(3);
  Motions m = exact_motions(kGt, 3, rng);
  m.cam.pop_back();
  EXPECT_THROW(build_pairs(m.lidar, m.cam), Error);
}

TEST(BuildPairs, ComposedRotationsSatisfyConjugation) {
  std::mt19937_64 rng(4);
  const Motions m = exact_motions(kGt, 5, rng);
  for (const MotionPair& p : build_pairs(m.lidar, m.cam)) {
    const Quat expect = (kGt.rotation.conjugate() * p.lidar_motion.rotation * kGt.rotation);
    EXPECT_LT(rotation_error(expect.normalized(), p.cam_rotation), 1e-9);
  }
}

TEST(RotationDesignMatrix, ShapeAndZeroBlock) {
  const Quat q = Quat::from_axis_angle({0, 1, 0}, 0.3);
  const std::vector<MotionPair> pairs{pair_with(q, q), pair_with(q, q), pair_with(q, q)};
  const Eigen::MatrixXd A = rotation_design_matrix(pairs);
  EXPECT_EQ(A.rows(), 12);
  EXPECT_EQ(A.cols(), 4);
  // Equal rotations: L(q) - R(q) keeps only 2[v]x in the lower-right block.
  EXPECT_TRUE(A.col(0).isZero(0.0));
  EXPECT_TRUE(A.row(0).isZero(0.0));
  EXPECT_NEAR(A(1, 3), 2.0 * q.y, 1e-15);
  EXPECT_THROW(rotation_design_matrix({}), Error);
}

TEST(RotationDesignMatrix, NullSpaceContainsTruth) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const Rigid3 T{random_unit(rng), random_vec(rng, 1.0)};
    const Motions m = exact_motions(T, 6, rng);
    const Eigen::MatrixXd A = rotation_design_matrix(build_pairs(m.lidar, m.cam));
    EXPECT_LT((A * T.rotation.coeffs()).norm(), 1e-12 * A.norm());
  }
}

TEST(SolveRotation, RecoversTruthNoiseFree) {
  std::mt19937_64 rng(6);
  const Motions m = exact_motions(kGt, 3, rng);
  auto pairs = build_pairs(m.lidar, m.cam);
  pairs.resize(5);
  const RotationSolution s = solve_rotation(pairs);
  EXPECT_LT(rotation_error(s.rotation, kGt.rotation), 1e-9);
  EXPECT_LT(s.residual, 1e-9);
}

TEST(SolveRotation, PermutationInvariant) {
  std::mt19937_64 rng(7);
  const Motions m = exact_motions(kGt, 5, rng);
  auto pairs = build_pairs(m.lidar, m.cam);
  // Perturb so the solution is not exact and order could matter.
  for (MotionPair& p : pairs) {
    p.cam_rotation = (p.cam_rotation * Quat::from_rotation_vector(random_vec(rng, 0.01))).normalized();
  }
  const Quat a = solve_rotation(pairs).rotation;
  std::reverse(pairs.begin(), pairs.end());
  const Quat b = solve_rotation(pairs).rotation;
  EXPECT_LT((a.coeffs() - b.coeffs()).norm(), 1e-10);
}

TEST(SolveRotation, DegenerateInputs) {
  const std::vector<MotionPair> trans{pair_with({}, {}), pair_with({}, {})};
  EXPECT_THROW(solve_rotation(trans), DegenerateMotionError);
  std::vector<MotionPair> one_axis;
  for (double deg : {10.0, 25.0, 40.0}) {
    const Quat q = Quat::from_axis_angle({0, 1, 0}, deg_to_rad(deg));
    one_axis.push_back(pair_with(q, q));
  }
  try {
    solve_rotation(one_axis);
    FAIL() << "expected a degeneracy error";
  } catch (const DegenerateMotionError& e) {
    EXPECT_TRUE(e.report().single_axis);
    EXPECT_FALSE(e.report().pure_translation);
  }
}

TEST(CheckDegeneracy, Examples) {
  const std::vector<MotionPair> trans{pair_with({}, {}), pair_with({}, {})};
  const DegeneracyReport a = check_degeneracy(trans, deg_to_rad(1.0), 0.1);
  EXPECT_TRUE(a.pure_translation);
  EXPECT_FALSE(a.single_axis);

  std::vector<MotionPair> one_axis;
  for (double deg : {10.0, 25.0, 40.0}) {
    const Quat q = Quat::from_axis_angle({0, 0, 1}, deg_to_rad(deg));
    one_axis.push_back(pair_with(q, q));
  }
  const DegeneracyReport b = check_degeneracy(one_axis, deg_to_rad(1.0), 0.1);
  EXPECT_FALSE(b.pure_translation);
  EXPECT_TRUE(b.single_axis);

  const Quat qx = Quat::from_axis_angle({1, 0, 0}, deg_to_rad(20.0));
  const Quat qy = Quat::from_axis_angle({0, 1, 0}, deg_to_rad(20.0));
  const DegeneracyReport c = check_degeneracy({pair_with(qx, qx), pair_with(qy, qy)},
                                              deg_to_rad(1.0), 0.1);
  EXPECT_FALSE(c.degenerate());
  EXPECT_NEAR(c.axis_spread, 1.0, 1e-12);
  EXPECT_NEAR(c.max_pair_angle, deg_to_rad(20.0), 1e-12);
}

TEST(CheckDegeneracy, SpreadDoesNotGrowWithPairCount) {
  // Axes within about a degree of z: single-axis however many pairs there are.
  std::mt19937_64 rng(12);
  std::normal_distribution<double> tilt(0.0, deg_to_rad(0.5));
  std::uniform_real_distribution<double> angle(deg_to_rad(5.0), deg_to_rad(60.0));
  for (int n : {3, 30, 300}) {
    std::vector<MotionPair> pairs;
    for (int k = 0; k < n; ++k) {
      const Vec3 axis = Vec3(tilt(rng), tilt(rng), 1.0).normalized();
      const Quat q = Quat::from_axis_angle(axis, angle(rng));
      pairs.push_back(pair_with(q, q));
    }
    const DegeneracyReport r = check_degeneracy(pairs, deg_to_rad(1.0), 0.1);
    EXPECT_TRUE(r.single_axis) << n << " pairs, spread " << r.axis_spread;
    EXPECT_LT(r.axis_spread, 0.05);
  }
}

TEST(FilterPairs, Examples) {
  const Vec3 axis(0, 1, 0);
  const auto with_angles = [&](double l, double c) {
    return pair_with(Quat::from_axis_angle(axis, deg_to_rad(l)),
                     Quat::from_axis_angle(axis, deg_to_rad(c)));
  };
  const std::vector<MotionPair> pairs{with_angles(30, 30.2), with_angles(30, 37),
                                      with_angles(12, 12)};
  const auto kept = filter_pairs(pairs, deg_to_rad(1.0));
  ASSERT_EQ(kept.size(), 2u);
  EXPECT_EQ(kept[0].cam_rotation.coeffs(), pairs[0].cam_rotation.coeffs());
  EXPECT_EQ(kept[1].cam_rotation.coeffs(), pairs[2].cam_rotation.coeffs());
}

TEST(FilterPairs, KeepsAllExactPairs) {
  std::mt19937_64 rng(8);
  const Motions m = exact_motions(kGt, 8, rng);
  const auto pairs = build_pairs(m.lidar, m.cam);
  EXPECT_EQ(filter_pairs(pairs, 1e-6).size(), pairs.size());
}

TEST(SolveTranslation, MinimalCaseExact) {
  std::mt19937_64 rng(9);
  const Motions m = exact_motions(kGt, 2, rng);
  auto pairs = build_pairs(m.lidar, m.cam);
  pairs.resize(2);  // the two consecutive pairs
  const TranslationSolution s = solve_translation_scale(pairs, kGt.rotation);
  EXPECT_LT((s.translation - kGt.translation).norm(), 1e-9);
  ASSERT_EQ(s.scales.size(), 2u);
  for (int k = 0; k < 2; ++k) {
    const Rigid3 C = kGt.inverse() * m.lidar[k] * kGt;
    EXPECT_NEAR(s.scales[k], C.translation.norm(), 1e-9);
  }
}

TEST(SolveTranslation, SinglePairIsRankError) {
  std::mt19937_64 rng(10);
  const Motions m = exact_motions(kGt, 1, rng);
  EXPECT_THROW(solve_translation_scale(build_pairs(m.lidar, m.cam), kGt.rotation), Error);
}

TEST(SolveTranslation, IdentityExtrinsic) {
  std::mt19937_64 rng(11);
  const Motions m = exact_motions(Rigid3::identity(), 4, rng);
  const TranslationSolution s =
      solve_translation_scale(build_pairs(m.lidar, m.cam), Quat::identity());
  EXPECT_LT(s.translation.norm(), 1e-9);
  for (std::size_t k = 0; k < s.scales.size(); ++k) {
    EXPECT_NEAR(s.scales[k], m.lidar[s.pair_ids[k]].translation.norm(), 1e-9);
  }
}

TEST(SolveTranslation, ParallelDirectionsAreRankDeficient) {
  // Pure translations along one direction leave t unconstrained.
  std::vector<MotionPair> pairs;
  for (int k = 0; k < 3; ++k) {
    MotionPair p;
    p.id = k;
    p.lidar_motion.translation = Vec3(1.0 + k, 0, 0);
    p.cam_translation_dir = Vec3(1, 0, 0);
    pairs.push_back(p);
  }
  EXPECT_THROW(solve_translation_scale(pairs, Quat::identity()), RankError);
}

TEST(SolveTranslation, ResidualGrowsWithNoise) {
  std::vector<double> medians;
  for (double sigma : {0.0, 0.01, 0.05}) {
    std::vector<double> rms;
    for (int seed = 0; seed < 20; ++seed) {
      TrajectorySpec spec;
      spec.lidar_rot_noise = 0;
      spec.lidar_trans_noise = sigma;
      spec.cam_rot_noise = 0;
      spec.cam_dir_noise = 0;
      spec.cam_corrupt_fraction = 0;
      spec.rng_seed = 100 + seed;
      const Trajectory tr = generate_trajectory(spec);
      const auto pairs = make_motion_pairs(tr.poses, kGt, spec);
      rms.push_back(solve_translation_scale(pairs, kGt.rotation).rms);
    }
    std::nth_element(rms.begin(), rms.begin() + 10, rms.end());
    medians.push_back(rms[10]);
  }
  EXPECT_LT(medians[0], 1e-9);
  EXPECT_LT(medians[0], medians[1]);
  EXPECT_LT(medians[1], medians[2]);
}

TEST(InitCalibrate, ZeroNoiseTenPoses) {
  std::mt19937_64 rng(12);
  const Motions m = exact_motions(kGt, 9, rng);
  const InitResult r = init_calibrate(build_pairs(m.lidar, m.cam));
  EXPECT_LT(rotation_error(r.extrinsic.rotation, kGt.rotation), 1e-9);
  EXPECT_LT((r.extrinsic.translation - kGt.translation).norm(), 1e-9);
  EXPECT_EQ(r.retained_pair_ids.size(), 45u);
  EXPECT_EQ(r.scales.size(), r.scale_pair_ids.size());
  for (double s : r.scales) EXPECT_GT(s, 0.0);
}

TEST(InitCalibrate, TooFewRetainedPairs) {
  const Quat a = Quat::from_axis_angle({1, 0, 0}, deg_to_rad(20));
  const Quat b = Quat::from_axis_angle({1, 0, 0}, deg_to_rad(30));
  // Every pair disagrees in angle by 10 degrees.
  EXPECT_THROW(init_calibrate({pair_with(a, b), pair_with(b, a)}), InsufficientPairsError);
}
