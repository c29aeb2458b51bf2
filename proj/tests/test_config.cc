#include <gtest/gtest.h>

#include "xcal/config.h"

using namespace xcal;
using nlohmann::json;

TEST(Config, DefaultsRoundTripThroughJson) {
  SimulateSettings a;
  SimulateSettings b;
  apply_settings(to_json(a), b);
  EXPECT_EQ(to_json(a), to_json(b));
  CalibrateSettings c, d;
  apply_settings(to_json(c), d);
  EXPECT_EQ(to_json(c), to_json(d));
}

TEST(Config, AnglesInDegrees) {
  CalibrateSettings c;
  EXPECT_DOUBLE_EQ(to_json(c)["angle_tolerance_deg"].get<double>(), 1.0);
  apply_settings(json{{"angle_tolerance_deg", 2.5}}, c);
  EXPECT_DOUBLE_EQ(c.init.angle_tolerance, deg_to_rad(2.5));
}

TEST(Config, NestedAndDottedKeysAgree) {
  SimulateSettings a, b;
  apply_settings(json{{"trajectory", {{"n_poses", 12}}}, {"camera", {{"noise_px", 0.25}}}}, a);
  apply_settings(json{{"trajectory.n_poses", 12}, {"camera.noise_px", 0.25}}, b);
  EXPECT_EQ(a.sim.trajectory.n_poses, 12);
  EXPECT_EQ(to_json(a), to_json(b));
}

TEST(Config, Errors) {
  SimulateSettings s;
  EXPECT_THROW(apply_settings(json{{"trajectory.n_pose", 5}}, s), ConfigError);
  EXPECT_THROW(apply_settings(json{{"trajectory.n_poses", 5.5}}, s), ConfigError);
  EXPECT_THROW(apply_settings(json{{"camera.outlier_mode", "sometimes"}}, s), ConfigError);
  EXPECT_THROW(apply_settings(json{{"extrinsic.q", {1, 1, 0, 0}}}, s), ConfigError);
  CalibrateSettings c;
  EXPECT_THROW(apply_settings(json{{"penalty", "l1"}}, c), ConfigError);
  EXPECT_THROW(apply_settings(json{{"huber_M", "three"}}, c), ConfigError);
  EXPECT_THROW(parse_assignment("novalue"), ConfigError);
}

TEST(Config, Assignments) {
  EXPECT_EQ(parse_assignment("trajectory.n_poses=2"), (json{{"trajectory.n_poses", 2}}));
  EXPECT_EQ(parse_assignment("penalty=ols"), (json{{"penalty", "ols"}}));
  EXPECT_EQ(parse_assignment("scene.walls=false"), (json{{"scene.walls", false}}));
  EXPECT_EQ(parse_assignment("extrinsic.t=[1,2,3]"), (json{{"extrinsic.t", {1, 2, 3}}}));
}

TEST(Config, SeedDerivesGeneratorSeeds) {
  SimulateSettings a, b;
  a.seed = 7;
  b.seed = 8;
  EXPECT_NE(a.resolved().scene.rng_seed, b.resolved().scene.rng_seed);
  EXPECT_EQ(a.resolved().trajectory.rng_seed, SimulateSettings{a}.resolved().trajectory.rng_seed);
}

TEST(Config, WallsFollowExtent) {
  SimulateSettings s;
  apply_settings(json{{"scene.x_max", 8.0}}, s);
  ASSERT_EQ(s.sim.scene.walls.size(), 4u);
  EXPECT_EQ(s.sim.scene.walls[0].b.x(), 8.0);
  apply_settings(json{{"scene.walls", false}}, s);
  EXPECT_TRUE(s.sim.scene.walls.empty());
}

TEST(Config, EnumNames) {
  EXPECT_STREQ(to_string(PenaltyMode::kHuber), "huber");
  EXPECT_STREQ(to_string(DetectorMode::kSegmentEndpoints), "segment-endpoints");
  EXPECT_EQ(penalty_from_string("ols"), PenaltyMode::kOls);
}
