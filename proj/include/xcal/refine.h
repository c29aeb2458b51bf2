// 3D-vertical-line to 2D-image-line association and robust translation
// refinement.
//
// A candidate sampled at height h projects to (u', v') under the extrinsic;
// its residual against a normalized image line is w0 u' + w1 v' + w2, the
// signed pixel distance. Refinement holds the rotation fixed and solves for
// the translation by iteratively reweighted least squares (IRLS): with the
// depth of every sample frozen at the current estimate the residual is
// affine in t, so each iteration is a weighted linear least-squares solve.
// A step that would raise the objective (depths do move with t) is halved
// until it does not.
//
// Translation along the lidar vertical axis moves every camera center along
// the lines themselves and leaves all residuals unchanged, so refinement
// only updates the two horizontal components; the vertical component keeps
// its initial value.

#pragma once

#include <vector>

#include "xcal/geom.h"

namespace xcal {

struct LineMatch {
  VerticalLine3D candidate;
  Line2D line;
  double residual = 0.0;  // signed pixels, mean of the two height samples
  int pose_id = 0;
  int candidate_index = -1;  // index into the pose's candidate list
  int segment_index = -1;    // index into the pose's segment list
};

struct MatchConfig {
  double angle_tol = deg_to_rad(5.0);
  double dist_tol = 10.0;  // pixels
  double fov_margin = 5.0;  // pixels
};

enum class PenaltyMode { kOls, kHuber };

struct RefineConfig {
  double huber_M = 3.0;  // pixels
  int max_iterations = 50;
  double step_tolerance = 1e-8;  // meters
  PenaltyMode penalty_mode = PenaltyMode::kHuber;
};

struct RefineResult {
  Vec3 translation = Vec3::Zero();
  int iterations = 0;
  bool converged = false;
  double final_weighted_rms = 0.0;  // pixels
  double inlier_fraction = 0.0;     // share of rows with weight >= 0.5
  // Robust objective sum(rho(r)) at the start and after every iteration.
  std::vector<double> objective_history;
};

// w0 u' + w1 v' + w2 for the candidate point at `sample_height`. Throws
// GeometryError for an unnormalized line, BehindCameraError behind the camera.
double point_line_residual(const Line2D& line, const VerticalLine3D& candidate,
                           double sample_height, const Rigid3& T,
                           const CameraIntrinsics& K);

// Matching for one pose: FoV filter, direction filter, then greedy one-to-one
// assignment by ascending mean |residual| of the y_min and y_max samples.
// Both samples must be within dist_tol.
std::vector<LineMatch> match_lines(const std::vector<VerticalLine3D>& candidates,
                                   const std::vector<Segment2D>& segments,
                                   const Rigid3& T0, const CameraIntrinsics& K,
                                   const MatchConfig& config = {},
                                   int pose_id = 0);

// 1 for |u| <= M, M / |u| otherwise.
double huber_weight(double residual, double M);

// Huber loss: u^2 / 2 inside M, M |u| - M^2 / 2 outside.
double huber_loss(double residual, double M);

// One residual row of the frozen-depth linearization: r(t) = a . t + b.
struct ResidualRow {
  Vec3 a = Vec3::Zero();
  double b = 0.0;
};

// Row for a candidate sample with the depth frozen at `depth`.
ResidualRow frozen_depth_row(const Line2D& line, const Vec3& point,
                             const Quat& R, double depth,
                             const CameraIntrinsics& K);

RefineResult refine_translation(const std::vector<LineMatch>& matches,
                                const Quat& R, const Vec3& t0,
                                const CameraIntrinsics& K,
                                const RefineConfig& config = {});

struct TranslationError {
  double error = 0.0;  // meters
  double ratio = 0.0;  // error / |t_gt|
};

// Throws Error when |t_gt| is zero.
TranslationError error_ratio(const Vec3& t_est, const Vec3& t_gt);

}  // namespace xcal
