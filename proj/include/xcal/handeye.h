// Initial extrinsic from paired sensor motions (the AX = XB problem).
//
// Each motion pair relates the lidar motion L between two poses with the
// camera motion C between the same poses: L * T = T * C. The rotation part
// becomes (T_{q_l} - T*_{q_c}) q = 0, stacked over all pairs and solved by
// SVD. With the rotation fixed, the translation part gives one 3-row block
// per pair, (I - R_L) t + lambda * R * c_dir = t_L, with an unknown scale
// lambda per pair because the camera translation is known only in direction.

#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "xcal/geom.h"

namespace xcal {

struct CameraMotion {
  Quat rotation;
  Vec3 translation_dir = Vec3::Zero();  // unit norm, or zero
};

struct MotionPair {
  int id = 0;
  int pose_i = 0;
  int pose_j = 0;
  Rigid3 lidar_motion;  // metric, maps pose j into pose i
  Quat cam_rotation;
  Vec3 cam_translation_dir = Vec3::Zero();
  // True when cam_translation_dir is a usable direction estimate for this
  // pair. Rotation rows use every pair; translation rows only valid ones.
  bool valid = true;
};

struct DegeneracyReport {
  bool pure_translation = false;
  bool single_axis = false;
  double max_pair_angle = 0.0;  // radians
  double axis_spread = 0.0;     // sigma2 / sigma1 of the stacked unit axes

  bool degenerate() const { return pure_translation || single_axis; }
  std::string describe() const;
};

class DegenerateMotionError : public Error {
 public:
  explicit DegenerateMotionError(const DegeneracyReport& report);
  const DegeneracyReport& report() const { return report_; }

 private:
  DegeneracyReport report_;
};

// Linear system without a unique least-squares solution.
class RankError : public Error {
 public:
  using Error::Error;
};

// Fewer retained pairs than the solver needs.
class InsufficientPairsError : public Error {
 public:
  using Error::Error;
};

struct InitConfig {
  bool filter = true;
  double angle_tolerance = deg_to_rad(1.0);
  double rotation_floor = deg_to_rad(1.0);
  double spread_floor = 0.1;
};

struct RotationSolution {
  Quat rotation;
  double residual = 0.0;  // smallest singular value of the design matrix
};

struct TranslationSolution {
  Vec3 translation = Vec3::Zero();
  std::vector<double> scales;  // one per entry of pair_ids
  std::vector<int> pair_ids;
  double rms = 0.0;  // meters, over all 3P rows
};

struct InitResult {
  Rigid3 extrinsic;
  // Pairs that survived filtration (rotation rows).
  std::vector<int> retained_pair_ids;
  // Per-pair scales of the translation system, aligned with scale_pair_ids.
  std::vector<double> scales;
  std::vector<int> scale_pair_ids;
  double rotation_residual = 0.0;
  double translation_rms = 0.0;
  DegeneracyReport degeneracy;
};

// All C(N,2) pairs from N-1 consecutive lidar and camera motions, ordered by
// pose gap and then by first pose: (0,1), (1,2), ..., (0,2), (1,3), ...
// Lidar motions and camera rotations are composed exactly. A camera
// translation direction is only defined for consecutive pairs; longer pairs
// get the renormalized unit-step composition and valid = false.
std::vector<MotionPair> build_pairs(const std::vector<Rigid3>& lidar_motions,
                                    const std::vector<CameraMotion>& cam_motions);

// Stacked (4P x 4) matrix whose block k is
// left_quat_matrix(q_l) - right_quat_matrix(q_c) for pair k.
Eigen::MatrixXd rotation_design_matrix(const std::vector<MotionPair>& pairs);

DegeneracyReport check_degeneracy(const std::vector<MotionPair>& pairs,
                                  double rotation_floor, double spread_floor);

// Keeps pairs whose lidar and camera rotation angles differ by at most
// angle_tolerance. Order is preserved.
std::vector<MotionPair> filter_pairs(const std::vector<MotionPair>& pairs,
                                     double angle_tolerance);

RotationSolution solve_rotation(const std::vector<MotionPair>& pairs,
                                const InitConfig& config = {});

// Uses the valid pairs only; needs at least two of them.
TranslationSolution solve_translation_scale(const std::vector<MotionPair>& pairs,
                                            const Quat& rotation);

// filter -> degeneracy check -> rotation -> translation and scales.
InitResult init_calibrate(const std::vector<MotionPair>& pairs,
                          const InitConfig& config = {});

}  // namespace xcal
