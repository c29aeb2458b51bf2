#include "xcal/handeye.h"

#include <cmath>
#include <cstdio>

#include <Eigen/SVD>

namespace xcal {

std::string DegeneracyReport::describe() const {
  char buf[192];
  std::snprintf(buf, sizeof(buf),
                "pure_translation=%d single_axis=%d max_pair_angle=%.4f deg "
                "axis_spread=%.4g",
                pure_translation ? 1 : 0, single_axis ? 1 : 0,
                rad_to_deg(max_pair_angle), axis_spread);
  return buf;
}

DegenerateMotionError::DegenerateMotionError(const DegeneracyReport& report)
    : Error("degenerate motion: " + report.describe()), report_(report) {}

std::vector<MotionPair> build_pairs(
    const std::vector<Rigid3>& lidar_motions,
    const std::vector<CameraMotion>& cam_motions) {
  if (lidar_motions.size() != cam_motions.size()) {
    throw Error("build_pairs: lidar and camera motion counts differ (" +
                std::to_string(lidar_motions.size()) + " vs " +
                std::to_string(cam_motions.size()) + ")");
  }
  const int n_poses = static_cast<int>(lidar_motions.size()) + 1;
  std::vector<MotionPair> pairs;
  pairs.reserve(static_cast<std::size_t>(n_poses) * (n_poses - 1) / 2);
  for (int gap = 1; gap < n_poses; ++gap) {
    for (int i = 0; i + gap < n_poses; ++i) {
      const int j = i + gap;
      Rigid3 lidar = Rigid3::identity();
      Rigid3 cam = Rigid3::identity();
      for (int k = i; k < j; ++k) {
        lidar = lidar * lidar_motions[k];
        cam = cam * Rigid3{cam_motions[k].rotation.normalized(),
                           cam_motions[k].translation_dir};
      }
      MotionPair p;
      p.id = static_cast<int>(pairs.size());
      p.pose_i = i;
      p.pose_j = j;
      p.lidar_motion = lidar;
      p.cam_rotation = cam.rotation;
      const double n = cam.translation.norm();
      p.cam_translation_dir = n > 1e-12 ? Vec3(cam.translation / n) : Vec3::Zero();
      p.valid = gap == 1 && n > 1e-12;
      pairs.push_back(p);
    }
  }
  return pairs;
}

Eigen::MatrixXd rotation_design_matrix(const std::vector<MotionPair>& pairs) {
  if (pairs.empty()) {
    throw Error("rotation_design_matrix: no motion pairs");
  }
  // q_l q = q q_c only holds when q_l and q_c share a sign convention;
  // equal rotation angles mean equal scalar parts, so take w >= 0 for both.
  auto positive = [](const Quat& q) { return q.w < 0.0 ? -q : q; };
  Eigen::MatrixXd A(4 * pairs.size(), 4);
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    A.block<4, 4>(4 * k, 0) =
        left_quat_matrix(positive(pairs[k].lidar_motion.rotation)) -
        right_quat_matrix(positive(pairs[k].cam_rotation));
  }
  return A;
}

DegeneracyReport check_degeneracy(const std::vector<MotionPair>& pairs,
                                  double rotation_floor, double spread_floor) {
  DegeneracyReport report;
  std::vector<Vec3> axes;
  for (const auto& p : pairs) {
    const Quat& q = p.lidar_motion.rotation;
    const double angle = rotation_angle(q);
    report.max_pair_angle = std::max(report.max_pair_angle, angle);
    if (angle >= rotation_floor) {
      axes.push_back(q.rotation_vector().normalized());
    }
  }
  report.pure_translation = report.max_pair_angle < rotation_floor;
  if (axes.size() >= 2) {
    Eigen::MatrixXd M(axes.size(), 3);
    for (std::size_t k = 0; k < axes.size(); ++k) M.row(k) = axes[k].transpose();
    // Relative to the first singular value: the raw value grows with the
    // square root of the pair count, so axis noise alone would clear the
    // floor once there are enough pairs.
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
    report.axis_spread = svd.singularValues()(1) / svd.singularValues()(0);
  }
  report.single_axis =
      !report.pure_translation && report.axis_spread < spread_floor;
  return report;
}

std::vector<MotionPair> filter_pairs(const std::vector<MotionPair>& pairs,
                                     double angle_tolerance) {
  std::vector<MotionPair> kept;
  kept.reserve(pairs.size());
  for (const auto& p : pairs) {
    const double dl = rotation_angle(p.lidar_motion.rotation);
    const double dc = rotation_angle(p.cam_rotation);
    if (std::abs(dl - dc) <= angle_tolerance) kept.push_back(p);
  }
  return kept;
}

RotationSolution solve_rotation(const std::vector<MotionPair>& pairs,
                                const InitConfig& config) {
  if (pairs.empty()) {
    throw InsufficientPairsError("solve_rotation: no motion pairs");
  }
  const DegeneracyReport report =
      check_degeneracy(pairs, config.rotation_floor, config.spread_floor);
  if (report.degenerate()) {
    throw DegenerateMotionError(report);
  }
  const Eigen::MatrixXd A = rotation_design_matrix(pairs);
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeFullV);
  const Vec4 v = svd.matrixV().col(3);
  RotationSolution sol;
  sol.rotation = Quat::from_coeffs(v).normalized().canonical();
  sol.residual = svd.singularValues()(3);
  return sol;
}

TranslationSolution solve_translation_scale(const std::vector<MotionPair>& pairs,
                                            const Quat& rotation) {
  std::vector<const MotionPair*> rows;
  for (const auto& p : pairs) {
    if (p.valid) rows.push_back(&p);
  }
  if (rows.empty()) {
    throw InsufficientPairsError(
        "solve_translation_scale: no pair with a valid camera translation");
  }
  const Eigen::Index P = static_cast<Eigen::Index>(rows.size());
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(3 * P, 3 + P);
  Eigen::VectorXd b(3 * P);
  const Mat3 R = rotation.to_matrix();
  for (Eigen::Index k = 0; k < P; ++k) {
    const MotionPair& p = *rows[k];
    A.block<3, 3>(3 * k, 0) =
        Mat3::Identity() - p.lidar_motion.rotation.to_matrix();
    A.block<3, 1>(3 * k, 3 + k) = R * p.cam_translation_dir;
    b.segment<3>(3 * k) = p.lidar_motion.translation;
  }
  if (A.rows() < A.cols()) {
    throw RankError("solve_translation_scale: " + std::to_string(P) +
                    " pair(s) give " + std::to_string(A.rows()) +
                    " equations for " + std::to_string(A.cols()) +
                    " unknowns; at least two pairs are required");
  }
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(
      A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& s = svd.singularValues();
  if (s(s.size() - 1) <= 1e-10 * s(0)) {
    throw RankError(
        "solve_translation_scale: rank-deficient system (parallel camera "
        "translations or rotations about one axis)");
  }
  const Eigen::VectorXd x = svd.solve(b);

  TranslationSolution sol;
  sol.translation = x.head<3>();
  sol.scales.assign(x.data() + 3, x.data() + 3 + P);
  for (const auto* p : rows) sol.pair_ids.push_back(p->id);
  sol.rms = std::sqrt((A * x - b).squaredNorm() / static_cast<double>(3 * P));
  return sol;
}

InitResult init_calibrate(const std::vector<MotionPair>& pairs,
                          const InitConfig& config) {
  const std::vector<MotionPair> retained =
      config.filter ? filter_pairs(pairs, config.angle_tolerance) : pairs;
  if (retained.size() < 2) {
    throw InsufficientPairsError(
        "init_calibrate: " + std::to_string(retained.size()) + " of " +
        std::to_string(pairs.size()) + " pairs retained; at least 2 needed");
  }
  InitResult result;
  result.degeneracy =
      check_degeneracy(retained, config.rotation_floor, config.spread_floor);
  if (result.degeneracy.degenerate()) {
    throw DegenerateMotionError(result.degeneracy);
  }
  const RotationSolution rot = solve_rotation(retained, config);
  const TranslationSolution trans =
      solve_translation_scale(retained, rot.rotation);

  result.extrinsic = {rot.rotation, trans.translation};
  for (const auto& p : retained) result.retained_pair_ids.push_back(p.id);
  result.scales = trans.scales;
  result.scale_pair_ids = trans.pair_ids;
  result.rotation_residual = rot.residual;
  result.translation_rms = trans.rms;
  return result;
}

}  // namespace xcal
