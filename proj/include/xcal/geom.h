// Quaternion and rigid-transform algebra, pinhole projection, image lines,
// and the rotation/translation error metrics shared by every stage.
//
// Conventions:
//   * Quaternions are Hamilton, scalar first: (w, x, y, z).
//   * A Rigid3 used as an extrinsic maps camera-frame points into the lidar
//     frame: p_lidar = R * p_cam + t. The lidar frame is the world frame.
//   * Relative motions L^i_j map points of pose j into pose i.

#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <array>
#include <stdexcept>
#include <string>

namespace xcal {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid numerical preconditions: non-unit quaternions, degenerate
// segments, points behind the camera, rank-deficient refinement.
class GeometryError : public Error {
 public:
  using Error::Error;
};

class BehindCameraError : public GeometryError {
 public:
  using GeometryError::GeometryError;
};

constexpr double kPi = 3.14159265358979323846;

constexpr double deg_to_rad(double deg) { return deg * kPi / 180.0; }
constexpr double rad_to_deg(double rad) { return rad * 180.0 / kPi; }

// Tolerance used to reject a quaternion that claims to be unit.
inline constexpr double kUnitTolerance = 1e-9;

struct Quat {
  double w = 1.0;
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  static Quat identity() { return {}; }
  static Quat from_coeffs(const Vec4& v) { return {v[0], v[1], v[2], v[3]}; }
  // Unit quaternion rotating by `angle` radians about `axis` (need not be
  // normalized, must be non-zero).
  static Quat from_axis_angle(const Vec3& axis, double angle);
  // Exponential map: rotation vector (axis * angle) to unit quaternion.
  static Quat from_rotation_vector(const Vec3& rv);
  static Quat from_matrix(const Mat3& m);

  Vec4 coeffs() const { return {w, x, y, z}; }
  Vec3 vec() const { return {x, y, z}; }
  double norm() const;
  Quat normalized() const;
  Quat conjugate() const { return {w, -x, -y, -z}; }
  Quat operator-() const { return {-w, -x, -y, -z}; }
  // Sign chosen so the largest-magnitude component is non-negative.
  Quat canonical() const;
  bool is_unit(double tol = kUnitTolerance) const;

  Mat3 to_matrix() const;
  Vec3 rotate(const Vec3& v) const;
  // Logarithm map; the returned angle is in [0, pi].
  Vec3 rotation_vector() const;
};

// Hamilton product a ⊗ b.
Quat operator*(const Quat& a, const Quat& b);

struct Rigid3 {
  Quat rotation;
  Vec3 translation = Vec3::Zero();

  static Rigid3 identity() { return {}; }

  Vec3 apply(const Vec3& p) const { return rotation.rotate(p) + translation; }
  Rigid3 inverse() const;
  Mat3 rotation_matrix() const { return rotation.to_matrix(); }
};

// a ∘ b: apply b first, then a. The rotation is renormalized.
Rigid3 operator*(const Rigid3& a, const Rigid3& b);

struct CameraIntrinsics {
  double fx = 500.0;
  double fy = 500.0;
  double cx = 320.0;
  double cy = 240.0;
  int width = 640;
  int height = 480;

  // Throws GeometryError when the invariants do not hold.
  void validate() const;
  Mat3 matrix() const;
};

// Homogeneous image line w0*u + w1*v + w2 = 0.
struct Line2D {
  double w0 = 0.0;
  double w1 = 0.0;
  double w2 = 0.0;
  bool normalized = false;

  double eval(const Vec2& uv) const { return w0 * uv.x() + w1 * uv.y() + w2; }
};

struct Segment2D {
  Vec2 p0 = Vec2::Zero();
  Vec2 p1 = Vec2::Zero();

  double length() const { return (p1 - p0).norm(); }
};

// Vertical scene line in the lidar frame. Its direction is the lidar y axis;
// (x, z) is where it meets the floor plane.
struct VerticalLine3D {
  double x = 0.0;
  double z = 0.0;
  double y_min = 0.0;
  double y_max = 0.0;
  int support = 0;

  Vec3 point_at(double height) const { return {x, height, z}; }
  double mid_height() const { return 0.5 * (y_min + y_max); }
};

// Multiplication matrices: left_quat_matrix(q) * p = q ⊗ p and
// right_quat_matrix(q) * p = p ⊗ q, with p as (w, x, y, z).
Mat4 left_quat_matrix(const Quat& q);
Mat4 right_quat_matrix(const Quat& q);

// 2 * acos(|w|), in [0, pi]. Throws GeometryError for non-unit input.
double rotation_angle(const Quat& q);

// acos(|q1 . q2|) / (pi / 2), in [0, 1]. Throws for non-unit input.
double rotation_error(const Quat& q1, const Quat& q2);

struct Projection {
  Vec2 pixel;
  double depth = 0.0;
};

// Projects a lidar-frame point with extrinsic T (camera -> lidar):
// p_cam = R^-1 (p - t), pixel = K p_cam / depth.
// Throws BehindCameraError when depth <= 1e-9.
Projection project_point(const CameraIntrinsics& K, const Rigid3& T,
                         const Vec3& p);

// Normalized line through both endpoints, with w0 > 0, or w0 == 0 and
// w1 > 0. Throws GeometryError for a segment shorter than 1e-9 px.
Line2D segment_to_line(const Segment2D& s);

std::string to_string(const Quat& q);

}  // namespace xcal
