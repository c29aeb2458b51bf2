#include "xcal/geom.h"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace xcal {

Quat Quat::from_axis_angle(const Vec3& axis, double angle) {
  const double n = axis.norm();
  if (n < 1e-15) {
    throw GeometryError("from_axis_angle: zero rotation axis");
  }
  const Vec3 a = axis / n;
  const double s = std::sin(0.5 * angle);
  return {std::cos(0.5 * angle), a.x() * s, a.y() * s, a.z() * s};
}

Quat Quat::from_rotation_vector(const Vec3& rv) {
  const double angle = rv.norm();
  if (angle < 1e-12) {
    // Second-order expansion keeps tiny perturbations accurate.
    const Vec3 h = 0.5 * rv;
    return Quat{1.0, h.x(), h.y(), h.z()}.normalized();
  }
  return from_axis_angle(rv, angle);
}

Quat Quat::from_matrix(const Mat3& m) {
  // Shepperd: branch on the largest of the four squared components.
  const double tr = m.trace();
  Quat q;
  if (tr >= m(0, 0) && tr >= m(1, 1) && tr >= m(2, 2)) {
    const double s = 2.0 * std::sqrt(1.0 + tr);
    q = {0.25 * s, (m(2, 1) - m(1, 2)) / s, (m(0, 2) - m(2, 0)) / s,
         (m(1, 0) - m(0, 1)) / s};
  } else if (m(0, 0) >= m(1, 1) && m(0, 0) >= m(2, 2)) {
    const double s = 2.0 * std::sqrt(1.0 + m(0, 0) - m(1, 1) - m(2, 2));
    q = {(m(2, 1) - m(1, 2)) / s, 0.25 * s, (m(0, 1) + m(1, 0)) / s,
         (m(0, 2) + m(2, 0)) / s};
  } else if (m(1, 1) >= m(2, 2)) {
    const double s = 2.0 * std::sqrt(1.0 + m(1, 1) - m(0, 0) - m(2, 2));
    q = {(m(0, 2) - m(2, 0)) / s, (m(0, 1) + m(1, 0)) / s, 0.25 * s,
         (m(1, 2) + m(2, 1)) / s};
  } else {
    const double s = 2.0 * std::sqrt(1.0 + m(2, 2) - m(0, 0) - m(1, 1));
    q = {(m(1, 0) - m(0, 1)) / s, (m(0, 2) + m(2, 0)) / s,
         (m(1, 2) + m(2, 1)) / s, 0.25 * s};
  }
  return q.normalized().canonical();
}

double Quat::norm() const { return std::sqrt(w * w + x * x + y * y + z * z); }

Quat Quat::normalized() const {
  const double n = norm();
  if (n < 1e-300) {
    throw GeometryError("cannot normalize a zero quaternion");
  }
  return {w / n, x / n, y / n, z / n};
}

Quat Quat::canonical() const {
  const std::array<double, 4> c{w, x, y, z};
  std::size_t best = 0;
  for (std::size_t i = 1; i < c.size(); ++i) {
    if (std::abs(c[i]) > std::abs(c[best])) best = i;
  }
  return c[best] < 0.0 ? -*this : *this;
}

bool Quat::is_unit(double tol) const {
  return std::abs(w * w + x * x + y * y + z * z - 1.0) <= tol;
}

Mat3 Quat::to_matrix() const {
  Mat3 m;
  const double xx = x * x, yy = y * y, zz = z * z;
  const double xy = x * y, xz = x * z, yz = y * z;
  const double wx = w * x, wy = w * y, wz = w * z;
  m << 1 - 2 * (yy + zz), 2 * (xy - wz), 2 * (xz + wy),
       2 * (xy + wz), 1 - 2 * (xx + zz), 2 * (yz - wx),
       2 * (xz - wy), 2 * (yz + wx), 1 - 2 * (xx + yy);
  return m;
}

Vec3 Quat::rotate(const Vec3& v) const {
  // v + 2 u x (u x v + w v), u = vector part.
  const Vec3 u = vec();
  return v + 2.0 * u.cross(u.cross(v) + w * v);
}

Vec3 Quat::rotation_vector() const {
  Quat q = w < 0.0 ? -*this : *this;
  const double s = q.vec().norm();
  if (s < 1e-15) {
    return 2.0 * q.vec();
  }
  const double angle = 2.0 * std::atan2(s, q.w);
  return q.vec() * (angle / s);
}

Quat operator*(const Quat& a, const Quat& b) {
  return {a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
          a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
          a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
          a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w};
}

Rigid3 Rigid3::inverse() const {
  const Quat inv = rotation.conjugate();
  return {inv, -inv.rotate(translation)};
}

Rigid3 operator*(const Rigid3& a, const Rigid3& b) {
  return {(a.rotation * b.rotation).normalized(),
          a.rotation.rotate(b.translation) + a.translation};
}

void CameraIntrinsics::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0)) {
    throw GeometryError("camera intrinsics: focal lengths must be positive");
  }
  if (width <= 0 || height <= 0) {
    throw GeometryError("camera intrinsics: image size must be positive");
  }
  if (!(cx > 0.0 && cx < width) || !(cy > 0.0 && cy < height)) {
    throw GeometryError(
        "camera intrinsics: principal point must lie inside the image");
  }
}

Mat3 CameraIntrinsics::matrix() const {
  Mat3 k;
  k << fx, 0.0, cx, 0.0, fy, cy, 0.0, 0.0, 1.0;
  return k;
}

Mat4 left_quat_matrix(const Quat& q) {
  Mat4 m;
  m << q.w, -q.x, -q.y, -q.z,
       q.x,  q.w, -q.z,  q.y,
       q.y,  q.z,  q.w, -q.x,
       q.z, -q.y,  q.x,  q.w;
  return m;
}

Mat4 right_quat_matrix(const Quat& q) {
  Mat4 m;
  m << q.w, -q.x, -q.y, -q.z,
       q.x,  q.w,  q.z, -q.y,
       q.y, -q.z,  q.w,  q.x,
       q.z,  q.y, -q.x,  q.w;
  return m;
}

namespace {

void require_unit(const Quat& q, const char* what) {
  if (!q.is_unit()) {
    throw GeometryError(std::string(what) + ": quaternion is not unit (" +
                        to_string(q) + ")");
  }
}

}  // namespace

double rotation_angle(const Quat& q) {
  require_unit(q, "rotation_angle");
  // atan2 form: acos loses half the digits near zero angle.
  return 2.0 * std::atan2(Vec3(q.x, q.y, q.z).norm(), std::abs(q.w));
}

double rotation_error(const Quat& q1, const Quat& q2) {
  require_unit(q1, "rotation_error");
  require_unit(q2, "rotation_error");
  const double dot = q1.w * q2.w + q1.x * q2.x + q1.y * q2.y + q1.z * q2.z;
  // Same value as acos(|dot|), computed from the chord between q1 and +-q2.
  const Vec4 a = q1.coeffs();
  const Vec4 b = dot < 0.0 ? Vec4(-q2.coeffs()) : q2.coeffs();
  return 2.0 * std::atan2((a - b).norm(), (a + b).norm()) / (0.5 * kPi);
}

Projection project_point(const CameraIntrinsics& K, const Rigid3& T,
                         const Vec3& p) {
  const Vec3 pc = T.rotation.conjugate().rotate(p - T.translation);
  if (pc.z() <= 1e-9) {
    throw BehindCameraError("point projects behind the camera");
  }
  return {{K.fx * pc.x() / pc.z() + K.cx, K.fy * pc.y() / pc.z() + K.cy},
          pc.z()};
}

Line2D segment_to_line(const Segment2D& s) {
  const Vec2 d = s.p1 - s.p0;
  const double len = d.norm();
  if (!(len > 1e-9)) {
    throw GeometryError("segment_to_line: degenerate segment");
  }
  // Normal (w0, w1) is the direction rotated by 90 degrees.
  double w0 = -d.y() / len;
  double w1 = d.x() / len;
  if (w0 < 0.0 || (w0 == 0.0 && w1 < 0.0)) {
    w0 = -w0;
    w1 = -w1;
  }
  // Offset from the midpoint keeps both endpoints symmetric in rounding.
  const Vec2 mid = 0.5 * (s.p0 + s.p1);
  const double w2 = -(w0 * mid.x() + w1 * mid.y());
  // + 0.0 folds negative zeros.
  return {w0 + 0.0, w1 + 0.0, w2 + 0.0, true};
}

std::string to_string(const Quat& q) {
  char buf[128];
  std::snprintf(buf, sizeof(buf), "(%.9g, %.9g, %.9g, %.9g)", q.w, q.x, q.y,
                q.z);
  return buf;
}

}  // namespace xcal
