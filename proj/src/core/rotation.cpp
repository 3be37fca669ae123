#include "core/rotation.hpp"

#include <cmath>

#include "core/common.hpp"

namespace glab {

Eigen::Matrix3d sixd_to_rotmat(const double* sixd, const std::string& what) {
  Eigen::Vector3d a(sixd[0], sixd[1], sixd[2]);
  Eigen::Vector3d b(sixd[3], sixd[4], sixd[5]);
  double na = a.norm();
  if (na <= kSixdDegenerateEps)
    fail(Status::invalid_argument,
         "sixd_to_rotmat: first column has near-zero norm" + (what.empty() ? "" : " at " + what));
  Eigen::Vector3d c1 = a / na;
  Eigen::Vector3d b2 = b - c1.dot(b) * c1;
  double nb = b2.norm();
  if (nb <= kSixdDegenerateEps)
    fail(Status::invalid_argument,
         "sixd_to_rotmat: columns are parallel" + (what.empty() ? "" : " at " + what));
  Eigen::Vector3d c2 = b2 / nb;
  Eigen::Vector3d c3 = c1.cross(c2);
  Eigen::Matrix3d r;
  r.col(0) = c1;
  r.col(1) = c2;
  r.col(2) = c3;
  return r;
}

void rotmat_to_sixd(const Eigen::Matrix3d& r, double* sixd_out) {
  for (int i = 0; i < 3; ++i) sixd_out[i] = r(i, 0);
  for (int i = 0; i < 3; ++i) sixd_out[3 + i] = r(i, 1);
}

double geodesic_distance(const Eigen::Matrix3d& r, const Eigen::Matrix3d& rhat) {
  double tr = (r * rhat.transpose()).trace();
  double arg = (tr - 1.0) / 2.0;
  arg = std::min(1.0, std::max(-1.0, arg));
  return std::acos(arg);
}

Eigen::Vector3d rotmat_to_euler_xyz(const Eigen::Matrix3d& r) {
  double sy = std::min(1.0, std::max(-1.0, r(0, 2)));
  double y = std::asin(sy);
  double cy = std::cos(y);
  Eigen::Vector3d e;
  if (std::fabs(cy) < kGimbalEps) {
    // Gimbal lock: x and z rotations act about the same axis; R(1,0)/R(1,1)
    // carry their combined twist for either pitch sign.
    e[0] = 0.0;
    e[1] = y;
    e[2] = std::atan2(r(1, 0), r(1, 1));
  } else {
    e[0] = std::atan2(-r(1, 2), r(2, 2));
    e[1] = y;
    e[2] = std::atan2(-r(0, 1), r(0, 0));
  }
  return e;
}

Eigen::Matrix3d euler_xyz_to_rotmat(const Eigen::Vector3d& e) {
  double ca = std::cos(e[0]), sa = std::sin(e[0]);
  double cb = std::cos(e[1]), sb = std::sin(e[1]);
  double cc = std::cos(e[2]), sc = std::sin(e[2]);
  Eigen::Matrix3d rx, ry, rz;
  rx << 1, 0, 0, 0, ca, -sa, 0, sa, ca;
  ry << cb, 0, sb, 0, 1, 0, -sb, 0, cb;
  rz << cc, -sc, 0, sc, cc, 0, 0, 0, 1;
  return rx * ry * rz;
}

Eigen::Matrix3d random_rotation(Rng& rng) {
  Eigen::Vector4d q(rng.normal(), rng.normal(), rng.normal(), rng.normal());
  q.normalize();
  double w = q[0], x = q[1], y = q[2], z = q[3];
  Eigen::Matrix3d r;
  r << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
      2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
      2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
  return r;
}

Eigen::Matrix3d axis_angle_to_rotmat(const Eigen::Vector3d& axis, double angle) {
  return Eigen::AngleAxisd(angle, axis.normalized()).toRotationMatrix();
}

}  // namespace glab
