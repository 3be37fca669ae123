#pragma once

#include <Eigen/Dense>

#include "core/rng.hpp"

namespace glab {

// Plain (non-differentiable) rotation math used by evaluation, data
// generation and the noise experiment. The differentiable twins live in
// kinematics.hpp.

inline constexpr double kSixdDegenerateEps = 1e-8;
inline constexpr double kGimbalEps = 1e-6;

// 6D rotation representation: the first two columns of the rotation matrix,
// stored column-first: [a0,a1,a2, b0,b1,b2]. Gram-Schmidt restores the frame.
// Degenerate input (first vector near zero, or the two vectors parallel)
// raises invalid_argument; `what` names the offending site in the message.
Eigen::Matrix3d sixd_to_rotmat(const double* sixd, const std::string& what = "");
void rotmat_to_sixd(const Eigen::Matrix3d& r, double* sixd_out);

// Geodesic angle acos((trace(R * Rhat^T) - 1) / 2), argument clamped to
// [-1, 1]; result in [0, pi].
double geodesic_distance(const Eigen::Matrix3d& r, const Eigen::Matrix3d& rhat);

// Intrinsic XYZ Euler decomposition: R = Rx(e[0]) * Ry(e[1]) * Rz(e[2]).
// Near the gimbal singularity (|cos(pitch)| < kGimbalEps) the x angle is
// pinned to zero and the z angle absorbs the remaining twist.
Eigen::Vector3d rotmat_to_euler_xyz(const Eigen::Matrix3d& r);
Eigen::Matrix3d euler_xyz_to_rotmat(const Eigen::Vector3d& e);

// Uniform random rotation via a normalized quaternion.
Eigen::Matrix3d random_rotation(Rng& rng);

Eigen::Matrix3d axis_angle_to_rotmat(const Eigen::Vector3d& axis, double angle);

}  // namespace glab
