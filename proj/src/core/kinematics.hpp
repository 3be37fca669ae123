#pragma once

#include "core/skeleton.hpp"
#include "core/tensor.hpp"

namespace glab {

// Differentiable rotation/kinematics ops over autodiff tensors, plus a plain
// fast path for evaluation and data generation. Both routes share the same
// conventions: 6D = first two rotation-matrix columns (column-first), and a
// joint's world rotation is the ordered product of local rotations from the
// root down to the joint itself.

// [T, 6] -> [T, 3, 3]. Errors name the frame (and `what`) on degenerate
// input: first column norm <= 1e-8 or columns parallel after projection.
Tensor sixd_to_rotmat_t(const Tensor& sixd, const std::string& what = "");

// Geodesic angles between two stacks of rotation matrices: [T, 3, 3] x2 ->
// [T, 1], acos((trace(R Rhat^T) - 1) / 2) with the clamped-acos op.
Tensor geodesic_t(const Tensor& r, const Tensor& rhat);

// Forward kinematics: rot6d [T, J, 6] -> positions [T, J, 3].
// p(root) = origin; p(j) = p(parent) + R_world(j) * offset(j).
Tensor fk_positions_t(const Skeleton& skel, const Tensor& rot6d);

// Plain twin of fk_positions_t on raw buffers (rot6d is T*J*6 row-major,
// result T*J*3). Used by evaluation and dataset generation.
std::vector<double> fk_positions(const Skeleton& skel, const std::vector<double>& rot6d,
                                 int64_t frames);

// First differences along time for positions [T, J, D] -> [T-1, J, D].
Tensor time_diff_t(const Tensor& positions);

}  // namespace glab
