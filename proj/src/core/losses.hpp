#pragma once

#include "core/extractor.hpp"
#include "core/signal.hpp"
#include "core/tensor.hpp"

namespace glab {

// Training losses. All take autodiff tensors and reduce to a scalar tensor.
// Position tensors are [T, J, D] (D = 3 from forward kinematics, 2 in planar
// mode); rotation tensors are [T, J, 6]; latent codes are channel-major
// [C, T].

struct MotionLossWeights {
  double rotation = 1.0;
  double position = 1.0;
  double speed = 5.0;
};

// Per-frame, per-joint L1 over coordinates: [T, J, D] pairs -> [T, J].
// Shared by position_loss and the relaxed hinge so that rho = 0 reproduces
// the plain position loss bitwise.
Tensor per_joint_l1(const Tensor& pred_pos, const Tensor& gt_pos);

// Mean geodesic angle (radians) over frames and joints. Identical inputs sit
// at acos(1 - margin) rather than exactly zero because the loss path keeps
// acos differentiable via clamping.
Tensor rotation_loss(const Tensor& pred6d, const Tensor& gt6d);

Tensor position_loss(const Tensor& pred_pos, const Tensor& gt_pos);

// L1 between first differences of positions, same per-joint reduction.
Tensor speed_loss(const Tensor& pred_pos, const Tensor& gt_pos);

struct MotionLossTerms {
  Tensor total, rotation, position, speed;
};

// Weighted sum of the three terms. Pass undefined rotation tensors in planar
// position mode; the rotation term is then skipped (and left undefined).
MotionLossTerms motion_loss(const Tensor& pred6d, const Tensor& gt6d, const Tensor& pred_pos,
                            const Tensor& gt_pos, const MotionLossWeights& w = {});

// Hinged position loss: mean over (T, J) of max(per-joint L1 - rho, 0).
Tensor relaxed_position_loss(const Tensor& pred_pos, const Tensor& gt_pos, double rho);

// Mean absolute log-magnitude STFT difference, averaged over every joint
// coordinate series. Needs T >= spec.window frames.
Tensor stft_loss(const Tensor& pred_pos, const Tensor& gt_pos, const StftSpec& spec = {});

// 1 - mean structural similarity over joint coordinate series. Statistics
// use the unbiased 1/(T-1) normalizer; sigma = sqrt(var + 1e-12) keeps the
// gradient finite for constant series. Needs T >= 2.
Tensor ssim_loss(const Tensor& pred_pos, const Tensor& gt_pos);

// Sum over extractor blocks of the mean per-frame squared feature distance.
// Inputs are channel-major motion representations [input_dim, T].
Tensor perceptual_loss(const FeatureExtractor& ex, const Tensor& pred_ct, const Tensor& gt_ct);

// Mean absolute difference between two code tensors (alignment and cycle
// terms share this form).
Tensor code_l1(const Tensor& a, const Tensor& b);

// KL(q || N(0, I)) for per-frame diagonal Gaussians, mu/logvar [C, T]:
// 0.5 * sum_C(exp(lv) + mu^2 - 1 - lv), averaged over frames.
Tensor kl_normal_loss(const Tensor& mu, const Tensor& logvar);

// Negated mean per-joint position distance between two generated motions,
// capped: -min(position_loss, cap).
Tensor diversity_loss(const Tensor& pos_a, const Tensor& pos_b, double cap = 50.0);

}  // namespace glab
