#include "core/losses.hpp"

#include "core/grad_check.hpp"
#include "core/kinematics.hpp"
#include "core/op_suite.hpp"

namespace glab {

static void check_pair(const Tensor& a, const Tensor& b, int64_t ndim, const char* what) {
  if (a.ndim() != ndim || b.ndim() != ndim || a.shape() != b.shape())
    fail(Status::shape_mismatch, std::string(what) + " needs matching " + std::to_string(ndim) +
                                     "-d inputs, got " + shape_str(a.shape()) + " and " +
                                     shape_str(b.shape()));
}

Tensor per_joint_l1(const Tensor& pred_pos, const Tensor& gt_pos) {
  check_pair(pred_pos, gt_pos, 3, "per_joint_l1");
  return sum(abs(sub(pred_pos, gt_pos)), {2});
}

Tensor rotation_loss(const Tensor& pred6d, const Tensor& gt6d) {
  check_pair(pred6d, gt6d, 3, "rotation_loss");
  if (pred6d.dim(2) != 6)
    fail(Status::shape_mismatch, "rotation_loss expects [T, J, 6], got " +
                                     shape_str(pred6d.shape()));
  const int64_t T = pred6d.dim(0), J = pred6d.dim(1);
  std::vector<Tensor> per_joint;
  per_joint.reserve(static_cast<size_t>(J));
  for (int64_t j = 0; j < J; ++j) {
    const Tensor p = reshape(slice(pred6d, 1, j, j + 1), {T, 6});
    const Tensor g = reshape(slice(gt6d, 1, j, j + 1), {T, 6});
    const Tensor rp = sixd_to_rotmat_t(p, "rotation_loss prediction joint " + std::to_string(j));
    const Tensor rg = sixd_to_rotmat_t(g, "rotation_loss target joint " + std::to_string(j));
    per_joint.push_back(geodesic_t(rg, rp));  // [T, 1]
  }
  return mean_all(concat(per_joint, 1));
}

Tensor position_loss(const Tensor& pred_pos, const Tensor& gt_pos) {
  return mean_all(per_joint_l1(pred_pos, gt_pos));
}

Tensor speed_loss(const Tensor& pred_pos, const Tensor& gt_pos) {
  check_pair(pred_pos, gt_pos, 3, "speed_loss");
  if (pred_pos.dim(0) < 2) fail(Status::invalid_argument, "speed_loss needs at least 2 frames");
  return position_loss(time_diff_t(pred_pos), time_diff_t(gt_pos));
}

MotionLossTerms motion_loss(const Tensor& pred6d, const Tensor& gt6d, const Tensor& pred_pos,
                            const Tensor& gt_pos, const MotionLossWeights& w) {
  MotionLossTerms t;
  t.position = position_loss(pred_pos, gt_pos);
  t.speed = speed_loss(pred_pos, gt_pos);
  t.total = add(mul_scalar(t.position, w.position), mul_scalar(t.speed, w.speed));
  if (pred6d.defined() || gt6d.defined()) {
    t.rotation = rotation_loss(pred6d, gt6d);
    t.total = add(t.total, mul_scalar(t.rotation, w.rotation));
  }
  return t;
}

Tensor relaxed_position_loss(const Tensor& pred_pos, const Tensor& gt_pos, double rho) {
  if (rho < 0) fail(Status::invalid_argument, "relaxed_position_loss rho must be >= 0");
  return mean_all(relu(add_scalar(per_joint_l1(pred_pos, gt_pos), -rho)));
}

// Every (joint, coordinate) time series of a [T, J, D] tensor, as [T].
static std::vector<Tensor> coordinate_series(const Tensor& pos) {
  const int64_t T = pos.dim(0), J = pos.dim(1), D = pos.dim(2);
  std::vector<Tensor> out;
  out.reserve(static_cast<size_t>(J * D));
  for (int64_t j = 0; j < J; ++j) {
    const Tensor joint = reshape(slice(pos, 1, j, j + 1), {T, D});
    for (int64_t d = 0; d < D; ++d) out.push_back(reshape(slice(joint, 1, d, d + 1), {T}));
  }
  return out;
}

Tensor stft_loss(const Tensor& pred_pos, const Tensor& gt_pos, const StftSpec& spec) {
  check_pair(pred_pos, gt_pos, 3, "stft_loss");
  if (pred_pos.dim(0) < spec.window)
    fail(Status::invalid_argument,
         "stft_loss needs at least " + std::to_string(spec.window) + " frames, got " +
             std::to_string(pred_pos.dim(0)));
  const auto ps = coordinate_series(pred_pos);
  const auto gs = coordinate_series(gt_pos);
  Tensor acc;
  for (size_t i = 0; i < ps.size(); ++i) {
    const Tensor d =
        mean_all(abs(sub(stft_log_magnitude_t(ps[i], spec), stft_log_magnitude_t(gs[i], spec))));
    acc = acc.defined() ? add(acc, d) : d;
  }
  return mul_scalar(acc, 1.0 / static_cast<double>(ps.size()));
}

Tensor ssim_loss(const Tensor& pred_pos, const Tensor& gt_pos) {
  check_pair(pred_pos, gt_pos, 3, "ssim_loss");
  const int64_t T = pred_pos.dim(0);
  if (T < 2) fail(Status::invalid_argument, "ssim_loss needs at least 2 frames");
  constexpr double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03, c3 = c2 / 2.0;
  const double norm = 1.0 / static_cast<double>(T - 1);

  const auto ps = coordinate_series(pred_pos);
  const auto gs = coordinate_series(gt_pos);
  Tensor acc;
  for (size_t i = 0; i < ps.size(); ++i) {
    const Tensor mx = mean(ps[i], {0}, true);  // [1]
    const Tensor my = mean(gs[i], {0}, true);
    const Tensor dx = sub(ps[i], mx);
    const Tensor dy = sub(gs[i], my);
    const Tensor vx = mul_scalar(sum(square(dx), {0}, true), norm);
    const Tensor vy = mul_scalar(sum(square(dy), {0}, true), norm);
    const Tensor cov = mul_scalar(sum(mul(dx, dy), {0}, true), norm);
    const Tensor sx = sqrt(add_scalar(vx, 1e-12));
    const Tensor sy = sqrt(add_scalar(vy, 1e-12));
    const Tensor lum = div(add_scalar(mul_scalar(mul(mx, my), 2.0), c1),
                           add_scalar(add(square(mx), square(my)), c1));
    const Tensor con = div(add_scalar(mul_scalar(mul(sx, sy), 2.0), c2),
                           add_scalar(add(vx, vy), c2));
    const Tensor str = div(add_scalar(cov, c3), add_scalar(mul(sx, sy), c3));
    const Tensor s = mul(mul(lum, con), str);
    acc = acc.defined() ? add(acc, s) : s;
  }
  const Tensor mean_ssim = mul_scalar(acc, 1.0 / static_cast<double>(ps.size()));
  return add_scalar(neg(mean_ssim), 1.0);
}

Tensor perceptual_loss(const FeatureExtractor& ex, const Tensor& pred_ct, const Tensor& gt_ct) {
  check_pair(pred_ct, gt_ct, 2, "perceptual_loss");
  const auto fp = ex.encode_features(pred_ct);
  const auto fg = ex.encode_features(gt_ct);
  Tensor acc;
  for (size_t b = 0; b < fp.size(); ++b) {
    const Tensor per_frame = sum(square(sub(fp[b], fg[b])), {0});  // [T]
    const Tensor d = mean_all(per_frame);
    acc = acc.defined() ? add(acc, d) : d;
  }
  return acc;
}

Tensor code_l1(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape())
    fail(Status::shape_mismatch, "code_l1 needs matching shapes, got " + shape_str(a.shape()) +
                                     " and " + shape_str(b.shape()));
  return mean_all(abs(sub(a, b)));
}

Tensor kl_normal_loss(const Tensor& mu, const Tensor& logvar) {
  check_pair(mu, logvar, 2, "kl_normal_loss");
  const Tensor term = sub(sub(add(exp(logvar), square(mu)), Tensor::full(logvar.shape(), 1.0)),
                          logvar);
  return mul_scalar(mean_all(sum(term, {0})), 0.5);
}

Tensor diversity_loss(const Tensor& pos_a, const Tensor& pos_b, double cap) {
  if (cap <= 0) fail(Status::invalid_argument, "diversity_loss cap must be positive");
  return neg(clamp_max(position_loss(pos_a, pos_b), cap));
}

// ---- gradient-check registry ----

namespace {

Tensor random_tensor(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  std::vector<double> v(static_cast<size_t>(shape_numel(shape)));
  for (double& x : v) x = rng.uniform(lo, hi);
  return Tensor::from(std::move(shape), std::move(v), true);
}

Tensor random_const(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor t = random_tensor(std::move(shape), rng, lo, hi);
  t.node()->requires_grad = false;
  return t;
}

double check_vs(const std::function<Tensor(const Tensor&)>& f, const Tensor& x0) {
  return grad_check(f, x0).max_rel_err;
}

}  // namespace

std::vector<GradCase> loss_grad_cases() {
  std::vector<GradCase> cases;

  cases.push_back({"loss_rotation_geodesic", [](uint64_t seed) {
                     Rng rng(seed);
                     const Tensor gt = random_const({3, 2, 6}, rng);
                     const Tensor x0 = random_tensor({3, 2, 6}, rng);
                     return check_vs([&](const Tensor& x) { return rotation_loss(x, gt); }, x0);
                   }});
  cases.push_back({"loss_position_l1", [](uint64_t seed) {
                     Rng rng(seed);
                     const Tensor gt = random_const({4, 3, 3}, rng);
                     const Tensor x0 = random_tensor({4, 3, 3}, rng);
                     return check_vs([&](const Tensor& x) { return position_loss(x, gt); }, x0);
                   }});
  cases.push_back({"loss_speed_l1", [](uint64_t seed) {
                     Rng rng(seed);
                     const Tensor gt = random_const({5, 2, 3}, rng);
                     const Tensor x0 = random_tensor({5, 2, 3}, rng);
                     return check_vs([&](const Tensor& x) { return speed_loss(x, gt); }, x0);
                   }});
  cases.push_back({"loss_relaxed_hinge", [](uint64_t seed) {
                     Rng rng(seed);
                     const Tensor gt = random_const({4, 3, 3}, rng);
                     const Tensor x0 = random_tensor({4, 3, 3}, rng);
                     return check_vs(
                         [&](const Tensor& x) { return relaxed_position_loss(x, gt, 0.35); }, x0);
                   }});
  cases.push_back({"loss_stft_log_magnitude", [](uint64_t seed) {
                     Rng rng(seed);
                     const Tensor gt = random_const({40, 1, 2}, rng);
                     const Tensor x0 = random_tensor({40, 1, 2}, rng);
                     return check_vs([&](const Tensor& x) { return stft_loss(x, gt); }, x0);
                   }});
  cases.push_back({"loss_ssim", [](uint64_t seed) {
                     Rng rng(seed);
                     const Tensor gt = random_const({6, 2, 2}, rng);
                     const Tensor x0 = random_tensor({6, 2, 2}, rng);
                     return check_vs([&](const Tensor& x) { return ssim_loss(x, gt); }, x0);
                   }});
  cases.push_back({"loss_perceptual", [](uint64_t seed) {
                     Rng rng(seed);
                     ExtractorConfig cfg;
                     cfg.input_dim = 4;
                     cfg.channels = {4, 4, 4, 128, 4};
                     cfg.decoder_channels = {4};
                     const FeatureExtractor ex = FeatureExtractor::create(cfg, seed, false);
                     const Tensor gt = random_const({4, 6}, rng);
                     const Tensor x0 = random_tensor({4, 6}, rng);
                     return check_vs([&](const Tensor& x) { return perceptual_loss(ex, x, gt); },
                                     x0);
                   }});
  cases.push_back({"loss_kl_normal", [](uint64_t seed) {
                     Rng rng(seed);
                     // One packed input: rows [0, C) are mu, rows [C, 2C) logvar.
                     const Tensor x0 = random_tensor({6, 4}, rng);
                     return check_vs(
                         [&](const Tensor& x) {
                           return kl_normal_loss(slice(x, 0, 0, 3), slice(x, 0, 3, 6));
                         },
                         x0);
                   }});
  cases.push_back({"loss_alignment_l1", [](uint64_t seed) {
                     Rng rng(seed);
                     const Tensor gt = random_const({8, 5}, rng);
                     const Tensor x0 = random_tensor({8, 5}, rng);
                     return check_vs([&](const Tensor& x) { return code_l1(x, gt); }, x0);
                   }});
  cases.push_back({"loss_cycle_l1", [](uint64_t seed) {
                     Rng rng(seed);
                     const Tensor gt = random_const({16, 3}, rng);
                     const Tensor x0 = random_tensor({16, 3}, rng);
                     return check_vs([&](const Tensor& x) { return code_l1(gt, x); }, x0);
                   }});
  cases.push_back({"loss_diversity_uncapped", [](uint64_t seed) {
                     Rng rng(seed);
                     const Tensor gt = random_const({4, 3, 3}, rng);
                     const Tensor x0 = random_tensor({4, 3, 3}, rng);
                     return check_vs([&](const Tensor& x) { return diversity_loss(x, gt, 50.0); },
                                     x0);
                   }});
  cases.push_back({"loss_diversity_capped", [](uint64_t seed) {
                     Rng rng(seed);
                     const Tensor gt = random_const({4, 3, 3}, rng);
                     const Tensor x0 = random_tensor({4, 3, 3}, rng);
                     // Cap far below the expected distance: gradient is exactly zero.
                     return check_vs([&](const Tensor& x) { return diversity_loss(x, gt, 1e-3); },
                                     x0);
                   }});
  return cases;
}

}  // namespace glab
