#include "core/metrics.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "core/rotation.hpp"

namespace glab {

namespace {

void check_same_layout(const Motion& pred, const Motion& ref, const char* what) {
  if (pred.mode != ref.mode || pred.frames != ref.frames || pred.joints != ref.joints ||
      pred.dims != ref.dims)
    fail(Status::shape_mismatch, std::string(what) + ": motions disagree in mode or shape");
}

// positions: row-major [T, J, D]
double mean_per_joint_l1(const std::vector<double>& a, const std::vector<double>& b, int64_t t,
                         int64_t j, int64_t d) {
  double acc = 0.0;
  for (size_t i = 0; i < a.size(); ++i) acc += std::fabs(a[i] - b[i]);
  return acc / static_cast<double>(t * j);
}

std::vector<double> first_diff(const std::vector<double>& pos, int64_t t, int64_t jd) {
  std::vector<double> out(static_cast<size_t>((t - 1) * jd));
  for (int64_t f = 0; f + 1 < t; ++f)
    for (int64_t k = 0; k < jd; ++k)
      out[static_cast<size_t>(f * jd + k)] =
          pos[static_cast<size_t>((f + 1) * jd + k)] - pos[static_cast<size_t>(f * jd + k)];
  return out;
}

double pck_fraction(const std::vector<double>& a, const std::vector<double>& b, int64_t t,
                    int64_t j, int64_t d, double delta) {
  int64_t hits = 0;
  for (int64_t f = 0; f < t; ++f)
    for (int64_t jj = 0; jj < j; ++jj) {
      double sq = 0.0;
      for (int64_t k = 0; k < d; ++k) {
        const double diff = a[static_cast<size_t>((f * j + jj) * d + k)] -
                            b[static_cast<size_t>((f * j + jj) * d + k)];
        sq += diff * diff;
      }
      if (std::sqrt(sq) <= delta) ++hits;
    }
  return static_cast<double>(hits) / static_cast<double>(t * j);
}

// Mean |log magnitude| STFT difference over joint coordinate series, using
// the FFT route (the loss twin goes through DFT matrices instead).
double stft_metric(const std::vector<double>& a, const std::vector<double>& b, int64_t t,
                   int64_t jd, const StftSpec& spec) {
  if (t < spec.window)
    fail(Status::invalid_argument, "stft metric needs at least " + std::to_string(spec.window) +
                                       " frames, got " + std::to_string(t));
  auto log_mag = [&](const std::vector<double>& series) {
    std::vector<double> m = stft_magnitude(series, spec);
    for (double& v : m) v = std::log(std::max(v, 1e-10));
    return m;
  };
  double acc = 0.0;
  int64_t count = 0;
  std::vector<double> series(static_cast<size_t>(t));
  std::vector<double> sa, sb;
  for (int64_t k = 0; k < jd; ++k) {
    for (int64_t f = 0; f < t; ++f) series[static_cast<size_t>(f)] = a[static_cast<size_t>(f * jd + k)];
    sa = log_mag(series);
    for (int64_t f = 0; f < t; ++f) series[static_cast<size_t>(f)] = b[static_cast<size_t>(f * jd + k)];
    sb = log_mag(series);
    for (size_t i = 0; i < sa.size(); ++i) acc += std::fabs(sa[i] - sb[i]);
    count += static_cast<int64_t>(sa.size());
  }
  return acc / static_cast<double>(count);
}

// Structural similarity over one series pair; exact sqrt (no epsilon) since
// no gradient flows here.
double ssim_series(const double* x, const double* y, int64_t t) {
  constexpr double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03, c3 = c2 / 2.0;
  double mx = 0.0, my = 0.0;
  for (int64_t i = 0; i < t; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(t);
  my /= static_cast<double>(t);
  double vx = 0.0, vy = 0.0, cov = 0.0;
  for (int64_t i = 0; i < t; ++i) {
    vx += (x[i] - mx) * (x[i] - mx);
    vy += (y[i] - my) * (y[i] - my);
    cov += (x[i] - mx) * (y[i] - my);
  }
  const double norm = 1.0 / static_cast<double>(t - 1);
  vx *= norm;
  vy *= norm;
  cov *= norm;
  const double sx = std::sqrt(vx), sy = std::sqrt(vy);
  const double lum = (2.0 * mx * my + c1) / (mx * mx + my * my + c1);
  const double con = (2.0 * sx * sy + c2) / (vx + vy + c2);
  const double str = (cov + c3) / (sx * sy + c3);
  return lum * con * str;
}

double ssim_metric(const std::vector<double>& a, const std::vector<double>& b, int64_t t,
                   int64_t jd) {
  if (t < 2) fail(Status::invalid_argument, "ssim metric needs at least 2 frames");
  std::vector<double> sx(static_cast<size_t>(t)), sy(static_cast<size_t>(t));
  double acc = 0.0;
  for (int64_t k = 0; k < jd; ++k) {
    for (int64_t f = 0; f < t; ++f) {
      sx[static_cast<size_t>(f)] = a[static_cast<size_t>(f * jd + k)];
      sy[static_cast<size_t>(f)] = b[static_cast<size_t>(f * jd + k)];
    }
    acc += ssim_series(sx.data(), sy.data(), t);
  }
  return acc / static_cast<double>(jd);
}

double rotation_metric(const Motion& pred, const Motion& ref) {
  double acc = 0.0;
  for (int64_t f = 0; f < pred.frames; ++f)
    for (int64_t j = 0; j < pred.joints; ++j) {
      const size_t off = static_cast<size_t>((f * pred.joints + j) * 6);
      const Eigen::Matrix3d rp = sixd_to_rotmat(&pred.data[off], "prediction");
      const Eigen::Matrix3d rr = sixd_to_rotmat(&ref.data[off], "reference");
      acc += geodesic_distance(rr, rp);
    }
  return acc / static_cast<double>(pred.frames * pred.joints);
}

// Time-pooled perceptual distance: squared L2 between the per-block
// time-averaged features, summed over blocks (the loss twin averages
// per-frame distances instead).
double lpips_metric(const FeatureExtractor& ex, const Motion& pred, const Motion& ref) {
  NoRecord guard;
  const auto fp = ex.encode_features(motion_channels_t(pred));
  const auto fr = ex.encode_features(motion_channels_t(ref));
  double total = 0.0;
  for (size_t b = 0; b < fp.size(); ++b) {
    const int64_t c = fp[b].dim(0), t = fp[b].dim(1);
    const auto& vp = fp[b].values();
    const auto& vr = fr[b].values();
    for (int64_t ch = 0; ch < c; ++ch) {
      double mp = 0.0, mr = 0.0;
      for (int64_t f = 0; f < t; ++f) {
        mp += vp[static_cast<size_t>(ch * t + f)];
        mr += vr[static_cast<size_t>(ch * t + f)];
      }
      mp /= static_cast<double>(t);
      mr /= static_cast<double>(t);
      total += (mp - mr) * (mp - mr);
    }
  }
  return total;
}

}  // namespace

std::map<std::string, double> evaluate_pair(const Motion& pred, const Motion& ref,
                                            const FeatureExtractor* ex, const EvalConfig& cfg) {
  pred.validate();
  ref.validate();
  check_same_layout(pred, ref, "evaluate_pair");

  const std::vector<double> pp = pred.positions();
  const std::vector<double> rp = ref.positions();
  const int64_t t = pred.frames, j = pred.joints, d = pred.position_dims();
  const int64_t jd = j * d;

  std::map<std::string, double> m;
  m["position_l1"] = mean_per_joint_l1(pp, rp, t, j, d);
  if (pred.mode == MotionMode::rotations6d) {
    const double span = pred.skeleton.rest_wrist_span();
    if (span > 0) m["position_l1_normalized"] = m["position_l1"] * kReferenceWristSpan / span;
    m["rotation_geodesic"] = rotation_metric(pred, ref);
  }
  m["pck"] = pck_fraction(pp, rp, t, j, d, cfg.pck_delta);
  if (t >= 2) {
    const auto vp = first_diff(pp, t, jd), vr = first_diff(rp, t, jd);
    m["speed_l1"] = mean_per_joint_l1(vp, vr, t - 1, j, d);
    if (t >= 3) {
      const auto ap = first_diff(vp, t - 1, jd), ar = first_diff(vr, t - 1, jd);
      m["accel_l1"] = mean_per_joint_l1(ap, ar, t - 2, j, d);
    }
  }
  if (t >= cfg.stft.window) m["stft_l1"] = stft_metric(pp, rp, t, jd, cfg.stft);
  if (t >= 2) m["ssim"] = ssim_metric(pp, rp, t, jd);
  if (ex != nullptr) m["lpips"] = lpips_metric(*ex, pred, ref);
  return m;
}

std::map<std::string, double> evaluate_set(const std::vector<Motion>& pred,
                                           const std::vector<Motion>& ref,
                                           const FeatureExtractor* ex, const EvalConfig& cfg) {
  if (pred.size() != ref.size() || pred.empty())
    fail(Status::invalid_argument, "evaluate_set needs equal-sized, non-empty motion sets");
  std::map<std::string, double> acc;
  std::map<std::string, int64_t> counts;
  for (size_t i = 0; i < pred.size(); ++i)
    for (const auto& [k, v] : evaluate_pair(pred[i], ref[i], ex, cfg)) {
      acc[k] += v;
      counts[k] += 1;
    }
  for (auto& [k, v] : acc) v /= static_cast<double>(counts[k]);
  if (ex != nullptr && pred.size() >= 2) acc["fid"] = fid(*ex, pred, ref);
  if (static_cast<int64_t>(pred.size()) * pred.front().frames >= 2 * cfg.diversity_window)
    acc["diversity"] = diversity(pred, cfg.diversity_window);
  return acc;
}

std::vector<double> clip_feature(const FeatureExtractor& ex, const Motion& m) {
  NoRecord guard;
  const Tensor feat = ex.features(motion_channels_t(m));
  const int64_t c = feat.dim(0), t = feat.dim(1);
  std::vector<double> out(static_cast<size_t>(c), 0.0);
  const auto& v = feat.values();
  for (int64_t ch = 0; ch < c; ++ch) {
    double s = 0.0;
    for (int64_t f = 0; f < t; ++f) s += v[static_cast<size_t>(ch * t + f)];
    out[static_cast<size_t>(ch)] = s / static_cast<double>(t);
  }
  return out;
}

double fid_from_features(const std::vector<std::vector<double>>& a,
                         const std::vector<std::vector<double>>& b) {
  if (a.size() < 2 || b.size() < 2)
    fail(Status::invalid_argument, "fid needs at least 2 feature rows per side");
  const int64_t dim = static_cast<int64_t>(a.front().size());
  for (const auto& set : {&a, &b})
    for (const auto& row : *set)
      if (static_cast<int64_t>(row.size()) != dim)
        fail(Status::shape_mismatch, "fid feature rows have inconsistent dimensions");

  auto fit = [dim](const std::vector<std::vector<double>>& rows, Eigen::VectorXd& mu,
                   Eigen::MatrixXd& cov) {
    const int64_t n = static_cast<int64_t>(rows.size());
    Eigen::MatrixXd x(n, dim);
    for (int64_t i = 0; i < n; ++i)
      for (int64_t k = 0; k < dim; ++k) x(i, k) = rows[static_cast<size_t>(i)][static_cast<size_t>(k)];
    mu = x.colwise().mean();
    const Eigen::MatrixXd centered = x.rowwise() - mu.transpose();
    cov = centered.transpose() * centered / static_cast<double>(n - 1);
  };

  Eigen::VectorXd mu1, mu2;
  Eigen::MatrixXd s1, s2;
  fit(a, mu1, s1);
  fit(b, mu2, s2);

  // tr((s1 s2)^{1/2}) through the symmetric product s1^{1/2} s2 s1^{1/2};
  // tiny negative eigenvalues from rank-deficient fits clamp to zero.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es1(s1);
  Eigen::VectorXd ev1 = es1.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  const Eigen::MatrixXd s1h = es1.eigenvectors() * ev1.asDiagonal() * es1.eigenvectors().transpose();
  Eigen::MatrixXd inner = s1h * s2 * s1h;
  inner = 0.5 * (inner + inner.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es2(inner);
  const double tr_sqrt = es2.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();

  const double mean_term = (mu1 - mu2).squaredNorm();
  return mean_term + s1.trace() + s2.trace() - 2.0 * tr_sqrt;
}

double fid(const FeatureExtractor& ex, const std::vector<Motion>& pred,
           const std::vector<Motion>& ref) {
  std::vector<std::vector<double>> fa, fb;
  fa.reserve(pred.size());
  fb.reserve(ref.size());
  for (const Motion& m : pred) fa.push_back(clip_feature(ex, m));
  for (const Motion& m : ref) fb.push_back(clip_feature(ex, m));
  return fid_from_features(fa, fb);
}

namespace {

// Mean per-joint L1 between two equal-shape position windows.
double window_distance(const std::vector<double>& a, const std::vector<double>& b, int64_t t,
                       int64_t j) {
  double acc = 0.0;
  for (size_t i = 0; i < a.size(); ++i) acc += std::fabs(a[i] - b[i]);
  return acc / static_cast<double>(t * j);
}

double pairwise_normalized(const std::vector<std::vector<double>>& windows, int64_t t, int64_t j) {
  const int64_t n = static_cast<int64_t>(windows.size());
  if (n < 2) fail(Status::invalid_argument, "pairwise distance needs at least 2 clips");
  double acc = 0.0;
  for (int64_t p = 0; p < n; ++p)
    for (int64_t q = p + 1; q < n; ++q)
      acc += window_distance(windows[static_cast<size_t>(p)], windows[static_cast<size_t>(q)], t, j);
  // Normalizer kept as N * ceil(N/2) rather than the pair count.
  return acc / (static_cast<double>(n) * std::ceil(static_cast<double>(n) / 2.0));
}

}  // namespace

double diversity(const std::vector<Motion>& clips, int64_t window) {
  if (clips.empty()) fail(Status::invalid_argument, "diversity needs motions");
  const int64_t j = clips.front().joints, d = clips.front().position_dims();
  std::vector<std::vector<double>> windows;
  for (const Motion& m : clips) {
    if (m.joints != j || m.position_dims() != d)
      fail(Status::shape_mismatch, "diversity motions disagree in joint layout");
    const std::vector<double> pos = m.positions();
    for (int64_t start = 0; start + window <= m.frames; start += window)
      windows.emplace_back(pos.begin() + start * j * d, pos.begin() + (start + window) * j * d);
  }
  if (windows.size() < 2)
    fail(Status::invalid_argument,
         "diversity needs at least 2 windows of " + std::to_string(window) + " frames");
  return pairwise_normalized(windows, window, j);
}

double multimodality(const std::vector<std::vector<Motion>>& groups) {
  if (groups.empty()) fail(Status::invalid_argument, "multimodality needs groups");
  double acc = 0.0;
  for (const auto& g : groups) {
    if (g.size() < 2)
      fail(Status::invalid_argument, "multimodality needs at least 2 motions per group");
    const int64_t t = g.front().frames, j = g.front().joints;
    std::vector<std::vector<double>> windows;
    windows.reserve(g.size());
    for (const Motion& m : g) {
      if (m.frames != t || m.joints != g.front().joints)
        fail(Status::shape_mismatch, "multimodality group motions disagree in shape");
      windows.push_back(m.positions());
    }
    acc += pairwise_normalized(windows, t, j);
  }
  return acc / static_cast<double>(groups.size());
}

NoiseResult noise_experiment(const std::vector<Motion>& clean,
                             const std::vector<double>& sigmas_deg, double pck_delta,
                             int64_t seeds, uint64_t seed) {
  if (clean.empty()) fail(Status::invalid_argument, "noise experiment needs motions");
  if (seeds < 1) fail(Status::invalid_argument, "noise experiment needs seeds >= 1");
  for (const Motion& m : clean)
    if (m.mode != MotionMode::rotations6d)
      fail(Status::invalid_argument, "noise experiment needs rotation motions");

  NoiseResult result;
  result.pck_delta = pck_delta;
  EvalConfig cfg;
  cfg.pck_delta = pck_delta;

  for (size_t si = 0; si < sigmas_deg.size(); ++si) {
    const double sigma = sigmas_deg[si] * M_PI / 180.0;
    NoiseRow row;
    row.sigma_deg = sigmas_deg[si];
    for (int64_t k = 0; k < seeds; ++k) {
      for (size_t mi = 0; mi < clean.size(); ++mi) {
        Rng rng(mix_seed(seed, mix_seed(static_cast<uint64_t>(si),
                                        mix_seed(static_cast<uint64_t>(k),
                                                 static_cast<uint64_t>(mi)))));
        Motion noisy = clean[mi];
        for (int64_t f = 0; f < noisy.frames; ++f)
          for (int64_t j = 0; j < noisy.joints; ++j) {
            const size_t off = static_cast<size_t>((f * noisy.joints + j) * 6);
            const Eigen::Matrix3d r = sixd_to_rotmat(&noisy.data[off], "noise experiment");
            Eigen::Vector3d e = rotmat_to_euler_xyz(r);
            e[0] += sigma * rng.normal();
            e[1] += sigma * rng.normal();
            e[2] += sigma * rng.normal();
            rotmat_to_sixd(euler_xyz_to_rotmat(e), &noisy.data[off]);
          }
        for (const auto& [key, value] : evaluate_pair(noisy, clean[mi], nullptr, cfg))
          row.metrics[key] += value;
      }
    }
    const double n = static_cast<double>(seeds) * static_cast<double>(clean.size());
    for (auto& [key, value] : row.metrics) value /= n;
    result.rows.push_back(row);
  }
  return result;
}

double mean_speed(const Motion& m) {
  if (m.frames < 2) fail(Status::invalid_argument, "mean_speed needs at least 2 frames");
  const std::vector<double> pos = m.positions();
  const int64_t jd = m.joints * m.position_dims();
  const std::vector<double> diff = first_diff(pos, m.frames, jd);
  double acc = 0.0;
  for (double v : diff) acc += std::fabs(v);
  return acc / static_cast<double>((m.frames - 1) * m.joints);
}

}  // namespace glab
