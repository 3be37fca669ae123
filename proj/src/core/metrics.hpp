#pragma once

#include <map>
#include <string>
#include <vector>

#include "core/extractor.hpp"
#include "core/motion.hpp"
#include "core/signal.hpp"

namespace glab {

// Evaluation metrics over plain buffers. These deliberately avoid the
// autodiff graph and, where a loss twin exists, use an independent route
// (FFT-based STFT, exact-clamp geodesic, exact sqrt of variances) so the two
// implementations can cross-check each other in tests.

// Wrist span of the reference figure, used to express position errors in a
// skeleton-independent scale.
inline constexpr double kReferenceWristSpan = 120.64;

struct EvalConfig {
  double pck_delta = 0.2;  // absolute threshold, same units as the motion
  StftSpec stft;
  int64_t diversity_window = 50;
};

// All pairwise metrics between a predicted and a reference motion of the
// same mode/shape. Keys: position_l1, position_l1_normalized, pck, speed_l1,
// accel_l1, stft_l1, ssim, rotation_geodesic (rotation mode only), lpips
// (when an extractor is supplied).
std::map<std::string, double> evaluate_pair(const Motion& pred, const Motion& ref,
                                            const FeatureExtractor* ex, const EvalConfig& cfg);

// Mean over per-pair metrics (pred[i] vs ref[i]); adds fid and diversity
// when an extractor / enough clips are available.
std::map<std::string, double> evaluate_set(const std::vector<Motion>& pred,
                                           const std::vector<Motion>& ref,
                                           const FeatureExtractor* ex, const EvalConfig& cfg);

// Time-averaged feature-block activations for one motion (the Gaussian-fit
// features of the distribution distance).
std::vector<double> clip_feature(const FeatureExtractor& ex, const Motion& m);

// Frechet distance between Gaussians fitted (unbiased covariance) to two
// feature sets, rows of equal dimension. Needs >= 2 rows per side.
double fid_from_features(const std::vector<std::vector<double>>& a,
                         const std::vector<std::vector<double>>& b);

double fid(const FeatureExtractor& ex, const std::vector<Motion>& pred,
           const std::vector<Motion>& ref);

// Pools fixed-length windows from the motions' positions, then averages all
// pairwise mean per-joint L1 distances with the 1/(N*ceil(N/2)) normalizer.
double diversity(const std::vector<Motion>& clips, int64_t window = 50);

// Same pairwise scheme within each group (motions generated from one audio),
// averaged over groups.
double multimodality(const std::vector<std::vector<Motion>>& groups);

// Joint-rotation noise sweep: decomposes every local rotation to intrinsic
// XYZ Euler angles, adds i.i.d. Gaussian noise (sigma in degrees) to each
// angle, recomposes, and measures every pair metric against the clean
// motions. One row per sigma, averaged over `seeds` independent draws.
struct NoiseRow {
  double sigma_deg = 0.0;
  std::map<std::string, double> metrics;
};

struct NoiseResult {
  double pck_delta = 0.0;
  std::vector<NoiseRow> rows;
};

NoiseResult noise_experiment(const std::vector<Motion>& clean,
                             const std::vector<double>& sigmas_deg, double pck_delta,
                             int64_t seeds, uint64_t seed);

// Mean per-frame, per-joint L1 norm of the position first differences: how
// fast the figure moves on average.
double mean_speed(const Motion& m);

}  // namespace glab
