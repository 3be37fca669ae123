#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "core/dataset.hpp"
#include "core/losses.hpp"
#include "core/metrics.hpp"
#include "core/rng.hpp"
#include "core/rotation.hpp"

using namespace glab;

namespace {

Motion positions_motion(int64_t t, int64_t j, int64_t d, std::vector<double> data) {
  Motion m;
  m.mode = MotionMode::positions;
  m.frames = t;
  m.joints = j;
  m.dims = d;
  m.data = std::move(data);
  return m;
}

Motion random_positions_motion(int64_t t, int64_t j, int64_t d, Rng& rng, double scale = 1.0) {
  std::vector<double> v(static_cast<size_t>(t * j * d));
  for (double& x : v) x = rng.uniform(-scale, scale);
  return positions_motion(t, j, d, std::move(v));
}

// Rotation clip on the stock figure; every joint gets the same z-rotation.
Motion rotation_motion(int64_t t, double angle) {
  Motion m;
  m.mode = MotionMode::rotations6d;
  m.has_skeleton = true;
  m.skeleton = default_skeleton();
  m.frames = t;
  m.joints = m.skeleton.joints();
  m.dims = 6;
  m.data.resize(static_cast<size_t>(t * m.joints * 6));
  const Eigen::Matrix3d r = axis_angle_to_rotmat(Eigen::Vector3d::UnitZ(), angle);
  for (int64_t f = 0; f < t; ++f)
    for (int64_t j = 0; j < m.joints; ++j)
      rotmat_to_sixd(r, &m.data[static_cast<size_t>((f * m.joints + j) * 6)]);
  return m;
}

}  // namespace

TEST_CASE("identical motions score perfectly") {
  Rng rng(3);
  const Motion m = random_positions_motion(60, 2, 3, rng);
  const auto r = evaluate_pair(m, m, nullptr, {});
  CHECK(r.at("position_l1") == 0.0);
  CHECK(r.at("pck") == 1.0);
  CHECK(r.at("speed_l1") == 0.0);
  CHECK(r.at("accel_l1") == 0.0);
  CHECK(r.at("stft_l1") == 0.0);
  CHECK(r.at("ssim") == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(r.count("rotation_geodesic") == 0);  // positions mode
}

TEST_CASE("position l1 hand value") {
  const Motion gt = positions_motion(1, 2, 3, {0, 0, 0, 1, 1, 1});
  const Motion pred = positions_motion(1, 2, 3, {1, 0.5, 0, 1, 1, 1});
  const auto r = evaluate_pair(pred, gt, nullptr, {});
  // joint 0 coordinate error sums to 1.5, joint 1 to 0; averaged over 2 joints
  CHECK(r.at("position_l1") == doctest::Approx(0.75).epsilon(1e-12));
}

TEST_CASE("pck counts joints inside the radius, inclusive") {
  const Motion gt = positions_motion(1, 2, 3, {0, 0, 0, 0, 0, 0});
  EvalConfig cfg;
  cfg.pck_delta = 0.2;

  Motion pred = positions_motion(1, 2, 3, {0.1, 0, 0, 0.3, 0, 0});
  CHECK(evaluate_pair(pred, gt, nullptr, cfg).at("pck") == doctest::Approx(0.5).epsilon(1e-12));

  pred = positions_motion(1, 2, 3, {0.2, 0, 0, 0.12, 0.12, 0.12});
  // |(0.2,0,0)| == delta counts; |(0.12,0.12,0.12)| ~ 0.2078 > delta misses
  CHECK(evaluate_pair(pred, gt, nullptr, cfg).at("pck") == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("speed and accel hand values") {
  // one joint moving along x: positions 0, 1, 3 (speed 1, 2; accel 1)
  const Motion pred = positions_motion(3, 1, 3, {0, 0, 0, 1, 0, 0, 3, 0, 0});
  const Motion gt = positions_motion(3, 1, 3, {0, 0, 0, 0, 0, 0, 0, 0, 0});
  const auto r = evaluate_pair(pred, gt, nullptr, {});
  CHECK(r.at("speed_l1") == doctest::Approx(1.5).epsilon(1e-12));  // (1 + 2) / 2
  CHECK(r.at("accel_l1") == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("rotation clips add geodesic and normalized position errors") {
  const Motion ref = rotation_motion(3, 0.0);
  const Motion pred = rotation_motion(3, 0.25);
  const auto r = evaluate_pair(pred, ref, nullptr, {});
  CHECK(r.at("rotation_geodesic") == doctest::Approx(0.25).epsilon(1e-9));
  CHECK(r.at("position_l1") > 0.0);
  // stock figure wrist span is 60, reference span 120.64
  CHECK(r.at("position_l1_normalized") ==
        doctest::Approx(r.at("position_l1") * 120.64 / 60.0).epsilon(1e-12));
}

TEST_CASE("ssim metric hand value for constant series") {
  const Motion pred = positions_motion(4, 1, 2, {0.5, 0.3, 0.5, 0.3, 0.5, 0.3, 0.5, 0.3});
  const Motion gt = positions_motion(4, 1, 2, {0.25, 0.3, 0.25, 0.3, 0.25, 0.3, 0.25, 0.3});
  // zero variance collapses contrast and structure to 1 on the exact-sqrt
  // route, so the offset series contributes its luminance and the matching
  // series contributes exactly 1
  const double lum = (2 * 0.5 * 0.25 + 1e-4) / (0.25 + 0.0625 + 1e-4);
  CHECK(evaluate_pair(pred, gt, nullptr, {}).at("ssim") ==
        doctest::Approx(0.5 * (lum + 1.0)).epsilon(1e-12));
}

TEST_CASE("stft metric agrees with the differentiable loss route") {
  Rng rng(5);
  const Motion pred = random_positions_motion(48, 2, 2, rng);
  const Motion gt = random_positions_motion(48, 2, 2, rng);
  const double metric = evaluate_pair(pred, gt, nullptr, {}).at("stft_l1");
  const double loss = stft_loss(Tensor::from({48, 2, 2}, pred.data),
                                Tensor::from({48, 2, 2}, gt.data))
                          .item();
  CHECK(metric == doctest::Approx(loss).epsilon(1e-9));
}

TEST_CASE("fid of a set against itself is zero") {
  Rng rng(7);
  std::vector<std::vector<double>> rows(6, std::vector<double>(4));
  for (auto& r : rows)
    for (double& v : r) v = rng.uniform(-2, 2);
  CHECK(std::fabs(fid_from_features(rows, rows)) < 1e-8);
}

TEST_CASE("fid matches the closed form in two dimensions") {
  // trace((S1 S2)^(1/2)) = sqrt(tr(S1 S2) + 2 sqrt(det S1 det S2)) for 2x2
  Rng rng(9);
  std::vector<std::vector<double>> a(5, std::vector<double>(2));
  std::vector<std::vector<double>> b(7, std::vector<double>(2));
  for (auto& r : a)
    for (double& v : r) v = rng.uniform(-1, 1);
  for (auto& r : b)
    for (double& v : r) v = rng.uniform(-1, 3);

  auto fit = [](const std::vector<std::vector<double>>& rows, double mu[2], double cov[2][2]) {
    const double n = static_cast<double>(rows.size());
    mu[0] = mu[1] = 0.0;
    for (const auto& r : rows) {
      mu[0] += r[0] / n;
      mu[1] += r[1] / n;
    }
    cov[0][0] = cov[0][1] = cov[1][0] = cov[1][1] = 0.0;
    for (const auto& r : rows) {
      const double d0 = r[0] - mu[0], d1 = r[1] - mu[1];
      cov[0][0] += d0 * d0 / (n - 1);
      cov[0][1] += d0 * d1 / (n - 1);
      cov[1][1] += d1 * d1 / (n - 1);
    }
    cov[1][0] = cov[0][1];
  };
  double m1[2], m2[2], s1[2][2], s2[2][2];
  fit(a, m1, s1);
  fit(b, m2, s2);
  const double mean_term = (m1[0] - m2[0]) * (m1[0] - m2[0]) + (m1[1] - m2[1]) * (m1[1] - m2[1]);
  const double tr_prod = s1[0][0] * s2[0][0] + s1[0][1] * s2[1][0] + s1[1][0] * s2[0][1] +
                         s1[1][1] * s2[1][1];
  const double det1 = s1[0][0] * s1[1][1] - s1[0][1] * s1[1][0];
  const double det2 = s2[0][0] * s2[1][1] - s2[0][1] * s2[1][0];
  const double want = mean_term + s1[0][0] + s1[1][1] + s2[0][0] + s2[1][1] -
                      2.0 * std::sqrt(tr_prod + 2.0 * std::sqrt(det1 * det2));
  CHECK(fid_from_features(a, b) == doctest::Approx(want).epsilon(1e-9));
}

TEST_CASE("fid converges to the analytic gaussian distance") {
  // diagonal covariances: fid = |m1-m2|^2 + sum (sd1 - sd2)^2
  Rng rng(11);
  const double mu1[2] = {0.0, 1.0}, sd1[2] = {1.0, 0.5};
  const double mu2[2] = {0.5, 0.0}, sd2[2] = {0.8, 1.2};
  const int64_t n = 20000;
  std::vector<std::vector<double>> a, b;
  a.reserve(n);
  b.reserve(n);
  for (int64_t i = 0; i < n; ++i) {
    a.push_back({mu1[0] + sd1[0] * rng.normal(), mu1[1] + sd1[1] * rng.normal()});
    b.push_back({mu2[0] + sd2[0] * rng.normal(), mu2[1] + sd2[1] * rng.normal()});
  }
  const double analytic = 0.25 + 1.0 + 0.04 + 0.49;
  CHECK(fid_from_features(a, b) == doctest::Approx(analytic).epsilon(0.05));
}

TEST_CASE("fid input validation") {
  std::vector<std::vector<double>> one(1, std::vector<double>(3, 0.0));
  std::vector<std::vector<double>> two(2, std::vector<double>(3, 0.0));
  CHECK_THROWS_AS(fid_from_features(one, two), Error);
  std::vector<std::vector<double>> ragged = {{1.0, 2.0, 3.0}, {1.0, 2.0}};
  CHECK_THROWS_AS(fid_from_features(ragged, two), Error);
}

TEST_CASE("diversity matches a brute-force recount") {
  Rng rng(13);
  std::vector<Motion> clips;
  for (int i = 0; i < 3; ++i) clips.push_back(random_positions_motion(100, 2, 3, rng));
  const int64_t window = 50, j = 2, d = 3;
  const double got = diversity(clips, window);

  // plain recount: 2 windows per clip, all unordered pairs
  std::vector<std::vector<double>> wins;
  for (const Motion& m : clips)
    for (int64_t s = 0; s + window <= m.frames; s += window)
      wins.emplace_back(m.data.begin() + s * j * d, m.data.begin() + (s + window) * j * d);
  REQUIRE(wins.size() == 6);
  double acc = 0.0;
  for (size_t p = 0; p < wins.size(); ++p)
    for (size_t q = p + 1; q < wins.size(); ++q) {
      double dist = 0.0;
      for (size_t i = 0; i < wins[p].size(); ++i) dist += std::fabs(wins[p][i] - wins[q][i]);
      acc += dist / static_cast<double>(window * j);
    }
  const double want = acc / (6.0 * 3.0);  // n * ceil(n/2) with n = 6
  CHECK(got == doctest::Approx(want).epsilon(1e-12));

  CHECK_THROWS_AS(diversity({clips[0]}, 200), Error);
}

TEST_CASE("multimodality matches a brute-force recount") {
  Rng rng(17);
  std::vector<std::vector<Motion>> groups(2);
  for (auto& g : groups)
    for (int i = 0; i < 3; ++i) g.push_back(random_positions_motion(20, 2, 3, rng));
  const double got = multimodality(groups);

  double total = 0.0;
  for (const auto& g : groups) {
    double acc = 0.0;
    for (size_t p = 0; p < g.size(); ++p)
      for (size_t q = p + 1; q < g.size(); ++q) {
        double dist = 0.0;
        for (size_t i = 0; i < g[p].data.size(); ++i)
          dist += std::fabs(g[p].data[i] - g[q].data[i]);
        acc += dist / (20.0 * 2.0);
      }
    total += acc / (3.0 * 2.0);  // n * ceil(n/2) with n = 3
  }
  CHECK(got == doctest::Approx(total / 2.0).epsilon(1e-12));
}

TEST_CASE("clip features drive fid through the extractor") {
  ExtractorConfig cfg;
  cfg.input_dim = 2 * 3;  // two 3-d joints, channel-major
  cfg.channels = {8, 8, 8, 128, 8};
  cfg.decoder_channels = {8};
  const FeatureExtractor ex = FeatureExtractor::create(cfg, 42, false);

  Rng rng(19);
  const Motion a = random_positions_motion(40, 2, 3, rng);
  const auto fa = clip_feature(ex, a);
  CHECK(fa.size() == 128);

  std::vector<Motion> left, right;
  for (int i = 0; i < 4; ++i) {
    left.push_back(random_positions_motion(40, 2, 3, rng));
    right.push_back(left.back());
  }
  CHECK(std::fabs(fid(ex, left, right)) < 1e-8);
}

TEST_CASE("evaluate_set averages pairs and appends set metrics") {
  Rng rng(23);
  std::vector<Motion> pred, ref;
  for (int i = 0; i < 2; ++i) {
    pred.push_back(random_positions_motion(60, 2, 3, rng));
    ref.push_back(random_positions_motion(60, 2, 3, rng));
  }
  const auto set = evaluate_set(pred, ref, nullptr, {});
  const auto p0 = evaluate_pair(pred[0], ref[0], nullptr, {});
  const auto p1 = evaluate_pair(pred[1], ref[1], nullptr, {});
  CHECK(set.at("position_l1") ==
        doctest::Approx(0.5 * (p0.at("position_l1") + p1.at("position_l1"))).epsilon(1e-12));
  CHECK(set.count("diversity") == 1);  // 2 clips x 60 frames >= 2 windows of 50
  CHECK(set.count("fid") == 0);        // no extractor
  CHECK_THROWS_AS(evaluate_set(pred, {ref[0]}, nullptr, {}), Error);
}

TEST_CASE("noise experiment degrades cleanly from the zero row") {
  std::vector<Motion> clean;
  clean.push_back(rotation_motion(40, 0.1));
  clean.push_back(rotation_motion(40, -0.2));
  const auto res = noise_experiment(clean, {0.0, 20.0}, 3.0, 2, 77);
  REQUIRE(res.rows.size() == 2);
  CHECK(res.pck_delta == 3.0);
  CHECK(res.rows[0].sigma_deg == 0.0);
  // sigma 0 only exposes the Euler round trip, which is exact to rounding
  CHECK(res.rows[0].metrics.at("position_l1") <= 1e-9);
  CHECK(res.rows[0].metrics.at("pck") == 1.0);
  CHECK(res.rows[0].metrics.at("ssim") == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(res.rows[1].metrics.at("position_l1") > 0.1);
  CHECK(res.rows[1].metrics.at("pck") < 1.0);
  CHECK(res.rows[1].metrics.at("accel_l1") > 0.0);
  CHECK(res.rows[1].metrics.at("ssim") < res.rows[0].metrics.at("ssim"));
  CHECK(res.rows[1].metrics.at("stft_l1") > res.rows[0].metrics.at("stft_l1"));

  // deterministic in the seed
  const auto again = noise_experiment(clean, {0.0, 20.0}, 3.0, 2, 77);
  CHECK(again.rows[1].metrics.at("position_l1") == res.rows[1].metrics.at("position_l1"));

  const Motion planar = positions_motion(4, 1, 2, {0, 0, 1, 0, 2, 0, 3, 0});
  CHECK_THROWS_AS(noise_experiment({planar}, {0.0}, 3.0, 1, 1), Error);
  CHECK_THROWS_AS(noise_experiment(clean, {0.0}, 3.0, 0, 1), Error);
}

TEST_CASE("mean speed hand value") {
  const Motion m = positions_motion(3, 1, 3, {0, 0, 0, 1, 1, 0, 1, 1, 2});
  CHECK(mean_speed(m) == doctest::Approx(2.0).epsilon(1e-12));
  const Motion still = positions_motion(1, 1, 3, {0, 0, 0});
  CHECK_THROWS_AS(mean_speed(still), Error);
}
