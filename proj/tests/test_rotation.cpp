#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "core/dataset.hpp"
#include "core/grad_check.hpp"
#include "core/kinematics.hpp"
#include "core/rotation.hpp"
#include "core/skeleton.hpp"

using namespace glab;

namespace {

Eigen::Matrix3d rot_z(double a) { return axis_angle_to_rotmat(Eigen::Vector3d::UnitZ(), a); }
Eigen::Matrix3d rot_x(double a) { return axis_angle_to_rotmat(Eigen::Vector3d::UnitX(), a); }
Eigen::Matrix3d rot_y(double a) { return axis_angle_to_rotmat(Eigen::Vector3d::UnitY(), a); }

Skeleton three_joint_chain() {
  Skeleton s;
  s.joint_names = {"root", "mid", "tip"};
  s.parents = {-1, 0, 1};
  s.offsets = {{0, 0, 0}, {0, 2, 0}, {1, 0, 0}};
  s.wrists = {2, 2};
  return s;
}

}  // namespace

TEST_CASE("6d round trips through rotation matrices") {
  Rng rng(101);
  for (int i = 0; i < 50; ++i) {
    const Eigen::Matrix3d r = random_rotation(rng);
    double sixd[6];
    rotmat_to_sixd(r, sixd);
    const Eigen::Matrix3d back = sixd_to_rotmat(sixd);
    CHECK((back - r).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("gram-schmidt hand value") {
  // a = (2,0,0) normalizes to x; b = (1,1,0) projects to y; cross gives z.
  const double sixd[6] = {2, 0, 0, 1, 1, 0};
  const Eigen::Matrix3d r = sixd_to_rotmat(sixd);
  CHECK((r - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("degenerate 6d inputs raise with context") {
  const double zeros[6] = {0, 0, 0, 0, 1, 0};
  CHECK_THROWS_WITH_AS(sixd_to_rotmat(zeros, "joint l_arm"),
                       doctest::Contains("near-zero norm"), Error);
  CHECK_THROWS_WITH_AS(sixd_to_rotmat(zeros, "joint l_arm"), doctest::Contains("joint l_arm"),
                       Error);
  const double parallel[6] = {1, 0, 0, 2, 0, 0};
  CHECK_THROWS_WITH_AS(sixd_to_rotmat(parallel), doctest::Contains("parallel"), Error);
}

TEST_CASE("geodesic identities on the exact-clamp route") {
  Rng rng(77);
  const Eigen::Matrix3d r = random_rotation(rng);
  CHECK(geodesic_distance(r, r) == 0.0);  // trace hits 3 exactly after clamping
  CHECK(std::fabs(geodesic_distance(r, r * rot_z(M_PI)) - M_PI) < 1e-9);
  CHECK(std::fabs(geodesic_distance(r, r * rot_z(M_PI / 2)) - M_PI / 2) < 1e-12);
  CHECK(std::fabs(geodesic_distance(Eigen::Matrix3d::Identity(), rot_x(0.3)) - 0.3) < 1e-12);
}

TEST_CASE("euler xyz round trips, including gimbal lock") {
  Rng rng(55);
  for (int i = 0; i < 50; ++i) {
    const Eigen::Matrix3d r = random_rotation(rng);
    const Eigen::Matrix3d back = euler_xyz_to_rotmat(rotmat_to_euler_xyz(r));
    CHECK((back - r).cwiseAbs().maxCoeff() < 1e-9);
  }
  for (const double pitch : {M_PI / 2, -M_PI / 2}) {
    const Eigen::Matrix3d r = rot_x(0.3) * rot_y(pitch) * rot_z(0.2);
    const Eigen::Vector3d e = rotmat_to_euler_xyz(r);
    CHECK(e[0] == 0.0);  // x pinned at the singularity
    CHECK((euler_xyz_to_rotmat(e) - r).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("differentiable 6d conversion matches the plain route") {
  Rng rng(31);
  const int64_t T = 5;
  std::vector<double> sixd(T * 6);
  for (double& v : sixd) v = rng.uniform(-1.0, 1.0);
  const Tensor rt = sixd_to_rotmat_t(Tensor::from({T, 6}, sixd));
  for (int64_t t = 0; t < T; ++t) {
    const Eigen::Matrix3d r = sixd_to_rotmat(&sixd[static_cast<size_t>(t * 6)]);
    for (int64_t i = 0; i < 3; ++i)
      for (int64_t k = 0; k < 3; ++k)
        CHECK(std::fabs(rt.values()[static_cast<size_t>(t * 9 + i * 3 + k)] - r(i, k)) < 1e-12);
  }
}

TEST_CASE("differentiable geodesic matches the plain route away from the clamp") {
  Rng rng(32);
  const int64_t T = 8;
  std::vector<double> a6(T * 6), b6(T * 6);
  for (double& v : a6) v = rng.uniform(-1.0, 1.0);
  for (double& v : b6) v = rng.uniform(-1.0, 1.0);
  const Tensor d = geodesic_t(sixd_to_rotmat_t(Tensor::from({T, 6}, a6)),
                              sixd_to_rotmat_t(Tensor::from({T, 6}, b6)));
  for (int64_t t = 0; t < T; ++t) {
    const double plain = geodesic_distance(sixd_to_rotmat(&a6[static_cast<size_t>(t * 6)]),
                                           sixd_to_rotmat(&b6[static_cast<size_t>(t * 6)]));
    CHECK(std::fabs(d.values()[static_cast<size_t>(t)] - plain) < 1e-7);
  }
}

TEST_CASE("fk hand-computed three-joint chain") {
  const Skeleton skel = three_joint_chain();
  // root spins 90 deg about z, mid adds 90 deg about x, tip stays local-identity.
  std::vector<double> rot(3 * 6);
  rotmat_to_sixd(rot_z(M_PI / 2), &rot[0]);
  rotmat_to_sixd(rot_x(M_PI / 2), &rot[6]);
  rotmat_to_sixd(Eigen::Matrix3d::Identity(), &rot[12]);

  const std::vector<double> pos = fk_positions(skel, rot, 1);
  const double expect[9] = {0, 0, 0,   // root pinned at origin
                            0, 0, 2,   // (0,2,0) through Rz90*Rx90
                            0, 1, 2};  // tip adds (1,0,0) through the same world frame
  for (int i = 0; i < 9; ++i) CHECK(std::fabs(pos[static_cast<size_t>(i)] - expect[i]) < 1e-12);
}

TEST_CASE("fk tensor route matches the plain route") {
  const Skeleton skel = default_skeleton();
  Rng rng(88);
  const int64_t T = 4, J = skel.joints();
  std::vector<double> rot(static_cast<size_t>(T * J * 6));
  for (double& v : rot) v = rng.uniform(-1.0, 1.0);
  const std::vector<double> plain = fk_positions(skel, rot, T);
  const Tensor t = fk_positions_t(skel, Tensor::from({T, J, 6}, rot));
  REQUIRE(t.shape() == Shape{T, J, 3});
  for (size_t i = 0; i < plain.size(); ++i) CHECK(std::fabs(t.values()[i] - plain[i]) < 1e-12);
}

TEST_CASE("fk rest pose matches skeleton rest positions") {
  const Skeleton skel = default_skeleton();
  const int64_t J = skel.joints();
  std::vector<double> rot(static_cast<size_t>(J * 6), 0.0);
  for (int64_t j = 0; j < J; ++j)
    rotmat_to_sixd(Eigen::Matrix3d::Identity(), &rot[static_cast<size_t>(j * 6)]);
  const std::vector<double> pos = fk_positions(skel, rot, 1);
  const std::vector<double> rest = skel.rest_positions();
  for (size_t i = 0; i < rest.size(); ++i) CHECK(pos[i] == rest[i]);
}

TEST_CASE("fk gradient passes finite differences") {
  const Skeleton skel = three_joint_chain();
  Rng rng(89);
  std::vector<double> rot(3 * 2 * 6);
  for (double& v : rot) v = rng.uniform(-1.0, 1.0);
  Tensor x0 = Tensor::from({2, 3, 6}, rot, true);
  const auto res = grad_check(
      [&](const Tensor& x) { return mean_all(fk_positions_t(skel, x)); }, x0);
  CHECK(res.max_rel_err < 1e-4);
}

TEST_CASE("fk errors name the offending frame and joint") {
  const Skeleton skel = three_joint_chain();
  std::vector<double> rot(3 * 6, 0.0);
  rotmat_to_sixd(Eigen::Matrix3d::Identity(), &rot[0]);
  rotmat_to_sixd(Eigen::Matrix3d::Identity(), &rot[6]);
  // tip left all-zero -> degenerate
  CHECK_THROWS_WITH_AS(fk_positions_t(skel, Tensor::from({1, 3, 6}, rot)),
                       doctest::Contains("tip"), Error);
  CHECK_THROWS_WITH_AS(fk_positions(skel, rot, 1), doctest::Contains("frame 0"), Error);
}

TEST_CASE("default skeleton geometry") {
  const Skeleton s = default_skeleton();
  CHECK(s.joints() == 8);
  CHECK(s.chain_depth() == 5);
  CHECK(std::fabs(s.rest_wrist_span() - 60.0) < 1e-12);
  const std::vector<double> rest = s.rest_positions();
  // l_wrist at (30, 40, 0), r_wrist at (-30, 40, 0)
  CHECK(rest[5 * 3 + 0] == 30.0);
  CHECK(rest[5 * 3 + 1] == 40.0);
  CHECK(rest[7 * 3 + 0] == -30.0);
  CHECK(rest[7 * 3 + 1] == 40.0);
}

TEST_CASE("skeleton json round trip and validation errors") {
  const Skeleton s = default_skeleton();
  const Skeleton back = skeleton_from_json(skeleton_to_json(s));
  CHECK(back.joint_names == s.joint_names);
  CHECK(back.parents == s.parents);
  CHECK(back.wrists == s.wrists);
  for (size_t i = 0; i < s.offsets.size(); ++i) CHECK(back.offsets[i] == s.offsets[i]);

  Skeleton bad = s;
  bad.parents[2] = 5;  // forward reference
  CHECK_THROWS_WITH_AS(bad.validate(), doctest::Contains("cyclic or forward parent reference"),
                       Error);
  Skeleton bad_root = s;
  bad_root.parents[0] = 0;
  CHECK_THROWS_AS(bad_root.validate(), Error);
}

TEST_CASE("time differences") {
  const Tensor x = Tensor::from({3, 1, 2}, {0, 0, 1, 2, 4, 6});
  const Tensor d = time_diff_t(x);
  REQUIRE(d.shape() == Shape{2, 1, 2});
  CHECK(d.values() == std::vector<double>{1, 2, 3, 4});
  CHECK_THROWS_WITH_AS(time_diff_t(Tensor::from({1, 1, 2}, {0, 0})),
                       doctest::Contains("at least 2 frames"), Error);
}
