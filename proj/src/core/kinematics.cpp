#include "core/kinematics.hpp"

#include <cmath>

#include "core/rotation.hpp"

namespace glab {

namespace {

// Reports the first frame whose column norm falls below the degeneracy
// threshold; `norms_sq` holds squared norms.
void check_degenerate(const std::vector<double>& norms_sq, const char* which,
                      const std::string& what) {
  constexpr double eps_sq = kSixdDegenerateEps * kSixdDegenerateEps;
  for (size_t t = 0; t < norms_sq.size(); ++t) {
    if (norms_sq[t] <= eps_sq)
      fail(Status::invalid_argument,
           std::string("sixd_to_rotmat: ") + which + " at frame " + std::to_string(t) +
               (what.empty() ? "" : " of " + what));
  }
}

}  // namespace

Tensor sixd_to_rotmat_t(const Tensor& sixd, const std::string& what) {
  if (sixd.ndim() != 2 || sixd.dim(1) != 6)
    fail(Status::shape_mismatch, "sixd_to_rotmat: expected [T, 6], got " + shape_str(sixd.shape()));
  int64_t t = sixd.dim(0);
  Tensor a = slice(sixd, 1, 0, 3);  // [T, 3]
  Tensor b = slice(sixd, 1, 3, 6);
  Tensor a_sq = sum(mul(a, a), {1}, true);  // [T, 1]
  check_degenerate(a_sq.values(), "first column has near-zero norm", what);
  Tensor c1 = div(a, sqrt(a_sq));
  Tensor d = sum(mul(c1, b), {1}, true);
  Tensor b2 = sub(b, mul(d, c1));
  Tensor b_sq = sum(mul(b2, b2), {1}, true);
  check_degenerate(b_sq.values(), "columns are parallel", what);
  Tensor c2 = div(b2, sqrt(b_sq));
  auto comp = [](const Tensor& v, int64_t i) { return slice(v, 1, i, i + 1); };  // [T, 1]
  Tensor c3 = concat({sub(mul(comp(c1, 1), comp(c2, 2)), mul(comp(c1, 2), comp(c2, 1))),
                      sub(mul(comp(c1, 2), comp(c2, 0)), mul(comp(c1, 0), comp(c2, 2))),
                      sub(mul(comp(c1, 0), comp(c2, 1)), mul(comp(c1, 1), comp(c2, 0)))},
                     1);  // [T, 3]
  // Columns c1, c2, c3 -> [T, 3, 3]
  return concat({reshape(c1, {t, 3, 1}), reshape(c2, {t, 3, 1}), reshape(c3, {t, 3, 1})}, 2);
}

Tensor geodesic_t(const Tensor& r, const Tensor& rhat) {
  if (r.shape() != rhat.shape() || r.ndim() != 3 || r.dim(1) != 3 || r.dim(2) != 3)
    fail(Status::shape_mismatch, "geodesic: expected matching [T, 3, 3] stacks, got " +
                                     shape_str(r.shape()) + " and " + shape_str(rhat.shape()));
  int64_t t = r.dim(0);
  Tensor rel = matmul(r, permute(rhat, {0, 2, 1}));  // R * Rhat^T
  Tensor flat = reshape(rel, {t, 9});
  Tensor tr = add(add(slice(flat, 1, 0, 1), slice(flat, 1, 4, 5)), slice(flat, 1, 8, 9));
  return acos_clamped(mul_scalar(add_scalar(tr, -1.0), 0.5));  // [T, 1]
}

Tensor fk_positions_t(const Skeleton& skel, const Tensor& rot6d) {
  skel.validate();
  int64_t j = skel.joints();
  if (rot6d.ndim() != 3 || rot6d.dim(1) != j || rot6d.dim(2) != 6)
    fail(Status::shape_mismatch, "fk: expected [T, " + std::to_string(j) + ", 6], got " +
                                     shape_str(rot6d.shape()));
  int64_t t = rot6d.dim(0);
  std::vector<Tensor> world(static_cast<size_t>(j));   // [T, 3, 3] each
  std::vector<Tensor> pos(static_cast<size_t>(j));     // [T, 3] each
  for (int64_t i = 0; i < j; ++i) {
    Tensor local = sixd_to_rotmat_t(reshape(slice(rot6d, 1, i, i + 1), {t, 6}),
                                    "joint " + skel.joint_names[static_cast<size_t>(i)]);
    if (i == 0) {
      world[0] = local;
      pos[0] = Tensor::zeros({t, 3});  // root stays at the origin
      continue;
    }
    int p = skel.parents[i];
    world[i] = matmul(world[p], local);
    Tensor off = Tensor::from({3, 1}, {skel.offsets[i][0], skel.offsets[i][1], skel.offsets[i][2]});
    Tensor arm = reshape(matmul(world[i], off), {t, 3});
    pos[i] = add(pos[p], arm);
  }
  std::vector<Tensor> rows;
  rows.reserve(static_cast<size_t>(j));
  for (int64_t i = 0; i < j; ++i) rows.push_back(reshape(pos[i], {t, 1, 3}));
  return concat(rows, 1);  // [T, J, 3]
}

std::vector<double> fk_positions(const Skeleton& skel, const std::vector<double>& rot6d,
                                 int64_t frames) {
  skel.validate();
  int64_t j = skel.joints();
  if (static_cast<int64_t>(rot6d.size()) != frames * j * 6)
    fail(Status::shape_mismatch, "fk: rotation buffer size does not match frames * joints * 6");
  std::vector<double> out(static_cast<size_t>(frames * j * 3), 0.0);
  std::vector<Eigen::Matrix3d> world(static_cast<size_t>(j));
  for (int64_t t = 0; t < frames; ++t) {
    for (int64_t i = 0; i < j; ++i) {
      Eigen::Matrix3d local =
          sixd_to_rotmat(&rot6d[(t * j + i) * 6], "frame " + std::to_string(t) + ", joint " +
                                                      skel.joint_names[static_cast<size_t>(i)]);
      if (i == 0) {
        world[0] = local;
        continue;
      }
      int p = skel.parents[i];
      world[i] = world[p] * local;
      Eigen::Vector3d off(skel.offsets[i][0], skel.offsets[i][1], skel.offsets[i][2]);
      Eigen::Vector3d arm = world[i] * off;
      for (int64_t d = 0; d < 3; ++d) out[(t * j + i) * 3 + d] = out[(t * j + p) * 3 + d] + arm[d];
    }
  }
  return out;
}

Tensor time_diff_t(const Tensor& positions) {
  if (positions.ndim() < 1 || positions.dim(0) < 2)
    fail(Status::invalid_argument, "time_diff: needs at least 2 frames");
  int64_t t = positions.dim(0);
  return sub(slice(positions, 0, 1, t), slice(positions, 0, 0, t - 1));
}

}  // namespace glab
