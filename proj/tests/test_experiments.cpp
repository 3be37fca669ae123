#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "core/experiments.hpp"

using namespace glab;

namespace {

ModelConfig tiny_config(bool use_dct = false) {
  ModelConfig cfg = desk_config(default_skeleton());
  cfg.audio_channels = {12, 12};
  cfg.motion_channels = {12, 12};
  cfg.decoder_channels = {12, 12};
  cfg.shared_dim = 6;
  cfg.specific_dim = 5;
  cfg.mapping_hidden = 10;
  cfg.use_dct = use_dct;
  cfg.dct_frames = 16;
  cfg.seed = 7;
  return cfg;
}

Dataset tiny_data() {
  SyntheticSpec spec;
  spec.rhythms_train = 3;
  spec.rhythms_val = 2;
  spec.styles = 2;
  spec.frames = 60;
  spec.seed = 99;
  return generate_dataset(spec);
}

bool same_motion(const Motion& a, const Motion& b) {
  if (a.frames != b.frames || a.data.size() != b.data.size()) return false;
  for (size_t i = 0; i < a.data.size(); ++i)
    if (a.data[i] != b.data[i]) return false;
  return true;
}

}  // namespace

TEST_CASE("usable frames snap to the DCT clip length") {
  const Model plain = Model::create(tiny_config());
  const Model dct = Model::create(tiny_config(true));
  CHECK(usable_frames(plain, 60) == 60);
  CHECK(usable_frames(plain, 7) == 7);
  CHECK(usable_frames(dct, 60) == 48);
  CHECK(usable_frames(dct, 16) == 16);
  CHECK(usable_frames(dct, 15) == 0);
}

TEST_CASE("style sets draw one group per validation rhythm") {
  const Dataset ds = tiny_data();
  const Model model = Model::create(tiny_config());
  const auto groups = generate_style_sets(model, ds, 3, 5);
  REQUIRE(groups.size() == 2);
  for (const auto& g : groups) {
    REQUIRE(g.size() == 3);
    for (const Motion& m : g) {
      CHECK(m.frames == ds.frames);
      CHECK(m.joints == 8);
    }
  }

  const auto again = generate_style_sets(model, ds, 3, 5);
  CHECK(same_motion(groups[0][0], again[0][0]));
  CHECK(same_motion(groups[1][2], again[1][2]));
  const auto other = generate_style_sets(model, ds, 3, 6);
  CHECK_FALSE(same_motion(groups[0][0], other[0][0]));
  // Distinct draws within a group come from distinct style seeds.
  CHECK_FALSE(same_motion(groups[0][0], groups[0][1]));

  CHECK_THROWS_AS(generate_style_sets(model, ds, 1, 5), Error);
}

TEST_CASE("reference reconstruction trims to what the model can consume") {
  const Dataset ds = tiny_data();
  const Model plain = Model::create(tiny_config());
  const Model dct = Model::create(tiny_config(true));

  const Motion full = reconstruct_with_reference(plain, ds.val.front());
  CHECK(full.frames == 60);
  const Motion snapped = reconstruct_with_reference(dct, ds.val.front());
  CHECK(snapped.frames == 48);

  const double err = val_reconstruction_error(plain, ds);
  CHECK(std::isfinite(err));
  CHECK(err > 0.0);

  Dataset empty = ds;
  empty.val.clear();
  CHECK_THROWS_AS(val_reconstruction_error(plain, empty), Error);
}

TEST_CASE("speed by keep reports one finite row per keep count") {
  const Dataset ds = tiny_data();
  const Model model = Model::create(tiny_config());
  const auto rows = speed_by_keep(model, ds, {0, 8, 2}, 2, 17);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].first == 0);
  CHECK(rows[1].first == 8);
  CHECK(rows[2].first == 2);
  for (const auto& [keep, speed] : rows) {
    CHECK(std::isfinite(speed));
    CHECK(speed > 0.0);
  }
  // A hard low-pass must actually change the generated motion's speed.
  CHECK(rows[2].second != rows[0].second);
}

TEST_CASE("rho sweep trains a model per slack and fills every column") {
  const Dataset ds = tiny_data();
  TrainConfig tc;
  tc.steps = 3;
  tc.batch = 1;
  tc.crop = 32;
  tc.weights.lpips = 0.0;
  const RhoSweepResult result = rho_sweep(ds, tiny_config(), tc, nullptr, {0.0, 3.0});
  REQUIRE(result.rows.size() == 2);
  CHECK(result.rows[0].rho == 0.0);
  CHECK(result.rows[1].rho == 3.0);
  for (const RhoSweepRow& row : result.rows) {
    CHECK(std::isfinite(row.multimodality));
    CHECK(row.position_l1 > 0.0);
    CHECK(row.styles_hit >= 1.0);
    CHECK(row.styles_hit <= 3.0);
  }
  CHECK_THROWS_AS(rho_sweep(ds, tiny_config(), tc, nullptr, {}), Error);
}

TEST_CASE("dct ablation trains both variants and sweeps the low-pass") {
  const Dataset ds = tiny_data();
  TrainConfig tc;
  tc.steps = 3;
  tc.batch = 1;
  tc.crop = 32;
  tc.weights.lpips = 0.0;
  const DctAblationResult r = dct_ablation(ds, tiny_config(), tc, nullptr, {0, 4});
  CHECK(r.base_position_l1 > 0.0);
  CHECK(r.dct_position_l1 > 0.0);
  REQUIRE(r.base_speed_by_keep.size() == 2);
  REQUIRE(r.dct_speed_by_keep.size() == 2);
  CHECK(r.base_speed_by_keep[1].first == 4);
  for (const auto& [keep, speed] : r.dct_speed_by_keep) CHECK(std::isfinite(speed));
}
