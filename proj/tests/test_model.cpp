#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <set>
#include <string>
#include <vector>

#include "core/dataset.hpp"
#include "core/model.hpp"
#include "core/rng.hpp"

using namespace glab;

namespace {

ModelConfig tiny_config(bool use_dct = false, bool baseline = false) {
  ModelConfig cfg = desk_config(default_skeleton());
  cfg.audio_channels = {12, 12};
  cfg.motion_channels = {12, 12};
  cfg.decoder_channels = {12, 12};
  cfg.shared_dim = 6;
  cfg.specific_dim = 5;
  cfg.mapping_hidden = 10;
  cfg.use_dct = use_dct;
  cfg.dct_frames = 16;
  cfg.baseline_no_split = baseline;
  cfg.seed = 7;
  return cfg;
}

FeatureMatrix random_audio(int64_t frames, int64_t dim, uint64_t seed) {
  FeatureMatrix f;
  f.frames = frames;
  f.dim = dim;
  f.data.resize(static_cast<size_t>(frames * dim));
  Rng rng(seed);
  for (double& v : f.data) v = rng.uniform(-1, 1);
  return f;
}

std::set<std::string> param_names(const Model& m) {
  std::set<std::string> names;
  for (const auto& r : m.params().to_records()) names.insert(r.name);
  return names;
}

bool same_data(const Motion& a, const Motion& b) {
  if (a.frames != b.frames || a.joints != b.joints || a.dims != b.dims) return false;
  for (size_t i = 0; i < a.data.size(); ++i)
    if (a.data[i] != b.data[i]) return false;
  return true;
}

}  // namespace

TEST_CASE("config validation rejects broken settings") {
  ModelConfig cfg = tiny_config();
  cfg.audio_dim = 0;
  CHECK_THROWS_AS(Model::create(cfg), Error);
  cfg = tiny_config();
  cfg.kernel = 4;
  CHECK_THROWS_AS(Model::create(cfg), Error);
  cfg = tiny_config(true);
  cfg.dct_frames = 1;
  CHECK_THROWS_AS(Model::create(cfg), Error);
  cfg = tiny_config();
  cfg.skeleton = Skeleton{};
  CHECK_THROWS_AS(Model::create(cfg), Error);
}

TEST_CASE("parameter inventory follows the variant") {
  const auto plain = param_names(Model::create(tiny_config()));
  CHECK(plain.count("f_a.s_logvar.w") == 1);
  CHECK(plain.count("f_m.i_mean.w") == 1);
  CHECK(plain.count("f_r.hidden.w") == 1);
  CHECK(plain.count("g.out.w") == 1);

  // the DCT variant's shared heads are deterministic
  const auto dct = param_names(Model::create(tiny_config(true)));
  CHECK(dct.count("f_a.s_logvar.w") == 0);
  CHECK(dct.count("f_m.s_logvar.w") == 0);
  CHECK(dct.count("f_m.i_logvar.w") == 1);

  // the no-split baseline drops the specific code and the mapping net
  const auto base = param_names(Model::create(tiny_config(false, true)));
  CHECK(base.count("f_m.i_mean.w") == 0);
  CHECK(base.count("f_r.hidden.w") == 0);
  CHECK(base.count("f_a.s_logvar.w") == 1);
}

TEST_CASE("encoder, mapper and decoder shapes line up") {
  const Model m = Model::create(tiny_config());
  const int64_t T = 20, D = m.config().motion_dim();
  REQUIRE(D == 48);

  const auto ae = m.encode_audio_t(Tensor::zeros({16, T}));
  CHECK(ae.shared.mean.shape() == Shape{6, T});
  CHECK(ae.shared.logvar.shape() == Shape{6, T});

  const auto me = m.encode_motion_t(Tensor::zeros({D, T}));
  CHECK(me.shared.mean.shape() == Shape{6, T});
  CHECK(me.specific.mean.shape() == Shape{5, T});
  CHECK(me.specific.logvar.shape() == Shape{5, T});

  const auto mapped = m.map_noise_t(Tensor::zeros({5, T}));
  CHECK(mapped.mean.shape() == Shape{5, T});
  CHECK(mapped.logvar.shape() == Shape{5, T});

  const Tensor dec = m.decode_t(ae.shared.mean, mapped.mean);
  CHECK(dec.shape() == Shape{D, T});
  const Tensor frames = m.to_frames_t(dec);
  CHECK(frames.shape() == Shape{T, 8, 6});

  CHECK_THROWS_AS(m.encode_audio_t(Tensor::zeros({15, T})), Error);
  CHECK_THROWS_AS(m.encode_motion_t(Tensor::zeros({D - 1, T})), Error);
  CHECK_THROWS_AS(m.map_noise_t(Tensor::zeros({6, T})), Error);
}

TEST_CASE("dct variant keeps deterministic shared heads") {
  const Model m = Model::create(tiny_config(true));
  const auto ae = m.encode_audio_t(Tensor::zeros({16, 16}));
  CHECK(ae.shared.mean.shape() == Shape{6, 16});
  CHECK_FALSE(ae.shared.logvar.defined());
  const auto me = m.encode_motion_t(Tensor::zeros({48, 16}));
  CHECK_FALSE(me.shared.logvar.defined());
  CHECK(me.specific.logvar.defined());
}

TEST_CASE("baseline drops the split") {
  const Model m = Model::create(tiny_config(false, true));
  // single code of full width
  const auto ae = m.encode_audio_t(Tensor::zeros({16, 12}));
  CHECK(ae.shared.mean.shape() == Shape{11, 12});
  const auto me = m.encode_motion_t(Tensor::zeros({48, 12}));
  CHECK_FALSE(me.specific.mean.defined());
  CHECK_THROWS_AS(m.map_noise_t(Tensor::zeros({5, 12})), Error);
  CHECK(m.decode_baseline_t(ae.shared.mean).shape() == Shape{48, 12});

  const FeatureMatrix audio = random_audio(10, 16, 5);
  CHECK_THROWS_AS(m.encode_specific(m.generate(audio)), Error);
  CHECK_THROWS_AS(m.timeline_insert(audio, m.generate(audio), 0, 5), Error);
}

TEST_CASE("sampling a deterministic head returns the mean") {
  CodeDist d;
  d.mean = Tensor::from({2, 3}, {1, 2, 3, 4, 5, 6});
  Rng rng(1);
  const Tensor s = sample_code(d, rng);
  for (size_t i = 0; i < 6; ++i) CHECK(s.values()[i] == d.mean.values()[i]);

  d.logvar = Tensor::zeros({2, 3});
  Rng r1(1), r2(2);
  const Tensor s1 = sample_code(d, r1);
  const Tensor s2 = sample_code(d, r2);
  bool differ = false;
  for (size_t i = 0; i < 6; ++i) differ = differ || (s1.values()[i] != s2.values()[i]);
  CHECK(differ);
}

TEST_CASE("generation is deterministic in the seed") {
  const Model m = Model::create(tiny_config());
  const FeatureMatrix audio = random_audio(20, 16, 11);
  GenerateOptions o1, o2;
  o1.seed = 3;
  o2.seed = 3;
  const Motion a = m.generate(audio, o1);
  const Motion b = m.generate(audio, o2);
  CHECK(same_data(a, b));
  CHECK(a.mode == MotionMode::rotations6d);
  CHECK(a.frames == 20);
  CHECK(a.joints == 8);
  CHECK(a.dims == 6);
  CHECK(a.has_skeleton);

  o2.seed = 4;
  CHECK_FALSE(same_data(a, m.generate(audio, o2)));
}

TEST_CASE("stats source needs recorded statistics") {
  Model m = Model::create(tiny_config());
  const FeatureMatrix audio = random_audio(16, 16, 13);
  GenerateOptions opts;
  opts.specific = GenerateOptions::SpecificSource::stats;
  CHECK_THROWS_AS(m.generate(audio, opts), Error);

  m.specific_stats().mean.assign(5, 0.1);
  m.specific_stats().var.assign(5, 0.2);
  const Motion a = m.generate(audio, opts);
  const Motion b = m.generate(audio, opts);
  CHECK(same_data(a, b));
}

TEST_CASE("zeros source erases the style input") {
  const Model m = Model::create(tiny_config());
  const FeatureMatrix audio = random_audio(20, 16, 23);
  GenerateOptions opts;
  opts.specific = GenerateOptions::SpecificSource::zeros;
  const Motion a = m.generate(audio, opts);
  CHECK(a.frames == 20);

  // No randomness left: the shared code is the deterministic mean and the
  // specific code a constant, so the seed cannot matter.
  opts.seed = 99;
  CHECK(same_data(a, m.generate(audio, opts)));

  GenerateOptions mapped;
  mapped.seed = 0;
  CHECK_FALSE(same_data(a, m.generate(audio, mapped)));
}

TEST_CASE("reference source reuses an encoded style") {
  const Model m = Model::create(tiny_config());
  const FeatureMatrix audio = random_audio(20, 16, 17);
  GenerateOptions opts;
  opts.specific = GenerateOptions::SpecificSource::reference;
  CHECK_THROWS_AS(m.generate(audio, opts), Error);  // no reference given

  const Motion ref = m.generate(random_audio(20, 16, 18));
  opts.reference = &ref;
  const Motion out = m.generate(audio, opts);
  CHECK(out.frames == 20);

  const Motion shorter = m.generate(random_audio(10, 16, 19));
  opts.reference = &shorter;
  CHECK_THROWS_AS(m.generate(audio, opts), Error);
}

TEST_CASE("timeline insert over the full span equals reference generation") {
  const Model m = Model::create(tiny_config());
  const FeatureMatrix audio = random_audio(20, 16, 23);
  const Motion ref = m.generate(random_audio(20, 16, 24));

  GenerateOptions opts;
  opts.seed = 5;
  opts.specific = GenerateOptions::SpecificSource::reference;
  opts.reference = &ref;
  const Motion direct = m.generate(audio, opts);

  GenerateOptions plain;
  plain.seed = 5;
  const Motion spliced = m.timeline_insert(audio, ref, 0, 20, plain);
  CHECK(same_data(direct, spliced));

  // a partial splice differs from both endpoints
  const Motion half = m.timeline_insert(audio, ref, 5, 15, plain);
  CHECK_FALSE(same_data(half, spliced));
  CHECK_FALSE(same_data(half, m.generate(audio, plain)));
}

TEST_CASE("timeline insert validates its span") {
  const Model m = Model::create(tiny_config());
  const FeatureMatrix audio = random_audio(20, 16, 29);
  const Motion ref = m.generate(audio);
  CHECK_THROWS_AS(m.timeline_insert(audio, ref, -1, 5), Error);
  CHECK_THROWS_AS(m.timeline_insert(audio, ref, 5, 5), Error);
  CHECK_THROWS_AS(m.timeline_insert(audio, ref, 0, 21), Error);
  const Motion shorty = m.generate(random_audio(4, 16, 30));
  CHECK_THROWS_AS(m.timeline_insert(audio, shorty, 0, 10), Error);
}

TEST_CASE("dct variant enforces the clip length") {
  const Model m = Model::create(tiny_config(true));
  CHECK_THROWS_WITH_AS(m.generate(random_audio(20, 16, 31)),
                       doctest::Contains("multiple of 16"), Error);
  const Motion two_clips = m.generate(random_audio(32, 16, 31));
  CHECK(two_clips.frames == 32);

  // deterministic and seed-sensitive like the plain variant
  GenerateOptions o;
  o.seed = 9;
  CHECK(same_data(m.generate(random_audio(32, 16, 31), o),
                  m.generate(random_audio(32, 16, 31), o)));

  CHECK(m.encode_shared(random_audio(32, 16, 32)).size() == 6 * 32);
  CHECK_THROWS_AS(m.encode_shared(random_audio(20, 16, 32)), Error);
}

TEST_CASE("dct reference style round trips through generation") {
  const Model m = Model::create(tiny_config(true));
  const Motion ref = m.generate(random_audio(32, 16, 33));
  GenerateOptions opts;
  opts.specific = GenerateOptions::SpecificSource::reference;
  opts.reference = &ref;
  const Motion out = m.generate(random_audio(32, 16, 34), opts);
  CHECK(out.frames == 32);
  // splicing the same reference over the full span must agree
  const Motion spliced = m.timeline_insert(random_audio(32, 16, 34), ref, 0, 32, {});
  CHECK(same_data(out, spliced));
}

TEST_CASE("code lowpass keeps dc and is idempotent") {
  Rng rng(35);
  const int64_t C = 3, T = 24;
  std::vector<double> code(static_cast<size_t>(C * T));
  for (double& v : code) v = rng.uniform(-2, 2);

  CHECK(Model::code_lowpass(code, C, T, 0) == code);
  CHECK(Model::code_lowpass(code, C, T, T) == code);
  CHECK(Model::code_lowpass(code, C, T, T + 5) == code);

  const auto cut = Model::code_lowpass(code, C, T, 4);
  const auto twice = Model::code_lowpass(cut, C, T, 4);
  for (size_t i = 0; i < cut.size(); ++i) CHECK(twice[i] == doctest::Approx(cut[i]).epsilon(1e-10));

  // constant rows live entirely in the first coefficient
  std::vector<double> flat(static_cast<size_t>(C * T), 0.75);
  const auto kept = Model::code_lowpass(flat, C, T, 1);
  for (double v : kept) CHECK(v == doctest::Approx(0.75).epsilon(1e-12));

  CHECK_THROWS_AS(Model::code_lowpass(code, C, T + 1, 4), Error);
}

TEST_CASE("lowpass editing smooths generated codes") {
  const Model m = Model::create(tiny_config());
  const FeatureMatrix audio = random_audio(40, 16, 37);
  GenerateOptions plain, heavy;
  heavy.dct_keep = 2;
  const Motion full = m.generate(audio, plain);
  const Motion cut = m.generate(audio, heavy);
  CHECK_FALSE(same_data(full, cut));
}

TEST_CASE("save and load round trip bitwise") {
  for (const bool dct : {false, true}) {
    Model m = Model::create(tiny_config(dct));
    m.specific_stats().mean.assign(5, 0.25);
    m.specific_stats().var.assign(5, 0.5);
    m.set_trained(true);
    const std::string stem = dct ? "model_rt_dct" : "model_rt_plain";
    m.save(stem);

    const Model back = Model::load(stem);
    CHECK(back.trained());
    CHECK(back.config().use_dct == dct);
    CHECK(back.config().shared_dim == 6);
    CHECK(back.specific_stats().mean == m.specific_stats().mean);
    CHECK(back.specific_stats().var == m.specific_stats().var);

    const auto ra = m.params().to_records();
    const auto rb = back.params().to_records();
    REQUIRE(ra.size() == rb.size());
    for (size_t i = 0; i < ra.size(); ++i) {
      CHECK(ra[i].name == rb[i].name);
      CHECK(ra[i].values == rb[i].values);
    }

    const FeatureMatrix audio = random_audio(dct ? 32 : 20, 16, 41);
    CHECK(same_data(m.generate(audio), back.generate(audio)));

    std::remove((stem + ".json").c_str());
    std::remove((stem + ".bin").c_str());
  }
  CHECK_THROWS_AS(Model::load("no_such_model_stem"), Error);
}

TEST_CASE("planar output mode emits 2-d position clips") {
  ModelConfig cfg = tiny_config();
  cfg.output = OutputMode::positions2d;
  const Model m = Model::create(cfg);
  CHECK(m.config().motion_dim() == 16);
  const Motion out = m.generate(random_audio(12, 16, 43));
  CHECK(out.mode == MotionMode::positions);
  CHECK(out.dims == 2);
  CHECK(out.joints == 8);
  CHECK_FALSE(out.has_skeleton);
}
