#include "core/model.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

#include "core/extractor.hpp"
#include "core/signal.hpp"

namespace glab {

using nlohmann::json;

void ModelConfig::validate() const {
  skeleton.validate();
  if (audio_dim < 1) fail(Status::invalid_argument, "model audio_dim must be positive");
  if (shared_dim < 1 || specific_dim < 1)
    fail(Status::invalid_argument, "model code dimensions must be positive");
  if (mapping_hidden < 1) fail(Status::invalid_argument, "model mapping_hidden must be positive");
  if (audio_channels.empty() || motion_channels.empty() || decoder_channels.empty())
    fail(Status::invalid_argument, "model conv stacks need at least one block each");
  if (kernel < 1 || kernel % 2 == 0)
    fail(Status::invalid_argument, "model kernel must be odd and positive");
  if (dilations.empty()) fail(Status::invalid_argument, "model needs a dilation schedule");
  if (use_dct && dct_frames < 2)
    fail(Status::invalid_argument, "model dct_frames must be at least 2");
  if (fps <= 0) fail(Status::invalid_argument, "model fps must be positive");
}

ModelConfig desk_config(const Skeleton& skel, int64_t audio_dim) {
  ModelConfig cfg;
  cfg.skeleton = skel;
  cfg.audio_dim = audio_dim;
  cfg.audio_channels = {32, 32, 24, 24, 16};
  cfg.motion_channels = {32, 32, 24, 24, 16};
  cfg.decoder_channels = {16, 24, 24, 32, 32};
  return cfg;
}

Model Model::create(const ModelConfig& cfg) {
  cfg.validate();
  Model m;
  m.cfg_ = cfg;
  Rng rng(mix_seed(cfg.seed, 0x6d0de1ULL));

  const int64_t code = cfg.code_dim();
  m.audio_net_ = make_conv_stack(m.params_, "f_a", cfg.audio_dim, cfg.audio_channels, cfg.kernel,
                                 cfg.dilations, rng);
  m.audio_s_mean_ = make_conv(m.params_, "f_a.s_mean", cfg.audio_channels.back(), code, 1, 1, rng);
  if (!cfg.use_dct)
    m.audio_s_logvar_ =
        make_conv(m.params_, "f_a.s_logvar", cfg.audio_channels.back(), code, 1, 1, rng);

  m.motion_net_ = make_conv_stack(m.params_, "f_m", cfg.motion_dim(), cfg.motion_channels,
                                  cfg.kernel, cfg.dilations, rng);
  m.motion_s_mean_ =
      make_conv(m.params_, "f_m.s_mean", cfg.motion_channels.back(), code, 1, 1, rng);
  if (!cfg.use_dct)
    m.motion_s_logvar_ =
        make_conv(m.params_, "f_m.s_logvar", cfg.motion_channels.back(), code, 1, 1, rng);
  if (!cfg.baseline_no_split) {
    m.motion_i_mean_ =
        make_conv(m.params_, "f_m.i_mean", cfg.motion_channels.back(), cfg.specific_dim, 1, 1, rng);
    m.motion_i_logvar_ = make_conv(m.params_, "f_m.i_logvar", cfg.motion_channels.back(),
                                   cfg.specific_dim, 1, 1, rng);
    m.map_hidden_ = make_dense(m.params_, "f_r.hidden", cfg.specific_dim, cfg.mapping_hidden, rng);
    m.map_mean_ = make_dense(m.params_, "f_r.mean", cfg.mapping_hidden, cfg.specific_dim, rng);
    m.map_logvar_ = make_dense(m.params_, "f_r.logvar", cfg.mapping_hidden, cfg.specific_dim, rng);
  }

  const int64_t dec_in = cfg.baseline_no_split ? code : cfg.shared_dim + cfg.specific_dim;
  m.decoder_net_ = make_conv_stack(m.params_, "g", dec_in, cfg.decoder_channels, cfg.kernel,
                                   cfg.dilations, rng);
  m.out_proj_ = make_conv(m.params_, "g.out", cfg.decoder_channels.back(), cfg.motion_dim(), 1, 1,
                          rng);
  return m;
}

Tensor Model::dct_time(const Tensor& x) const {
  const int64_t t = x.dim(1);
  std::vector<double> d = dct_matrix(t);
  // Row-major series: Y = X * D^T (and back with X = Y * D).
  std::vector<double> dt(static_cast<size_t>(t * t));
  for (int64_t i = 0; i < t; ++i)
    for (int64_t k = 0; k < t; ++k)
      dt[static_cast<size_t>(k * t + i)] = d[static_cast<size_t>(i * t + k)];
  return matmul(x, Tensor::from({t, t}, std::move(dt)));
}

Tensor Model::idct_time(const Tensor& x) const {
  const int64_t t = x.dim(1);
  return matmul(x, Tensor::from({t, t}, dct_matrix(t)));
}

AudioEncoding Model::encode_audio_t(const Tensor& audio_ft) const {
  if (audio_ft.ndim() != 2 || audio_ft.dim(0) != cfg_.audio_dim)
    fail(Status::shape_mismatch, "audio input must be [" + std::to_string(cfg_.audio_dim) +
                                     ", T], got " + shape_str(audio_ft.shape()));
  Tensor h = audio_net_.forward(audio_ft);
  if (cfg_.use_dct) h = dct_time(h);
  AudioEncoding enc;
  enc.shared.mean = audio_s_mean_.forward(h);
  if (!cfg_.use_dct) enc.shared.logvar = audio_s_logvar_.forward(h);
  return enc;
}

MotionEncoding Model::encode_motion_t(const Tensor& motion_dt) const {
  if (motion_dt.ndim() != 2 || motion_dt.dim(0) != cfg_.motion_dim())
    fail(Status::shape_mismatch, "motion input must be [" + std::to_string(cfg_.motion_dim()) +
                                     ", T], got " + shape_str(motion_dt.shape()));
  Tensor h = motion_net_.forward(motion_dt);
  if (cfg_.use_dct) h = dct_time(h);
  MotionEncoding enc;
  enc.shared.mean = motion_s_mean_.forward(h);
  if (!cfg_.use_dct) enc.shared.logvar = motion_s_logvar_.forward(h);
  if (!cfg_.baseline_no_split) {
    enc.specific.mean = motion_i_mean_.forward(h);
    enc.specific.logvar = motion_i_logvar_.forward(h);
  }
  return enc;
}

CodeDist Model::map_noise_t(const Tensor& z) const {
  if (cfg_.baseline_no_split)
    fail(Status::bad_state, "the no-split baseline has no mapping network");
  if (z.ndim() != 2 || z.dim(0) != cfg_.specific_dim)
    fail(Status::shape_mismatch, "mapping input must be [" + std::to_string(cfg_.specific_dim) +
                                     ", T], got " + shape_str(z.shape()));
  const Tensor h = relu(map_hidden_.forward(z));
  CodeDist d;
  d.mean = map_mean_.forward(h);
  d.logvar = map_logvar_.forward(h);
  return d;
}

Tensor Model::decode_baseline_t(const Tensor& shared) const {
  Tensor x = shared;
  if (cfg_.use_dct) x = idct_time(x);
  return out_proj_.forward(decoder_net_.forward(x));
}

Tensor Model::decode_t(const Tensor& shared, const Tensor& specific) const {
  if (cfg_.baseline_no_split) return decode_baseline_t(shared);
  Tensor x = concat({shared, specific}, 0);
  if (cfg_.use_dct) x = idct_time(x);
  return out_proj_.forward(decoder_net_.forward(x));
}

Tensor Model::to_frames_t(const Tensor& motion_dt) const {
  const int64_t t = motion_dt.dim(1);
  return reshape(permute(motion_dt, {1, 0}), {t, cfg_.joints(), cfg_.motion_dims()});
}

// ---- inference ----

Tensor Model::audio_tensor(const FeatureMatrix& audio) const {
  if (audio.dim != cfg_.audio_dim)
    fail(Status::shape_mismatch, "audio features have dim " + std::to_string(audio.dim) +
                                     ", model expects " + std::to_string(cfg_.audio_dim));
  std::vector<double> ft(static_cast<size_t>(audio.dim * audio.frames));
  for (int64_t t = 0; t < audio.frames; ++t)
    for (int64_t f = 0; f < audio.dim; ++f)
      ft[static_cast<size_t>(f * audio.frames + t)] = audio.data[static_cast<size_t>(t * audio.dim + f)];
  return Tensor::from({audio.dim, audio.frames}, std::move(ft));
}

Tensor sample_code(const CodeDist& d, Rng& rng) {
  if (!d.logvar.defined()) return d.mean;
  std::vector<double> eps(static_cast<size_t>(d.mean.numel()));
  for (double& e : eps) e = rng.normal();
  const Tensor et = Tensor::from(d.mean.shape(), std::move(eps));
  return add(d.mean, mul(exp(mul_scalar(d.logvar, 0.5)), et));
}

Tensor Model::sample_or_mean(const CodeDist& d, Rng* rng) const {
  if (rng == nullptr) return d.mean;
  return sample_code(d, *rng);
}

namespace {

// Time-domain concat that skips empty spans.
Tensor concat_spans(std::vector<Tensor> parts) {
  std::vector<Tensor> keep;
  for (Tensor& p : parts)
    if (p.defined() && p.dim(1) > 0) keep.push_back(std::move(p));
  if (keep.empty()) fail(Status::invalid_argument, "empty code timeline");
  if (keep.size() == 1) return keep.front();
  return concat(keep, 1);
}

}  // namespace

std::vector<double> Model::code_lowpass(const std::vector<double>& code, int64_t channels,
                                        int64_t frames, int64_t keep) {
  if (static_cast<int64_t>(code.size()) != channels * frames)
    fail(Status::shape_mismatch, "code buffer does not match channels * frames");
  if (keep <= 0 || keep >= frames) return code;
  std::vector<double> out(code.size());
  std::vector<double> row(static_cast<size_t>(frames));
  for (int64_t c = 0; c < channels; ++c) {
    std::copy(code.begin() + c * frames, code.begin() + (c + 1) * frames, row.begin());
    std::vector<double> freq = dct(row);
    std::fill(freq.begin() + keep, freq.end(), 0.0);
    const std::vector<double> back = idct(freq);
    std::copy(back.begin(), back.end(), out.begin() + c * frames);
  }
  return out;
}

Tensor Model::specific_code_for(const FeatureMatrix& audio, int64_t frames,
                                const GenerateOptions& opts, Rng& rng) const {
  (void)audio;
  switch (opts.specific) {
    case GenerateOptions::SpecificSource::mapped: {
      std::vector<double> z(static_cast<size_t>(cfg_.specific_dim * frames));
      for (double& v : z) v = rng.normal();
      const CodeDist d = map_noise_t(Tensor::from({cfg_.specific_dim, frames}, std::move(z)));
      return sample_or_mean(d, &rng);
    }
    case GenerateOptions::SpecificSource::stats: {
      if (!stats_.valid())
        fail(Status::bad_state, "specific-code statistics unavailable; train the model first");
      std::vector<double> v(static_cast<size_t>(cfg_.specific_dim * frames));
      for (int64_t c = 0; c < cfg_.specific_dim; ++c) {
        const double sd = std::sqrt(std::max(stats_.var[static_cast<size_t>(c)], 0.0));
        for (int64_t t = 0; t < frames; ++t)
          v[static_cast<size_t>(c * frames + t)] =
              stats_.mean[static_cast<size_t>(c)] + sd * rng.normal();
      }
      return Tensor::from({cfg_.specific_dim, frames}, std::move(v));
    }
    case GenerateOptions::SpecificSource::zeros:
      return Tensor::zeros({cfg_.specific_dim, frames});
    case GenerateOptions::SpecificSource::reference: {
      if (opts.reference == nullptr)
        fail(Status::invalid_argument, "reference generation needs a reference motion");
      const std::vector<double> code = encode_specific(*opts.reference);
      const int64_t ref_t = opts.reference->frames;
      if (ref_t < frames)
        fail(Status::invalid_argument,
             "reference motion has " + std::to_string(ref_t) + " frames, need " +
                 std::to_string(frames));
      std::vector<double> v(static_cast<size_t>(cfg_.specific_dim * frames));
      for (int64_t c = 0; c < cfg_.specific_dim; ++c)
        std::copy(code.begin() + c * ref_t, code.begin() + c * ref_t + frames,
                  v.begin() + c * frames);
      return Tensor::from({cfg_.specific_dim, frames}, std::move(v));
    }
  }
  fail(Status::internal, "unknown specific-code source");
}

Motion Model::decode_to_motion(const Tensor& shared, const Tensor& specific,
                               int64_t frames) const {
  // Codes arrive in the time domain here; in DCT mode the decoder's own
  // inverse transform is bypassed by transforming per clip beforehand.
  Tensor x = cfg_.baseline_no_split ? shared : concat({shared, specific}, 0);
  const Tensor out = out_proj_.forward(decoder_net_.forward(x));

  Motion m;
  m.mode = cfg_.output == OutputMode::rotations6d ? MotionMode::rotations6d : MotionMode::positions;
  m.fps = cfg_.fps;
  m.frames = frames;
  m.joints = cfg_.joints();
  m.dims = cfg_.motion_dims();
  if (m.mode == MotionMode::rotations6d) {
    m.has_skeleton = true;
    m.skeleton = cfg_.skeleton;
  }
  m.data = to_frames_t(out).values();
  m.validate();
  return m;
}

Motion Model::generate(const FeatureMatrix& audio, const GenerateOptions& opts) const {
  NoRecord guard;
  const int64_t frames = audio.frames;
  if (frames < 1) fail(Status::invalid_argument, "generation needs at least 1 audio frame");
  Rng rng(mix_seed(0x9e7ab1e5ULL, opts.seed));

  if (cfg_.use_dct && frames % cfg_.dct_frames != 0)
    fail(Status::invalid_argument,
         "DCT-variant generation needs frames to be a multiple of " +
             std::to_string(cfg_.dct_frames) + ", got " + std::to_string(frames));

  const Tensor ft = audio_tensor(audio);
  Tensor shared_time, specific_time;

  if (!cfg_.use_dct) {
    const AudioEncoding enc = encode_audio_t(ft);
    // The shared code follows the audio deterministically; in the no-split
    // baseline the sampled head is the only source of variety left.
    Tensor s = cfg_.baseline_no_split ? sample_or_mean(enc.shared, &rng) : enc.shared.mean;
    if (opts.dct_keep > 0)
      s = Tensor::from(s.shape(),
                       code_lowpass(s.values(), s.dim(0), s.dim(1), opts.dct_keep));
    shared_time = s;
    if (!cfg_.baseline_no_split) specific_time = specific_code_for(audio, frames, opts, rng);
  } else {
    // Fixed-length clips: encode each, edit in the DCT domain, inverse
    // transform, then decode the stitched timeline once.
    std::vector<Tensor> s_parts, i_parts;
    for (int64_t start = 0; start < frames; start += cfg_.dct_frames) {
      const Tensor clip = slice(ft, 1, start, start + cfg_.dct_frames);
      const AudioEncoding enc = encode_audio_t(clip);
      Tensor s = cfg_.baseline_no_split ? sample_or_mean(enc.shared, &rng) : enc.shared.mean;
      if (opts.dct_keep > 0 && opts.dct_keep < cfg_.dct_frames) {
        std::vector<double> v = s.values();
        for (int64_t c = 0; c < s.dim(0); ++c)
          std::fill(v.begin() + c * cfg_.dct_frames + opts.dct_keep,
                    v.begin() + (c + 1) * cfg_.dct_frames, 0.0);
        s = Tensor::from(s.shape(), std::move(v));
      }
      s_parts.push_back(idct_time(s));
      if (!cfg_.baseline_no_split &&
          opts.specific != GenerateOptions::SpecificSource::reference) {
        FeatureMatrix dummy;  // specific codes never look at the audio
        i_parts.push_back(idct_time(specific_code_for(dummy, cfg_.dct_frames, opts, rng)));
      }
    }
    shared_time = concat_spans(std::move(s_parts));
    if (!cfg_.baseline_no_split)
      // Reference codes come back from the encoder already in the time
      // domain, so they skip the per-clip inverse transform above.
      specific_time = opts.specific == GenerateOptions::SpecificSource::reference
                          ? specific_code_for(audio, frames, opts, rng)
                          : concat_spans(std::move(i_parts));
  }
  return decode_to_motion(shared_time, specific_time, frames);
}

Motion Model::timeline_insert(const FeatureMatrix& audio, const Motion& reference, int64_t start,
                              int64_t stop, const GenerateOptions& opts) const {
  NoRecord guard;
  if (cfg_.baseline_no_split)
    fail(Status::bad_state, "the no-split baseline has no specific-code timeline");
  const int64_t frames = audio.frames;
  if (start < 0 || stop <= start || stop > frames)
    fail(Status::invalid_argument, "timeline span [" + std::to_string(start) + ", " +
                                       std::to_string(stop) + ") out of range for " +
                                       std::to_string(frames) + " frames");
  const int64_t span = stop - start;
  const std::vector<double> ref_code = encode_specific(reference);
  if (reference.frames < span)
    fail(Status::invalid_argument, "reference motion has " + std::to_string(reference.frames) +
                                       " frames, span needs " + std::to_string(span));

  Rng rng(mix_seed(0x9e7ab1e5ULL, opts.seed));
  if (cfg_.use_dct && frames % cfg_.dct_frames != 0)
    fail(Status::invalid_argument,
         "DCT-variant generation needs frames to be a multiple of " +
             std::to_string(cfg_.dct_frames) + ", got " + std::to_string(frames));

  // Shared code from audio; the background style outside [start, stop) comes
  // from the mapped or stats source (the reference argument replaces any
  // reference request in opts).
  GenerateOptions bg = opts;
  if (bg.specific == GenerateOptions::SpecificSource::reference)
    bg.specific = GenerateOptions::SpecificSource::mapped;
  const Tensor ft = audio_tensor(audio);
  Tensor shared_time, mapped_time;
  if (!cfg_.use_dct) {
    shared_time = encode_audio_t(ft).shared.mean;
    mapped_time = specific_code_for(audio, frames, bg, rng);
  } else {
    std::vector<Tensor> s_parts, i_parts;
    for (int64_t off = 0; off < frames; off += cfg_.dct_frames) {
      const Tensor clip = slice(ft, 1, off, off + cfg_.dct_frames);
      s_parts.push_back(idct_time(encode_audio_t(clip).shared.mean));
      FeatureMatrix dummy;
      i_parts.push_back(idct_time(specific_code_for(dummy, cfg_.dct_frames, bg, rng)));
    }
    shared_time = concat_spans(std::move(s_parts));
    mapped_time = concat_spans(std::move(i_parts));
  }

  // Splice the reference style over [start, stop).
  std::vector<double> span_code(static_cast<size_t>(cfg_.specific_dim * span));
  for (int64_t c = 0; c < cfg_.specific_dim; ++c)
    std::copy(ref_code.begin() + c * reference.frames,
              ref_code.begin() + c * reference.frames + span, span_code.begin() + c * span);
  const Tensor spliced = concat_spans(
      {start > 0 ? slice(mapped_time, 1, 0, start) : Tensor(),
       Tensor::from({cfg_.specific_dim, span}, std::move(span_code)),
       stop < frames ? slice(mapped_time, 1, stop, frames) : Tensor()});
  return decode_to_motion(shared_time, spliced, frames);
}

std::vector<double> Model::encode_specific(const Motion& m) const {
  if (cfg_.baseline_no_split)
    fail(Status::bad_state, "the no-split baseline has no specific code");
  NoRecord guard;
  m.validate();
  const Tensor ch = motion_channels_t(m);
  if (!cfg_.use_dct) return encode_motion_t(ch).specific.mean.values();
  if (m.frames % cfg_.dct_frames != 0)
    fail(Status::invalid_argument,
         "DCT-variant encoding needs frames to be a multiple of " +
             std::to_string(cfg_.dct_frames) + ", got " + std::to_string(m.frames));
  std::vector<Tensor> parts;
  for (int64_t off = 0; off < m.frames; off += cfg_.dct_frames)
    parts.push_back(
        idct_time(encode_motion_t(slice(ch, 1, off, off + cfg_.dct_frames)).specific.mean));
  return concat_spans(std::move(parts)).values();
}

std::vector<double> Model::encode_shared(const FeatureMatrix& audio) const {
  NoRecord guard;
  const Tensor ft = audio_tensor(audio);
  if (!cfg_.use_dct) return encode_audio_t(ft).shared.mean.values();
  if (audio.frames % cfg_.dct_frames != 0)
    fail(Status::invalid_argument,
         "DCT-variant encoding needs frames to be a multiple of " +
             std::to_string(cfg_.dct_frames) + ", got " + std::to_string(audio.frames));
  std::vector<Tensor> parts;
  for (int64_t off = 0; off < audio.frames; off += cfg_.dct_frames)
    parts.push_back(idct_time(encode_audio_t(slice(ft, 1, off, off + cfg_.dct_frames)).shared.mean));
  return concat_spans(std::move(parts)).values();
}

void Model::save(const std::string& stem) const {
  json meta;
  meta["kind"] = "gesture-model";
  meta["audio_dim"] = cfg_.audio_dim;
  meta["output"] = cfg_.output == OutputMode::rotations6d ? "rotations6d" : "positions2d";
  meta["shared_dim"] = cfg_.shared_dim;
  meta["specific_dim"] = cfg_.specific_dim;
  meta["mapping_hidden"] = cfg_.mapping_hidden;
  meta["audio_channels"] = cfg_.audio_channels;
  meta["motion_channels"] = cfg_.motion_channels;
  meta["decoder_channels"] = cfg_.decoder_channels;
  meta["kernel"] = cfg_.kernel;
  meta["dilations"] = cfg_.dilations;
  meta["use_dct"] = cfg_.use_dct;
  meta["dct_frames"] = cfg_.dct_frames;
  meta["baseline_no_split"] = cfg_.baseline_no_split;
  meta["seed"] = cfg_.seed;
  meta["fps"] = cfg_.fps;
  meta["skeleton"] = json::parse(skeleton_to_json(cfg_.skeleton));
  meta["trained"] = trained_;
  if (stats_.valid()) {
    meta["stats_mean"] = stats_.mean;
    meta["stats_var"] = stats_.var;
  }
  save_checkpoint(stem, params_.to_records(), meta.dump());
}

Model Model::load(const std::string& stem) {
  json meta;
  try {
    meta = json::parse(load_checkpoint_meta(stem));
  } catch (const json::exception& e) {
    fail(Status::io, "model checkpoint meta is not valid JSON: " + std::string(e.what()));
  }
  if (meta.value("kind", "") != "gesture-model")
    fail(Status::invalid_argument, "checkpoint at " + stem + " is not a gesture model");
  ModelConfig cfg;
  cfg.audio_dim = meta.at("audio_dim").get<int64_t>();
  cfg.output = meta.at("output").get<std::string>() == "positions2d" ? OutputMode::positions2d
                                                                     : OutputMode::rotations6d;
  cfg.shared_dim = meta.at("shared_dim").get<int64_t>();
  cfg.specific_dim = meta.at("specific_dim").get<int64_t>();
  cfg.mapping_hidden = meta.at("mapping_hidden").get<int64_t>();
  cfg.audio_channels = meta.at("audio_channels").get<std::vector<int64_t>>();
  cfg.motion_channels = meta.at("motion_channels").get<std::vector<int64_t>>();
  cfg.decoder_channels = meta.at("decoder_channels").get<std::vector<int64_t>>();
  cfg.kernel = meta.at("kernel").get<int64_t>();
  cfg.dilations = meta.at("dilations").get<std::vector<int64_t>>();
  cfg.use_dct = meta.at("use_dct").get<bool>();
  cfg.dct_frames = meta.at("dct_frames").get<int64_t>();
  cfg.baseline_no_split = meta.at("baseline_no_split").get<bool>();
  cfg.seed = meta.at("seed").get<uint64_t>();
  cfg.fps = meta.at("fps").get<double>();
  cfg.skeleton = skeleton_from_json(meta.at("skeleton").dump());

  Model m = create(cfg);
  m.params_.load_records(load_checkpoint(stem));
  m.trained_ = meta.value("trained", false);
  if (meta.contains("stats_mean")) {
    m.stats_.mean = meta.at("stats_mean").get<std::vector<double>>();
    m.stats_.var = meta.at("stats_var").get<std::vector<double>>();
  }
  return m;
}

}  // namespace glab
