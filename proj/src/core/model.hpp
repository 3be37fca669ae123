#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "core/dataset.hpp"
#include "core/motion.hpp"
#include "core/nn.hpp"
#include "core/skeleton.hpp"
#include "core/tensor.hpp"

namespace glab {

// Split-latent audio-to-gesture model. Audio maps only to a shared code S
// (the rhythm-aligned part); a motion-specific code I carries whatever the
// audio cannot determine (style). Three temporal conv nets plus one
// frame-wise mapping net:
//
//   f_A : audio features [F, T]  -> S_A distribution [shared, T]
//   f_M : motion         [D, T]  -> S_M and I_M distributions
//   f_R : noise z [specific, T]  -> I_R distribution (generation-time styles)
//   g   : concat(S, I) [shared+specific, T] -> motion [D, T]
//
// In the DCT variant the time axis of every code lives in the DCT domain
// (fixed clip length), the shared head is deterministic, and low-pass edits
// just zero trailing coefficients. The no-split baseline drops I and f_R and
// widens S to shared_dim + specific_dim.
enum class OutputMode { rotations6d, positions2d };

struct ModelConfig {
  int64_t audio_dim = 16;
  OutputMode output = OutputMode::rotations6d;
  int64_t shared_dim = 16;
  int64_t specific_dim = 16;
  int64_t mapping_hidden = 32;
  std::vector<int64_t> audio_channels{128, 128, 96, 96, 64};
  std::vector<int64_t> motion_channels{256, 256, 128, 128, 64};
  std::vector<int64_t> decoder_channels{64, 128, 128, 256, 256};
  int64_t kernel = 3;
  std::vector<int64_t> dilations{1, 2, 4, 8, 16};
  bool use_dct = false;
  int64_t dct_frames = 128;  // fixed clip length in DCT mode
  bool baseline_no_split = false;
  uint64_t seed = 1;
  double fps = 30.0;
  Skeleton skeleton;  // embedded in generated motions; FK target in 3-D mode

  void validate() const;
  int64_t joints() const { return skeleton.joints(); }
  int64_t motion_dims() const { return output == OutputMode::rotations6d ? 6 : 2; }
  int64_t motion_dim() const { return joints() * motion_dims(); }
  int64_t code_dim() const { return baseline_no_split ? shared_dim + specific_dim : shared_dim; }
};

// Small-footprint settings for the procedural desk corpus.
ModelConfig desk_config(const Skeleton& skel, int64_t audio_dim = 16);

struct CodeDist {
  Tensor mean, logvar;  // [C, T]
};

// Reparameterized draw: mean + exp(logvar/2) * eps with eps from rng.
// Deterministic heads (no logvar) return the mean unchanged.
Tensor sample_code(const CodeDist& d, Rng& rng);

struct AudioEncoding {
  CodeDist shared;
};

struct MotionEncoding {
  CodeDist shared;
  CodeDist specific;  // undefined in baseline mode
};

// Per-channel running statistics of the specific-code means seen in
// training; an alternative generation-time source of style codes.
struct CodeStats {
  std::vector<double> mean, var;
  bool valid() const { return !mean.empty(); }
};

struct GenerateOptions {
  uint64_t seed = 0;
  // Shared-code low-pass edit: keep this many leading DCT coefficients per
  // channel (<= 0 keeps everything).
  int64_t dct_keep = 0;
  // zeros feeds an all-zero specific code to the decoder (an "erase the
  // style" edit; useful for checking the decoder actually reads the code).
  enum class SpecificSource { mapped, stats, reference, zeros };
  SpecificSource specific = SpecificSource::mapped;
  const Motion* reference = nullptr;  // required for SpecificSource::reference
};

class Model {
 public:
  static Model create(const ModelConfig& cfg);

  const ModelConfig& config() const { return cfg_; }
  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }
  CodeStats& specific_stats() { return stats_; }
  const CodeStats& specific_stats() const { return stats_; }
  bool trained() const { return trained_; }
  void set_trained(bool t) { trained_ = t; }

  // --- differentiable routes (training) ---
  AudioEncoding encode_audio_t(const Tensor& audio_ft) const;  // [F, T]
  MotionEncoding encode_motion_t(const Tensor& motion_dt) const;  // [D, T]
  CodeDist map_noise_t(const Tensor& z) const;                 // [specific, T]
  Tensor decode_t(const Tensor& shared, const Tensor& specific) const;  // -> [D, T]
  Tensor decode_baseline_t(const Tensor& shared) const;

  // [D, T] -> [T, J, dims] view of a decoded motion.
  Tensor to_frames_t(const Tensor& motion_dt) const;

  // --- plain routes (inference) ---
  Motion generate(const FeatureMatrix& audio, const GenerateOptions& opts = {}) const;
  // Specific code timeline: mapped style everywhere, the reference motion's
  // encoded style on frames [start, stop).
  Motion timeline_insert(const FeatureMatrix& audio, const Motion& reference, int64_t start,
                         int64_t stop, const GenerateOptions& opts = {}) const;
  // Mean specific code of a motion, [specific, T] values.
  std::vector<double> encode_specific(const Motion& m) const;
  // Mean shared code of audio features, [shared, T] values.
  std::vector<double> encode_shared(const FeatureMatrix& audio) const;

  void save(const std::string& stem) const;
  static Model load(const std::string& stem);

  // DCT-domain round trip of a code tensor (identity up to rounding when
  // keep >= T); exposed for the editing tests.
  static std::vector<double> code_lowpass(const std::vector<double>& code, int64_t channels,
                                          int64_t frames, int64_t keep);

 private:
  Tensor audio_tensor(const FeatureMatrix& audio) const;
  Tensor dct_time(const Tensor& x) const;   // [C, T] -> DCT along rows
  Tensor idct_time(const Tensor& x) const;
  Tensor sample_or_mean(const CodeDist& d, Rng* rng) const;
  Tensor specific_code_for(const FeatureMatrix& audio, int64_t frames,
                           const GenerateOptions& opts, Rng& rng) const;
  Motion decode_to_motion(const Tensor& shared, const Tensor& specific, int64_t frames) const;

  ModelConfig cfg_;
  ParamStore params_;
  ConvStack audio_net_, motion_net_, decoder_net_;
  ConvLayer audio_s_mean_, audio_s_logvar_;
  ConvLayer motion_s_mean_, motion_s_logvar_, motion_i_mean_, motion_i_logvar_;
  Dense map_hidden_, map_mean_, map_logvar_;
  ConvLayer out_proj_;
  CodeStats stats_;
  bool trained_ = false;
};

}  // namespace glab
