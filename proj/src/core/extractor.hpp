#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "core/motion.hpp"
#include "core/nn.hpp"
#include "core/tensor.hpp"

namespace glab {

// Convolutional motion autoencoder whose encoder doubles as the perceptual
// feature net: five dilated residual blocks (dilations 1,2,4,8,16 by
// default, receptive field 125 frames). The block at `feature_block`
// (0-based; the fourth block) must output 128 channels; its time-averaged
// activations are the distribution-distance features, and all block outputs
// feed the perceptual distance.
struct ExtractorConfig {
  int64_t input_dim = 48;  // channels of the motion representation (J*6 or J*2)
  std::vector<int64_t> channels{64, 64, 64, 128, 32};
  std::vector<int64_t> decoder_channels{64, 64, 64, 64};
  int64_t kernel = 3;
  std::vector<int64_t> dilations{1, 2, 4, 8, 16};
  int64_t feature_block = 3;

  void validate() const;
  int64_t feature_dim() const { return channels[static_cast<size_t>(feature_block)]; }
  int64_t receptive_field() const {
    return conv_stack_receptive_field(static_cast<int64_t>(channels.size()), kernel, dilations);
  }
};

class FeatureExtractor {
 public:
  // trainable=false builds frozen weights (no gradient buffers on the
  // parameters; gradients still flow through to the input).
  static FeatureExtractor create(const ExtractorConfig& cfg, uint64_t seed,
                                 bool trainable = true);

  // x is channel-major [input_dim, T]; returns every block's output [C_i, T].
  std::vector<Tensor> encode_features(const Tensor& x) const;
  Tensor features(const Tensor& x) const;  // the feature_block output
  Tensor reconstruct(const Tensor& x) const;

  void save(const std::string& stem) const;
  static FeatureExtractor load(const std::string& stem, bool trainable = false);

  const ExtractorConfig& config() const { return cfg_; }
  ParamStore& params() { return params_; }

 private:
  ExtractorConfig cfg_;
  ParamStore params_;
  ConvStack encoder_, decoder_;
  ConvLayer out_proj_;
};

struct ExtractorTrainOpts {
  int64_t steps = 600;
  double lr = 1e-3;
  uint64_t seed = 7;
};

// Trains the autoencoder on channel-major clips (each clip input_dim * T
// doubles, all the same input_dim). Returns the mean reconstruction error
// over the final pass through the data.
double train_extractor(FeatureExtractor& ex, const std::vector<std::vector<double>>& clips,
                       const ExtractorTrainOpts& opts);

// Motion clip -> channel-major buffer [J*dims, T]; channel j*dims+d holds
// joint j, component d.
std::vector<double> motion_channels(const Motion& m);
Tensor motion_channels_t(const Motion& m);

}  // namespace glab
