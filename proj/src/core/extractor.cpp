#include "core/extractor.hpp"

#include <algorithm>
#include <numeric>

#include <nlohmann/json.hpp>

namespace glab {

using nlohmann::json;

void ExtractorConfig::validate() const {
  if (input_dim < 1) fail(Status::invalid_argument, "extractor input_dim must be positive");
  if (channels.empty() || decoder_channels.empty())
    fail(Status::invalid_argument, "extractor needs encoder and decoder channels");
  if (feature_block < 0 || feature_block >= static_cast<int64_t>(channels.size()))
    fail(Status::invalid_argument, "extractor feature_block out of range");
  if (feature_dim() != 128)
    fail(Status::invalid_argument,
         "extractor feature block must output 128 channels, got " + std::to_string(feature_dim()));
  if (kernel < 1 || kernel % 2 == 0)
    fail(Status::invalid_argument, "extractor kernel must be odd and positive");
  if (dilations.empty()) fail(Status::invalid_argument, "extractor needs a dilation schedule");
}

FeatureExtractor FeatureExtractor::create(const ExtractorConfig& cfg, uint64_t seed,
                                          bool trainable) {
  cfg.validate();
  FeatureExtractor ex;
  ex.cfg_ = cfg;
  Rng rng(mix_seed(seed, 0x0fe17a9cULL));
  ex.encoder_ = make_conv_stack(ex.params_, "enc", cfg.input_dim, cfg.channels, cfg.kernel,
                                cfg.dilations, rng);
  ex.decoder_ = make_conv_stack(ex.params_, "dec", cfg.channels.back(), cfg.decoder_channels,
                                cfg.kernel, cfg.dilations, rng);
  ex.out_proj_ = make_conv(ex.params_, "out", cfg.decoder_channels.back(), cfg.input_dim, 1, 1, rng);
  if (!trainable) ex.params_.freeze();
  return ex;
}

std::vector<Tensor> FeatureExtractor::encode_features(const Tensor& x) const {
  if (x.ndim() != 2 || x.dim(0) != cfg_.input_dim)
    fail(Status::shape_mismatch, "extractor input must be [" + std::to_string(cfg_.input_dim) +
                                     ", T], got " + shape_str(x.shape()));
  return encoder_.forward_all(x);
}

Tensor FeatureExtractor::features(const Tensor& x) const {
  return encode_features(x)[static_cast<size_t>(cfg_.feature_block)];
}

Tensor FeatureExtractor::reconstruct(const Tensor& x) const {
  const Tensor code = encode_features(x).back();
  return out_proj_.forward(decoder_.forward(code));
}

void FeatureExtractor::save(const std::string& stem) const {
  json meta;
  meta["kind"] = "feature-extractor";
  meta["input_dim"] = cfg_.input_dim;
  meta["channels"] = cfg_.channels;
  meta["decoder_channels"] = cfg_.decoder_channels;
  meta["kernel"] = cfg_.kernel;
  meta["dilations"] = cfg_.dilations;
  meta["feature_block"] = cfg_.feature_block;
  save_checkpoint(stem, params_.to_records(), meta.dump());
}

FeatureExtractor FeatureExtractor::load(const std::string& stem, bool trainable) {
  json meta;
  try {
    meta = json::parse(load_checkpoint_meta(stem));
  } catch (const json::exception& e) {
    fail(Status::io, "extractor checkpoint meta is not valid JSON: " + std::string(e.what()));
  }
  if (meta.value("kind", "") != "feature-extractor")
    fail(Status::invalid_argument, "checkpoint at " + stem + " is not a feature extractor");
  ExtractorConfig cfg;
  cfg.input_dim = meta.at("input_dim").get<int64_t>();
  cfg.channels = meta.at("channels").get<std::vector<int64_t>>();
  cfg.decoder_channels = meta.at("decoder_channels").get<std::vector<int64_t>>();
  cfg.kernel = meta.at("kernel").get<int64_t>();
  cfg.dilations = meta.at("dilations").get<std::vector<int64_t>>();
  cfg.feature_block = meta.at("feature_block").get<int64_t>();
  FeatureExtractor ex = create(cfg, 0, trainable);
  ex.params_.load_records(load_checkpoint(stem));
  return ex;
}

double train_extractor(FeatureExtractor& ex, const std::vector<std::vector<double>>& clips,
                       const ExtractorTrainOpts& opts) {
  if (clips.empty()) fail(Status::invalid_argument, "extractor training needs clips");
  const int64_t dim = ex.config().input_dim;
  std::vector<Tensor> inputs;
  inputs.reserve(clips.size());
  for (const auto& c : clips) {
    if (c.size() % static_cast<size_t>(dim) != 0)
      fail(Status::shape_mismatch, "extractor clip size is not a multiple of input_dim");
    const int64_t t = static_cast<int64_t>(c.size()) / dim;
    inputs.push_back(Tensor::from({dim, t}, c));
  }

  Adam opt(ex.params().tensors(), opts.lr);
  Rng rng(mix_seed(opts.seed, 0x5eedfeedULL));
  std::vector<size_t> order(inputs.size());
  std::iota(order.begin(), order.end(), size_t{0});

  double last = 0.0;
  size_t cursor = order.size();  // force an initial shuffle
  for (int64_t step = 0; step < opts.steps; ++step) {
    if (cursor >= order.size()) {
      for (size_t i = order.size(); i > 1; --i)
        std::swap(order[i - 1], order[static_cast<size_t>(rng.uniform_int(0, int64_t(i) - 1))]);
      cursor = 0;
    }
    const Tensor& x = inputs[order[cursor++]];
    Tape tape;
    const Tensor loss = mean_all(square(sub(ex.reconstruct(x), x)));
    tape.backward(loss);
    opt.step();
    opt.zero_grad();
    last = loss.item();
  }
  return last;
}

std::vector<double> motion_channels(const Motion& m) {
  m.validate();
  const int64_t T = m.frames, J = m.joints, D = m.dims;
  std::vector<double> out(static_cast<size_t>(J * D * T));
  for (int64_t t = 0; t < T; ++t)
    for (int64_t j = 0; j < J; ++j)
      for (int64_t d = 0; d < D; ++d)
        out[static_cast<size_t>((j * D + d) * T + t)] =
            m.data[static_cast<size_t>((t * J + j) * D + d)];
  return out;
}

Tensor motion_channels_t(const Motion& m) {
  return Tensor::from({m.joints * m.dims, m.frames}, motion_channels(m));
}

}  // namespace glab
