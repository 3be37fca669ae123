#include "core/experiments.hpp"

#include <cmath>

namespace glab {

namespace {

FeatureMatrix trim_audio(const FeatureMatrix& audio, int64_t frames) {
  FeatureMatrix out;
  out.frames = frames;
  out.dim = audio.dim;
  out.data.assign(audio.data.begin(), audio.data.begin() + frames * audio.dim);
  return out;
}

Motion trim_motion(const Motion& m, int64_t frames) {
  Motion out = m;
  out.frames = frames;
  out.data.assign(m.data.begin(), m.data.begin() + frames * m.joints * m.dims);
  return out;
}

}  // namespace

int64_t usable_frames(const Model& model, int64_t frames) {
  if (!model.config().use_dct) return frames;
  const int64_t unit = model.config().dct_frames;
  return (frames / unit) * unit;
}

std::array<double, 2> wrist_energies(const Motion& m) {
  m.validate();
  if (!m.has_skeleton || m.skeleton.wrists[0] < 0 || m.skeleton.wrists[1] < 0)
    fail(Status::invalid_argument, "wrist energies need a skeleton with wrist joints");
  if (m.frames < 3) fail(Status::invalid_argument, "wrist energies need at least 3 frames");
  const std::vector<double> pos = m.positions();
  const int64_t d = m.position_dims();
  std::array<double, 2> out{0.0, 0.0};
  for (int w = 0; w < 2; ++w) {
    const int64_t j = m.skeleton.wrists[static_cast<size_t>(w)];
    double mean = 0.0;
    std::vector<double> vel(static_cast<size_t>(m.frames - 1));
    for (int64_t t = 0; t + 1 < m.frames; ++t) {
      const double y0 = pos[static_cast<size_t>((t * m.joints + j) * d + 1)];
      const double y1 = pos[static_cast<size_t>(((t + 1) * m.joints + j) * d + 1)];
      vel[static_cast<size_t>(t)] = y1 - y0;
      mean += vel[static_cast<size_t>(t)];
    }
    mean /= static_cast<double>(vel.size());
    double var = 0.0;
    for (double v : vel) var += (v - mean) * (v - mean);
    out[static_cast<size_t>(w)] = var / static_cast<double>(vel.size());
  }
  return out;
}

int64_t classify_style(const Motion& m, double ratio) {
  const auto e = wrist_energies(m);
  const double top = std::max(e[0], e[1]);
  if (top <= 0.0) return 2;  // nothing moves; call it "both" (degenerate)
  const bool left = e[0] > ratio * top;
  const bool right = e[1] > ratio * top;
  if (left && right) return 2;
  return left ? 0 : 1;
}

std::vector<std::vector<Motion>> generate_style_sets(const Model& model, const Dataset& ds,
                                                     int64_t draws, uint64_t seed) {
  if (draws < 2) fail(Status::invalid_argument, "style sets need at least 2 draws");
  std::vector<std::vector<Motion>> groups;
  // One entry per rhythm group: all styles share the audio, take style 0's.
  for (const DatasetSample& s : ds.val) {
    if (s.style != 0) continue;
    const int64_t frames = usable_frames(model, s.audio.frames);
    if (frames < 2) continue;
    const FeatureMatrix audio = trim_audio(s.audio, frames);
    std::vector<Motion> set;
    set.reserve(static_cast<size_t>(draws));
    for (int64_t k = 0; k < draws; ++k) {
      GenerateOptions opts;
      opts.seed = mix_seed(seed, mix_seed(static_cast<uint64_t>(s.rhythm),
                                          static_cast<uint64_t>(k)));
      set.push_back(model.generate(audio, opts));
    }
    groups.push_back(std::move(set));
  }
  if (groups.empty()) fail(Status::invalid_argument, "no usable validation audios");
  return groups;
}

Motion reconstruct_with_reference(const Model& model, const DatasetSample& s) {
  const int64_t frames = usable_frames(model, s.audio.frames);
  if (frames < 2) fail(Status::invalid_argument, "sample too short for this model");
  const FeatureMatrix audio = trim_audio(s.audio, frames);
  const Motion ref = trim_motion(s.motion, frames);
  GenerateOptions opts;
  opts.specific = GenerateOptions::SpecificSource::reference;
  opts.reference = &ref;
  return model.generate(audio, opts);
}

double val_reconstruction_error(const Model& model, const Dataset& ds) {
  if (ds.val.empty()) fail(Status::invalid_argument, "validation split is empty");
  EvalConfig cfg;
  double acc = 0.0;
  int64_t count = 0;
  for (const DatasetSample& s : ds.val) {
    const int64_t frames = usable_frames(model, s.audio.frames);
    if (frames < 2) continue;
    const Motion pred = reconstruct_with_reference(model, s);
    const Motion gt = trim_motion(s.motion, frames);
    acc += evaluate_pair(pred, gt, nullptr, cfg).at("position_l1");
    ++count;
  }
  if (count == 0) fail(Status::invalid_argument, "no usable validation samples");
  return acc / static_cast<double>(count);
}

RhoSweepResult rho_sweep(const Dataset& ds, const ModelConfig& mc, const TrainConfig& tc,
                         const FeatureExtractor* ex, const std::vector<double>& rhos) {
  if (rhos.empty()) fail(Status::invalid_argument, "rho sweep needs at least one rho");
  RhoSweepResult result;
  for (double rho : rhos) {
    Model model = Model::create(mc);
    TrainConfig cfg = tc;
    cfg.weights.rho = rho;
    train_model(model, ds, ex, cfg);

    RhoSweepRow row;
    row.rho = rho;
    row.position_l1 = val_reconstruction_error(model, ds);

    const auto groups = generate_style_sets(model, ds, 4, mix_seed(tc.seed, 0xd1feULL));
    row.multimodality = multimodality(groups);
    double styles = 0.0;
    for (const auto& g : groups) {
      bool seen[3] = {false, false, false};
      for (const Motion& m : g) seen[classify_style(m)] = true;
      styles += static_cast<double>(seen[0]) + static_cast<double>(seen[1]) +
                static_cast<double>(seen[2]);
    }
    row.styles_hit = styles / static_cast<double>(groups.size());
    result.rows.push_back(row);
  }
  return result;
}

std::vector<std::pair<int64_t, double>> speed_by_keep(const Model& model, const Dataset& ds,
                                                      const std::vector<int64_t>& keeps,
                                                      int64_t draws, uint64_t seed) {
  std::vector<std::pair<int64_t, double>> out;
  for (int64_t keep : keeps) {
    double acc = 0.0;
    int64_t count = 0;
    for (const DatasetSample& s : ds.val) {
      if (s.style != 0) continue;
      const int64_t frames = usable_frames(model, s.audio.frames);
      if (frames < 2) continue;
      const FeatureMatrix audio = trim_audio(s.audio, frames);
      for (int64_t k = 0; k < draws; ++k) {
        GenerateOptions opts;
        opts.seed = mix_seed(seed, static_cast<uint64_t>(k * 131 + s.rhythm));
        opts.dct_keep = keep;
        acc += mean_speed(model.generate(audio, opts));
        ++count;
      }
    }
    if (count == 0) fail(Status::invalid_argument, "no usable validation audios");
    out.emplace_back(keep, acc / static_cast<double>(count));
  }
  return out;
}

DctAblationResult dct_ablation(const Dataset& ds, const ModelConfig& base_cfg,
                               const TrainConfig& tc, const FeatureExtractor* ex,
                               const std::vector<int64_t>& keeps) {
  ModelConfig plain_cfg = base_cfg;
  plain_cfg.use_dct = false;
  ModelConfig dct_cfg = base_cfg;
  dct_cfg.use_dct = true;
  dct_cfg.dct_frames = tc.crop;

  Model plain = Model::create(plain_cfg);
  train_model(plain, ds, ex, tc);
  Model dct = Model::create(dct_cfg);
  train_model(dct, ds, ex, tc);

  DctAblationResult r;
  r.base_position_l1 = val_reconstruction_error(plain, ds);
  r.dct_position_l1 = val_reconstruction_error(dct, ds);
  r.base_speed_by_keep = speed_by_keep(plain, ds, keeps, 2, mix_seed(tc.seed, 0xab1aULL));
  r.dct_speed_by_keep = speed_by_keep(dct, ds, keeps, 2, mix_seed(tc.seed, 0xab1bULL));
  return r;
}

}  // namespace glab
