#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "core/dataset.hpp"
#include "core/extractor.hpp"
#include "core/losses.hpp"
#include "core/model.hpp"

namespace glab {

// One optimization step mixes five flows per sample:
//   1. motion reconstruction      g(S_M, I_M) vs the clip
//   2. audio-driven reconstruction g(S_A, I_M) vs the clip
//   3. relaxed hinge              g(S_A, I_R) vs the clip, slack rho
//   4. cycle                      f_M(g(S_A, I_R)).I_mean vs I_R, plus
//      diversity between two different I_R draws
//   5. code alignment S_A vs S_M, and KL terms on every variational head
// Structural terms (spectral, structural-similarity, perceptual) attach to
// both reconstruction flows.
struct LossWeights {
  MotionLossWeights motion;  // rot 1, pos 1, speed 5 inside each recon flow
  double reconstruction = 1.0;
  double stft = 0.1;
  double ssim = 0.1;
  double lpips = 0.05;
  double relaxed = 1.0;
  double rho = 3.0;  // hinge slack, motion units (cm on the desk figure)
  double cycle = 0.5;
  double diversity = 0.05;
  double diversity_cap = 50.0;
  double align = 0.5;
  double kl = 0.005;
};

struct TrainConfig {
  int64_t steps = 20000;
  int64_t batch = 8;
  int64_t crop = 64;  // training window, frames
  double lr = 1e-3;
  uint64_t seed = 42;
  LossWeights weights;
  double stats_momentum = 0.99;
  int64_t log_every = 25;
  std::string log_csv;  // optional path for a per-log-row CSV
};

struct TrainLogRow {
  int64_t step = 0;
  double total = 0, recon_motion = 0, recon_audio = 0, relaxed = 0, cycle = 0, diversity = 0,
         align = 0, kl = 0, stft = 0, ssim = 0, lpips = 0;
};

struct TrainResult {
  std::vector<TrainLogRow> log;
  double final_total = 0.0;
};

// Trains in place; fills the model's specific-code statistics (running
// during the run, exact recompute at the end) and sets the trained flag.
// `ex` feeds the perceptual term and may be null when weights.lpips == 0.
// Deterministic in (model seed, cfg.seed): two runs give bitwise-equal
// parameters. Aborts with Status::numeric naming the term and step if any
// loss goes non-finite.
TrainResult train_model(Model& model, const Dataset& ds, const FeatureExtractor* ex,
                        const TrainConfig& cfg);

// Exact per-channel mean/variance of the specific-code means over the train
// split (the momentum-free version of the running statistics).
CodeStats recompute_specific_stats(const Model& model, const Dataset& ds);

// Builds and trains the desk-scale feature extractor on the train motions.
FeatureExtractor train_dataset_extractor(const Dataset& ds, const ExtractorTrainOpts& opts);

}  // namespace glab
