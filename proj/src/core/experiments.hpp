#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "core/dataset.hpp"
#include "core/metrics.hpp"
#include "core/model.hpp"
#include "core/train.hpp"

namespace glab {

// Laboratory experiments built on the training pipeline. Everything here is
// deterministic in the seeds it is handed.

// Variance of a wrist's vertical velocity, one entry per skeleton wrist
// (left, right). Separates the desk corpus styles cleanly: the driven arm
// swings an order of magnitude harder than the passive one.
std::array<double, 2> wrist_energies(const Motion& m);

// 0 = left arm active, 1 = right arm active, 2 = both. A wrist counts as
// active when it carries more than `ratio` of the stronger wrist's energy.
int64_t classify_style(const Motion& m, double ratio = 0.2);

// One audio, many styles: generates `draws` motions per validation audio
// with distinct style seeds. Groups are ordered like ds.val rhythm groups.
std::vector<std::vector<Motion>> generate_style_sets(const Model& model, const Dataset& ds,
                                                     int64_t draws, uint64_t seed);

// Hinge-slack sweep: trains one model per rho (all other settings shared)
// and measures how style variety and audio-conditioned fidelity move.
struct RhoSweepRow {
  double rho = 0.0;
  double multimodality = 0.0;   // across style draws per validation audio
  double position_l1 = 0.0;     // reference-coded reconstruction error
  double styles_hit = 0.0;      // mean distinct styles among the draws
};

struct RhoSweepResult {
  std::vector<RhoSweepRow> rows;
};

RhoSweepResult rho_sweep(const Dataset& ds, const ModelConfig& mc, const TrainConfig& tc,
                         const FeatureExtractor* ex, const std::vector<double>& rhos);

// Reference-coded generation: S from the sample's audio, I from its own
// motion; the tightest reconstruction the model offers at inference time.
Motion reconstruct_with_reference(const Model& model, const DatasetSample& s);

// Mean reference-coded position error over the validation split
// (motions trimmed to `frames` when the model needs fixed-length clips).
double val_reconstruction_error(const Model& model, const Dataset& ds);

// Trains the plain and DCT-variant models side by side, then compares
// fidelity and the effect of shared-code low-pass edits on motion speed.
struct DctAblationResult {
  double base_position_l1 = 0.0;
  double dct_position_l1 = 0.0;
  // (keep coefficients, mean generated speed), keep descending from "all".
  std::vector<std::pair<int64_t, double>> base_speed_by_keep;
  std::vector<std::pair<int64_t, double>> dct_speed_by_keep;
};

DctAblationResult dct_ablation(const Dataset& ds, const ModelConfig& base_cfg,
                               const TrainConfig& tc, const FeatureExtractor* ex,
                               const std::vector<int64_t>& keeps);

// Mean generated speed under a shared-code low-pass at each keep count,
// averaged over validation audios and style seeds.
std::vector<std::pair<int64_t, double>> speed_by_keep(const Model& model, const Dataset& ds,
                                                      const std::vector<int64_t>& keeps,
                                                      int64_t draws, uint64_t seed);

// Trims a motion/audio pair to the longest prefix the model can consume (a
// multiple of dct_frames for the DCT variant, unchanged otherwise).
int64_t usable_frames(const Model& model, int64_t frames);

}  // namespace glab
