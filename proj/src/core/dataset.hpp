#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "core/motion.hpp"
#include "core/rng.hpp"
#include "core/skeleton.hpp"

namespace glab {

// Procedural audio->gesture corpus with controlled one-to-many structure.
// Every sample pairs band-envelope audio features with an arm-swing motion:
// the audio encodes only a rhythm curve (a sum of low-frequency sinusoids),
// while the gesture style (which arm swings) and the swing amplitude vary
// freely across samples sharing the same rhythm. A model therefore cannot
// predict the style from the audio; it must come from the motion side.
//
// Styles: 0 = left arm swings, 1 = right arm swings, 2 = both swing in
// anti-phase. The same rhythm appears once per style.

struct DatasetSample {
  FeatureMatrix audio;  // [frames, audio_dim]
  Motion motion;        // rotations6d, embeds the skeleton
  int64_t style = 0;
  int64_t rhythm = 0;  // rhythm group id within its split
};

struct Dataset {
  double fps = 30.0;
  int64_t frames = 150;
  int64_t audio_dim = 16;
  Skeleton skeleton;
  std::vector<DatasetSample> train, val;
  // Smallest mean per-joint position distance between same-rhythm,
  // different-style validation motions: how far apart the "many" modes sit.
  double min_interstyle_margin = 0.0;
};

struct SyntheticSpec {
  int64_t rhythms_train = 16;
  int64_t rhythms_val = 4;
  int64_t styles = 3;  // 1..3, drawn from the list above
  int64_t frames = 150;
  int64_t audio_dim = 16;
  double fps = 30.0;
  double amp_lo = 0.45;  // swing amplitude range (radians)
  double amp_hi = 0.75;
  uint64_t seed = 1234;
};

// The 8-joint desk figure (centimeters): root, spine, chest, head, then
// arm/wrist pairs hanging off the chest. Wrist rest span 60.
Skeleton default_skeleton();

Dataset generate_dataset(const SyntheticSpec& spec);

void save_dataset(const Dataset& ds, const std::string& dir);
Dataset load_dataset(const std::string& dir);

// Rhythm curve in [-1, 1]: normalized sum of three sinusoids whose
// frequencies live in [0.4, 1.6] Hz. Exposed for tests.
std::vector<double> rhythm_curve(Rng& rng, int64_t frames, double fps);

}  // namespace glab
