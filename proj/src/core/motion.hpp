#pragma once

#include <string>
#include <vector>

#include "core/skeleton.hpp"

namespace glab {

// Motion clip interchange. Rotation clips carry per-joint 6D rotations and an
// embedded skeleton; position clips carry raw joint positions (2-D or 3-D).
// On disk: 8-byte magic "GLABMOT1", u32 little-endian header length, JSON
// header, then frames*joints*dims float64 little-endian values.
enum class MotionMode { rotations6d, positions };

struct Motion {
  MotionMode mode = MotionMode::rotations6d;
  double fps = 30.0;
  int64_t frames = 0;
  int64_t joints = 0;
  int64_t dims = 6;  // 6 for rotations, 2 or 3 for positions
  std::vector<double> data;  // row-major [frames, joints, dims]
  bool has_skeleton = false;
  Skeleton skeleton;

  void validate() const;
  // World positions [frames, joints, 3] (or [.., 2] in 2-D position mode):
  // runs forward kinematics for rotation clips, passthrough otherwise.
  std::vector<double> positions() const;
  int64_t position_dims() const { return mode == MotionMode::rotations6d ? 3 : dims; }
};

Motion read_motion(const std::string& path);
void write_motion(const Motion& m, const std::string& path);

// Audio feature matrices (log-mel frames or precomputed features).
// CSV: first line "# glab-features frames=<T> dim=<F>", then T rows.
// JSON: {"frames": T, "dim": F, "data": [row-major]}.
struct FeatureMatrix {
  int64_t frames = 0;
  int64_t dim = 0;
  std::vector<double> data;  // row-major [frames, dim]
};

FeatureMatrix read_features_csv(const std::string& path);
void write_features_csv(const FeatureMatrix& f, const std::string& path);
FeatureMatrix read_features_json(const std::string& path);
void write_features_json(const FeatureMatrix& f, const std::string& path);

// Dispatch by extension: .wav -> log-mel features, .csv / .json -> matrices.
FeatureMatrix load_audio_features(const std::string& path);

}  // namespace glab
