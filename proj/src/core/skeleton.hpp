#pragma once

#include <array>
#include <string>
#include <vector>

#include "core/common.hpp"

namespace glab {

// Joint hierarchy with fixed bone offsets (centimeters). Joints are stored
// parent-before-child; parents[0] == -1 marks the root, which stays at the
// origin. offsets[j] is the bone from parent(j) to j expressed in the frame
// that joint j's accumulated rotation acts on; offsets[0] is unused.
struct Skeleton {
  std::vector<std::string> joint_names;
  std::vector<int> parents;
  std::vector<std::array<double, 3>> offsets;
  std::array<int, 2> wrists{-1, -1};

  int64_t joints() const { return static_cast<int64_t>(parents.size()); }
  void validate() const;
  int64_t chain_depth() const;  // longest root-to-leaf chain, in joints
  // Positions at the rest pose (identity rotations), row-major [J, 3].
  std::vector<double> rest_positions() const;
  double rest_wrist_span() const;
};

Skeleton skeleton_from_json(const std::string& text);
std::string skeleton_to_json(const Skeleton& s);
Skeleton load_skeleton(const std::string& path);
void save_skeleton(const Skeleton& s, const std::string& path);

}  // namespace glab
