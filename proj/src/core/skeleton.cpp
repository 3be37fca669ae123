#include "core/skeleton.hpp"

#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

namespace glab {

using nlohmann::json;

void Skeleton::validate() const {
  int64_t j = joints();
  if (j < 1) fail(Status::invalid_argument, "skeleton: needs at least one joint");
  if (static_cast<int64_t>(joint_names.size()) != j ||
      static_cast<int64_t>(offsets.size()) != j)
    fail(Status::invalid_argument, "skeleton: joint_names/parents/offsets sizes disagree");
  if (parents[0] != -1) fail(Status::invalid_argument, "skeleton: parents[0] must be -1 (root)");
  for (int64_t i = 1; i < j; ++i) {
    if (parents[i] < 0 || parents[i] >= i)
      fail(Status::invalid_argument,
           "skeleton: joint " + std::to_string(i) + " has cyclic or forward parent reference " +
               std::to_string(parents[i]));
  }
  for (int w : wrists) {
    if (w < 0 || w >= j)
      fail(Status::invalid_argument, "skeleton: wrist index " + std::to_string(w) + " out of range");
  }
}

int64_t Skeleton::chain_depth() const {
  int64_t j = joints();
  std::vector<int64_t> depth(static_cast<size_t>(j), 1);
  int64_t best = 1;
  for (int64_t i = 1; i < j; ++i) {
    depth[i] = depth[parents[i]] + 1;
    best = std::max(best, depth[i]);
  }
  return best;
}

std::vector<double> Skeleton::rest_positions() const {
  int64_t j = joints();
  std::vector<double> pos(static_cast<size_t>(j * 3), 0.0);
  for (int64_t i = 1; i < j; ++i) {
    int p = parents[i];
    for (int64_t d = 0; d < 3; ++d) pos[i * 3 + d] = pos[p * 3 + d] + offsets[i][d];
  }
  return pos;
}

double Skeleton::rest_wrist_span() const {
  auto pos = rest_positions();
  double s = 0.0;
  for (int64_t d = 0; d < 3; ++d) {
    double diff = pos[wrists[0] * 3 + d] - pos[wrists[1] * 3 + d];
    s += diff * diff;
  }
  return std::sqrt(s);
}

Skeleton skeleton_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    fail(Status::io, std::string("skeleton: malformed JSON: ") + e.what());
  }
  Skeleton s;
  try {
    s.joint_names = doc.at("joint_names").get<std::vector<std::string>>();
    s.parents = doc.at("parents").get<std::vector<int>>();
    for (const json& o : doc.at("offsets")) {
      if (o.size() != 3) fail(Status::invalid_argument, "skeleton: offsets must be 3-vectors");
      s.offsets.push_back({o[0].get<double>(), o[1].get<double>(), o[2].get<double>()});
    }
    auto w = doc.at("wrists").get<std::vector<int>>();
    if (w.size() != 2) fail(Status::invalid_argument, "skeleton: wrists must list two joints");
    s.wrists = {w[0], w[1]};
  } catch (const json::exception& e) {
    fail(Status::io, std::string("skeleton: missing or mistyped field: ") + e.what());
  }
  s.validate();
  return s;
}

std::string skeleton_to_json(const Skeleton& s) {
  json doc;
  doc["format"] = "glab-skeleton";
  doc["version"] = 1;
  doc["joint_names"] = s.joint_names;
  doc["parents"] = s.parents;
  doc["offsets"] = json::array();
  for (const auto& o : s.offsets) doc["offsets"].push_back({o[0], o[1], o[2]});
  doc["wrists"] = {s.wrists[0], s.wrists[1]};
  return doc.dump(2);
}

Skeleton load_skeleton(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(Status::io, "skeleton: cannot open " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return skeleton_from_json(text);
}

void save_skeleton(const Skeleton& s, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(Status::io, "skeleton: cannot open " + path + " for writing");
  out << skeleton_to_json(s) << "\n";
}

}  // namespace glab
