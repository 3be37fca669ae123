#include "core/motion.hpp"

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "core/common.hpp"
#include "core/kinematics.hpp"
#include "core/signal.hpp"

namespace glab {

using nlohmann::json;

static constexpr char kMotionMagic[8] = {'G', 'L', 'A', 'B', 'M', 'O', 'T', '1'};

void Motion::validate() const {
  if (frames < 1) fail(Status::invalid_argument, "motion needs at least 1 frame");
  if (joints < 1) fail(Status::invalid_argument, "motion needs at least 1 joint");
  if (mode == MotionMode::rotations6d) {
    if (dims != 6) fail(Status::invalid_argument, "rotation motion must have dims=6");
    if (!has_skeleton) fail(Status::invalid_argument, "rotation motion needs an embedded skeleton");
    skeleton.validate();
    if (skeleton.joints() != joints)
      fail(Status::shape_mismatch, "motion joint count " + std::to_string(joints) +
                                       " does not match skeleton joint count " +
                                       std::to_string(skeleton.joints()));
  } else {
    if (dims != 2 && dims != 3)
      fail(Status::invalid_argument, "position motion must have dims=2 or dims=3");
  }
  if (static_cast<int64_t>(data.size()) != frames * joints * dims)
    fail(Status::shape_mismatch, "motion buffer has " + std::to_string(data.size()) +
                                     " values, expected " + std::to_string(frames * joints * dims));
  if (fps <= 0) fail(Status::invalid_argument, "motion fps must be positive");
}

std::vector<double> Motion::positions() const {
  validate();
  if (mode == MotionMode::positions) return data;
  return fk_positions(skeleton, data, frames);
}

Motion read_motion(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Status::io, "cannot open motion file: " + path);
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kMotionMagic, 8) != 0)
    fail(Status::io, "not a motion file (bad magic): " + path);
  uint32_t hlen = 0;
  in.read(reinterpret_cast<char*>(&hlen), 4);
  if (!in || hlen == 0 || hlen > (1u << 20)) fail(Status::io, "corrupt motion header in " + path);
  std::string htext(hlen, '\0');
  in.read(htext.data(), hlen);
  if (!in) fail(Status::io, "truncated motion header in " + path);

  json h;
  try {
    h = json::parse(htext);
  } catch (const json::exception& e) {
    fail(Status::io, "motion header is not valid JSON (" + std::string(e.what()) + "): " + path);
  }
  if (h.value("version", 0) != 1)
    fail(Status::io, "unsupported motion container version in " + path);

  Motion m;
  const std::string mode = h.at("mode").get<std::string>();
  if (mode == "rotations6d")
    m.mode = MotionMode::rotations6d;
  else if (mode == "positions")
    m.mode = MotionMode::positions;
  else
    fail(Status::io, "unknown motion mode '" + mode + "' in " + path);
  m.fps = h.at("fps").get<double>();
  m.frames = h.at("frames").get<int64_t>();
  m.joints = h.at("joints").get<int64_t>();
  m.dims = h.at("dims").get<int64_t>();
  if (h.contains("skeleton") && !h.at("skeleton").is_null()) {
    m.skeleton = skeleton_from_json(h.at("skeleton").dump());
    m.has_skeleton = true;
  }

  if (m.frames < 1 || m.joints < 1 || m.dims < 1 || m.frames * m.joints * m.dims > (int64_t(1) << 32))
    fail(Status::io, "implausible motion dimensions in " + path);
  m.data.resize(static_cast<size_t>(m.frames * m.joints * m.dims));
  in.read(reinterpret_cast<char*>(m.data.data()),
          static_cast<std::streamsize>(m.data.size() * sizeof(double)));
  if (!in) fail(Status::io, "truncated motion data in " + path);
  m.validate();
  return m;
}

void write_motion(const Motion& m, const std::string& path) {
  m.validate();
  json h;
  h["version"] = 1;
  h["mode"] = m.mode == MotionMode::rotations6d ? "rotations6d" : "positions";
  h["fps"] = m.fps;
  h["frames"] = m.frames;
  h["joints"] = m.joints;
  h["dims"] = m.dims;
  if (m.has_skeleton)
    h["skeleton"] = json::parse(skeleton_to_json(m.skeleton));
  else
    h["skeleton"] = nullptr;
  const std::string htext = h.dump();

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(Status::io, "cannot write motion file: " + path);
  out.write(kMotionMagic, 8);
  const uint32_t hlen = static_cast<uint32_t>(htext.size());
  out.write(reinterpret_cast<const char*>(&hlen), 4);
  out.write(htext.data(), static_cast<std::streamsize>(htext.size()));
  out.write(reinterpret_cast<const char*>(m.data.data()),
            static_cast<std::streamsize>(m.data.size() * sizeof(double)));
  if (!out) fail(Status::io, "failed writing motion file: " + path);
}

// ---- feature matrices ----

static void check_feature_shape(const FeatureMatrix& f, const std::string& where) {
  if (f.frames < 1 || f.dim < 1)
    fail(Status::invalid_argument, "feature matrix needs positive frames and dim (" + where + ")");
  if (static_cast<int64_t>(f.data.size()) != f.frames * f.dim)
    fail(Status::shape_mismatch, "feature matrix has " + std::to_string(f.data.size()) +
                                     " values, expected " + std::to_string(f.frames * f.dim) +
                                     " (" + where + ")");
}

FeatureMatrix read_features_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(Status::io, "cannot open feature csv: " + path);
  std::string header;
  std::getline(in, header);
  FeatureMatrix f;
  if (std::sscanf(header.c_str(), "# glab-features frames=%lld dim=%lld",
                  reinterpret_cast<long long*>(&f.frames),
                  reinterpret_cast<long long*>(&f.dim)) != 2)
    fail(Status::io, "feature csv missing shape header line: " + path);
  if (f.frames < 1 || f.dim < 1) fail(Status::io, "bad shape header in " + path);
  f.data.reserve(static_cast<size_t>(f.frames * f.dim));
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream row(line);
    std::string cell;
    while (std::getline(row, cell, ',')) f.data.push_back(std::stod(cell));
  }
  check_feature_shape(f, path);
  return f;
}

void write_features_csv(const FeatureMatrix& f, const std::string& path) {
  check_feature_shape(f, path);
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(Status::io, "cannot write feature csv: " + path);
  out << "# glab-features frames=" << f.frames << " dim=" << f.dim << "\n";
  out.precision(17);
  for (int64_t t = 0; t < f.frames; ++t) {
    for (int64_t d = 0; d < f.dim; ++d) {
      if (d) out << ',';
      out << f.data[static_cast<size_t>(t * f.dim + d)];
    }
    out << '\n';
  }
  if (!out) fail(Status::io, "failed writing feature csv: " + path);
}

FeatureMatrix read_features_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(Status::io, "cannot open feature json: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    fail(Status::io, "feature json parse error (" + std::string(e.what()) + "): " + path);
  }
  FeatureMatrix f;
  f.frames = j.at("frames").get<int64_t>();
  f.dim = j.at("dim").get<int64_t>();
  f.data = j.at("data").get<std::vector<double>>();
  check_feature_shape(f, path);
  return f;
}

void write_features_json(const FeatureMatrix& f, const std::string& path) {
  check_feature_shape(f, path);
  json j;
  j["frames"] = f.frames;
  j["dim"] = f.dim;
  j["data"] = f.data;
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(Status::io, "cannot write feature json: " + path);
  out << j.dump() << '\n';
  if (!out) fail(Status::io, "failed writing feature json: " + path);
}

FeatureMatrix load_audio_features(const std::string& path) {
  auto ends_with = [&](const char* suffix) {
    const size_t n = std::strlen(suffix);
    return path.size() >= n && path.compare(path.size() - n, n, suffix) == 0;
  };
  if (ends_with(".wav")) {
    int64_t rate = 0;
    const std::vector<double> samples = read_wav(path, &rate);
    const LogMelSpec spec;
    if (rate != spec.sample_rate)
      fail(Status::invalid_argument, "wav sample rate " + std::to_string(rate) +
                                         " != expected " + std::to_string(spec.sample_rate) +
                                         ": " + path);
    FeatureMatrix f;
    f.dim = spec.n_mels;
    f.data = log_mel(samples, spec, &f.frames);
    return f;
  }
  if (ends_with(".csv")) return read_features_csv(path);
  if (ends_with(".json")) return read_features_json(path);
  fail(Status::invalid_argument, "unsupported audio feature file (want .wav/.csv/.json): " + path);
}

}  // namespace glab
