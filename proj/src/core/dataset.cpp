#include "core/dataset.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "core/rotation.hpp"

namespace glab {

namespace fs = std::filesystem;
using nlohmann::json;

Skeleton default_skeleton() {
  Skeleton s;
  s.joint_names = {"root", "spine", "chest", "head", "l_arm", "l_wrist", "r_arm", "r_wrist"};
  s.parents = {-1, 0, 1, 2, 2, 4, 2, 6};
  s.offsets = {{0, 0, 0},  {0, 20, 0},  {0, 20, 0}, {0, 15, 0},
               {15, 0, 0}, {15, 0, 0},  {-15, 0, 0}, {-15, 0, 0}};
  s.wrists = {5, 7};
  s.validate();
  return s;
}

std::vector<double> rhythm_curve(Rng& rng, int64_t frames, double fps) {
  double freq[3], phase[3], amp[3];
  double amp_sum = 0.0;
  for (int k = 0; k < 3; ++k) {
    freq[k] = rng.uniform(0.4, 1.6);
    phase[k] = rng.uniform(0.0, 2.0 * M_PI);
    amp[k] = rng.uniform(0.5, 1.0);
    amp_sum += amp[k];
  }
  std::vector<double> r(static_cast<size_t>(frames));
  for (int64_t t = 0; t < frames; ++t) {
    const double sec = static_cast<double>(t) / fps;
    double v = 0.0;
    for (int k = 0; k < 3; ++k) v += amp[k] * std::sin(2.0 * M_PI * freq[k] * sec + phase[k]);
    r[static_cast<size_t>(t)] = v / amp_sum;
  }
  return r;
}

namespace {

FeatureMatrix audio_from_rhythm(const std::vector<double>& r, int64_t audio_dim, double fps) {
  FeatureMatrix f;
  f.frames = static_cast<int64_t>(r.size());
  f.dim = audio_dim;
  f.data.resize(static_cast<size_t>(f.frames * f.dim));
  for (int64_t t = 0; t < f.frames; ++t) {
    const double energy = 0.5 + 0.5 * r[static_cast<size_t>(t)];
    const double sec = static_cast<double>(t) / fps;
    for (int64_t b = 0; b < audio_dim; ++b) {
      const double gain =
          0.35 + 0.65 * (0.5 + 0.5 * std::sin(2.0 * M_PI * (static_cast<double>(b) + 0.25) /
                                              static_cast<double>(audio_dim)));
      // Band texture varies with time and band but never with style.
      f.data[static_cast<size_t>(t * audio_dim + b)] =
          gain * energy + 0.05 * std::sin(0.7 * sec + 2.1 * static_cast<double>(b));
    }
  }
  return f;
}

void write_sixd(std::vector<double>& data, int64_t frame, int64_t joints, int64_t joint,
                const Eigen::Matrix3d& r) {
  rotmat_to_sixd(r, &data[static_cast<size_t>((frame * joints + joint) * 6)]);
}

Motion motion_from_rhythm(const Skeleton& skel, const std::vector<double>& r, int64_t style,
                          double amp) {
  const int64_t J = skel.joints();
  Motion m;
  m.mode = MotionMode::rotations6d;
  m.frames = static_cast<int64_t>(r.size());
  m.joints = J;
  m.dims = 6;
  m.has_skeleton = true;
  m.skeleton = skel;
  m.data.resize(static_cast<size_t>(m.frames * J * 6));

  const Eigen::Vector3d z = Eigen::Vector3d::UnitZ();
  for (int64_t t = 0; t < m.frames; ++t) {
    const double rv = r[static_cast<size_t>(t)];
    // Left arm lifts with +z rotation, right arm with -z; in the anti-phase
    // style the same sign drives both, so one rises as the other falls.
    const double theta_l = (style == 0 || style == 2) ? amp * rv : 0.0;
    const double theta_r = (style == 1) ? -amp * rv : (style == 2 ? amp * rv : 0.0);
    write_sixd(m.data, t, J, 0, Eigen::Matrix3d::Identity());
    write_sixd(m.data, t, J, 1, axis_angle_to_rotmat(z, 0.08 * rv));
    write_sixd(m.data, t, J, 2, Eigen::Matrix3d::Identity());
    write_sixd(m.data, t, J, 3, Eigen::Matrix3d::Identity());
    write_sixd(m.data, t, J, 4, axis_angle_to_rotmat(z, theta_l));
    write_sixd(m.data, t, J, 5, axis_angle_to_rotmat(z, 0.5 * theta_l));
    write_sixd(m.data, t, J, 6, axis_angle_to_rotmat(z, theta_r));
    write_sixd(m.data, t, J, 7, axis_angle_to_rotmat(z, 0.5 * theta_r));
  }
  return m;
}

double mean_position_distance(const Motion& a, const Motion& b) {
  const auto pa = a.positions();
  const auto pb = b.positions();
  double acc = 0.0;
  for (size_t i = 0; i < pa.size(); ++i) acc += std::fabs(pa[i] - pb[i]);
  return acc / static_cast<double>(a.frames * a.joints);
}

std::vector<DatasetSample> make_split(const SyntheticSpec& spec, const Skeleton& skel,
                                      Rng& split_rng, int64_t rhythms) {
  std::vector<DatasetSample> out;
  out.reserve(static_cast<size_t>(rhythms * spec.styles));
  for (int64_t g = 0; g < rhythms; ++g) {
    Rng rhythm_rng = split_rng.fork(static_cast<uint64_t>(g));
    const std::vector<double> r = rhythm_curve(rhythm_rng, spec.frames, spec.fps);
    const FeatureMatrix audio = audio_from_rhythm(r, spec.audio_dim, spec.fps);
    for (int64_t style = 0; style < spec.styles; ++style) {
      Rng amp_rng = rhythm_rng.fork(static_cast<uint64_t>(100 + style));
      DatasetSample s;
      s.audio = audio;
      s.style = style;
      s.rhythm = g;
      s.motion = motion_from_rhythm(skel, r, style, amp_rng.uniform(spec.amp_lo, spec.amp_hi));
      out.push_back(std::move(s));
    }
  }
  return out;
}

}  // namespace

Dataset generate_dataset(const SyntheticSpec& spec) {
  if (spec.styles < 1 || spec.styles > 3)
    fail(Status::invalid_argument, "synthetic dataset supports 1..3 styles");
  if (spec.frames < 2 || spec.rhythms_train < 1 || spec.rhythms_val < 1)
    fail(Status::invalid_argument, "synthetic dataset needs frames >= 2 and >= 1 rhythm per split");
  Dataset ds;
  ds.fps = spec.fps;
  ds.frames = spec.frames;
  ds.audio_dim = spec.audio_dim;
  ds.skeleton = default_skeleton();

  Rng root(spec.seed);
  Rng train_rng = root.fork(1);
  Rng val_rng = root.fork(2);
  ds.train = make_split(spec, ds.skeleton, train_rng, spec.rhythms_train);
  ds.val = make_split(spec, ds.skeleton, val_rng, spec.rhythms_val);

  ds.min_interstyle_margin = 0.0;
  bool first = true;
  for (size_t i = 0; i < ds.val.size(); ++i)
    for (size_t k = i + 1; k < ds.val.size(); ++k) {
      if (ds.val[i].rhythm != ds.val[k].rhythm || ds.val[i].style == ds.val[k].style) continue;
      const double d = mean_position_distance(ds.val[i].motion, ds.val[k].motion);
      if (first || d < ds.min_interstyle_margin) ds.min_interstyle_margin = d;
      first = false;
    }
  return ds;
}

namespace {

void save_split(const std::vector<DatasetSample>& split, const fs::path& dir) {
  fs::create_directories(dir);
  json index = json::array();
  char name[64];
  for (size_t i = 0; i < split.size(); ++i) {
    std::snprintf(name, sizeof(name), "sample_%04zu", i);
    const std::string motion_file = std::string(name) + ".motion";
    const std::string audio_file = std::string(name) + ".features.csv";
    write_motion(split[i].motion, (dir / motion_file).string());
    write_features_csv(split[i].audio, (dir / audio_file).string());
    index.push_back({{"motion", motion_file},
                     {"features", audio_file},
                     {"style", split[i].style},
                     {"rhythm", split[i].rhythm}});
  }
  std::ofstream out(dir / "index.json", std::ios::trunc);
  if (!out) fail(Status::io, "cannot write dataset index in " + dir.string());
  out << index.dump(1) << '\n';
}

std::vector<DatasetSample> load_split(const fs::path& dir) {
  std::ifstream in(dir / "index.json");
  if (!in) fail(Status::io, "cannot open dataset index in " + dir.string());
  json index;
  try {
    in >> index;
  } catch (const json::exception& e) {
    fail(Status::io, "dataset index parse error: " + std::string(e.what()));
  }
  std::vector<DatasetSample> split;
  split.reserve(index.size());
  for (const auto& entry : index) {
    DatasetSample s;
    s.motion = read_motion((dir / entry.at("motion").get<std::string>()).string());
    s.audio = read_features_csv((dir / entry.at("features").get<std::string>()).string());
    s.style = entry.at("style").get<int64_t>();
    s.rhythm = entry.at("rhythm").get<int64_t>();
    if (s.audio.frames != s.motion.frames)
      fail(Status::shape_mismatch, "dataset sample has mismatched audio/motion frame counts");
    split.push_back(std::move(s));
  }
  return split;
}

}  // namespace

void save_dataset(const Dataset& ds, const std::string& dir) {
  fs::create_directories(dir);
  json meta;
  meta["format"] = "glab-dataset";
  meta["version"] = 1;
  meta["fps"] = ds.fps;
  meta["frames"] = ds.frames;
  meta["audio_dim"] = ds.audio_dim;
  meta["skeleton"] = json::parse(skeleton_to_json(ds.skeleton));
  meta["min_interstyle_margin"] = ds.min_interstyle_margin;
  std::ofstream out(fs::path(dir) / "meta.json", std::ios::trunc);
  if (!out) fail(Status::io, "cannot write dataset meta in " + dir);
  out << meta.dump(1) << '\n';
  save_split(ds.train, fs::path(dir) / "train");
  save_split(ds.val, fs::path(dir) / "val");
}

Dataset load_dataset(const std::string& dir) {
  std::ifstream in(fs::path(dir) / "meta.json");
  if (!in) fail(Status::io, "cannot open dataset meta in " + dir);
  json meta;
  try {
    in >> meta;
  } catch (const json::exception& e) {
    fail(Status::io, "dataset meta parse error: " + std::string(e.what()));
  }
  if (meta.value("format", "") != "glab-dataset" || meta.value("version", 0) != 1)
    fail(Status::io, "not a dataset directory: " + dir);
  Dataset ds;
  ds.fps = meta.at("fps").get<double>();
  ds.frames = meta.at("frames").get<int64_t>();
  ds.audio_dim = meta.at("audio_dim").get<int64_t>();
  ds.skeleton = skeleton_from_json(meta.at("skeleton").dump());
  ds.min_interstyle_margin = meta.at("min_interstyle_margin").get<double>();
  ds.train = load_split(fs::path(dir) / "train");
  ds.val = load_split(fs::path(dir) / "val");
  return ds;
}

}  // namespace glab
