#include "gesturelab/gesturelab.h"

#include <cstdlib>
#include <cstring>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "core/experiments.hpp"
#include "core/op_suite.hpp"
#include "core/signal.hpp"

using nlohmann::json;

namespace {

thread_local std::string g_last_error;

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

glab_status to_status(glab::Status s) { return static_cast<glab_status>(static_cast<int>(s)); }

template <typename Fn>
glab_status guarded(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return GLAB_OK;
  } catch (const glab::Error& e) {
    g_last_error = e.what();
    return to_status(e.status());
  } catch (const json::exception& e) {
    g_last_error = e.what();
    return GLAB_INVALID_ARGUMENT;
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return GLAB_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return GLAB_INTERNAL;
  }
}

void require(bool cond, const char* msg) {
  if (!cond) glab::fail(glab::Status::invalid_argument, msg);
}

// --- JSON helpers -----------------------------------------------------

json parse_object(const char* text, const char* what) {
  if (text == nullptr || *text == '\0') return json::object();
  const json j = json::parse(text);
  if (!j.is_object())
    glab::fail(glab::Status::invalid_argument, std::string(what) + " must be a JSON object");
  return j;
}

class Fields {
 public:
  Fields(json j, const char* what) : j_(std::move(j)), what_(what) {}

  template <typename T>
  void take(const char* key, T& slot) {
    if (j_.contains(key)) {
      slot = j_.at(key).get<T>();
      seen_.push_back(key);
    }
  }

  bool sub(const char* key, json& out) {
    if (!j_.contains(key)) return false;
    out = j_.at(key);
    if (!out.is_object())
      glab::fail(glab::Status::invalid_argument,
                 std::string(what_) + " key '" + key + "' must be an object");
    seen_.push_back(key);
    return true;
  }

  // Call last: any key not consumed above is a typo worth rejecting.
  void finish() const {
    for (const auto& item : j_.items()) {
      bool known = false;
      for (const std::string& k : seen_)
        if (k == item.key()) known = true;
      if (!known)
        glab::fail(glab::Status::invalid_argument,
                   std::string("unknown ") + what_ + " key: " + item.key());
    }
  }

 private:
  json j_;
  const char* what_;
  std::vector<std::string> seen_;
};

glab::SyntheticSpec parse_spec(const char* text) {
  glab::SyntheticSpec spec;
  Fields f(parse_object(text, "dataset spec"), "dataset spec");
  f.take("rhythms_train", spec.rhythms_train);
  f.take("rhythms_val", spec.rhythms_val);
  f.take("styles", spec.styles);
  f.take("frames", spec.frames);
  f.take("audio_dim", spec.audio_dim);
  f.take("fps", spec.fps);
  f.take("amp_lo", spec.amp_lo);
  f.take("amp_hi", spec.amp_hi);
  f.take("seed", spec.seed);
  f.finish();
  return spec;
}

glab::ModelConfig parse_model_config(const json& j) {
  glab::ModelConfig cfg = glab::desk_config(glab::default_skeleton());
  Fields f(j, "model config");
  f.take("audio_dim", cfg.audio_dim);
  std::string output;
  f.take("output", output);
  if (!output.empty()) {
    if (output == "rotations6d")
      cfg.output = glab::OutputMode::rotations6d;
    else if (output == "positions2d")
      cfg.output = glab::OutputMode::positions2d;
    else
      glab::fail(glab::Status::invalid_argument, "output must be rotations6d or positions2d");
  }
  f.take("shared_dim", cfg.shared_dim);
  f.take("specific_dim", cfg.specific_dim);
  f.take("mapping_hidden", cfg.mapping_hidden);
  f.take("audio_channels", cfg.audio_channels);
  f.take("motion_channels", cfg.motion_channels);
  f.take("decoder_channels", cfg.decoder_channels);
  f.take("kernel", cfg.kernel);
  f.take("dilations", cfg.dilations);
  f.take("use_dct", cfg.use_dct);
  f.take("dct_frames", cfg.dct_frames);
  f.take("baseline_no_split", cfg.baseline_no_split);
  f.take("seed", cfg.seed);
  f.take("fps", cfg.fps);
  f.finish();
  return cfg;
}

glab::TrainConfig parse_train_config(const json& j) {
  glab::TrainConfig cfg;
  Fields f(j, "train config");
  f.take("steps", cfg.steps);
  f.take("batch", cfg.batch);
  f.take("crop", cfg.crop);
  f.take("lr", cfg.lr);
  f.take("seed", cfg.seed);
  f.take("stats_momentum", cfg.stats_momentum);
  f.take("log_every", cfg.log_every);
  f.take("log_csv", cfg.log_csv);
  json weights;
  if (f.sub("weights", weights)) {
    Fields w(weights, "loss weights");
    w.take("reconstruction", cfg.weights.reconstruction);
    w.take("stft", cfg.weights.stft);
    w.take("ssim", cfg.weights.ssim);
    w.take("lpips", cfg.weights.lpips);
    w.take("relaxed", cfg.weights.relaxed);
    w.take("rho", cfg.weights.rho);
    w.take("cycle", cfg.weights.cycle);
    w.take("diversity", cfg.weights.diversity);
    w.take("diversity_cap", cfg.weights.diversity_cap);
    w.take("align", cfg.weights.align);
    w.take("kl", cfg.weights.kl);
    json motion;
    if (w.sub("motion", motion)) {
      Fields m(motion, "motion weights");
      m.take("rotation", cfg.weights.motion.rotation);
      m.take("position", cfg.weights.motion.position);
      m.take("speed", cfg.weights.motion.speed);
      m.finish();
    }
    w.finish();
  }
  f.finish();
  return cfg;
}

glab::EvalConfig parse_eval_config(Fields& f) {
  glab::EvalConfig cfg;
  f.take("pck_delta", cfg.pck_delta);
  f.take("diversity_window", cfg.diversity_window);
  return cfg;
}

glab::FeatureMatrix read_features(const std::string& path) {
  if (path.size() >= 5 && path.compare(path.size() - 5, 5, ".json") == 0)
    return glab::read_features_json(path);
  return glab::read_features_csv(path);
}

// opts may carry a reference motion path; ref_storage keeps it alive for the
// returned options.
glab::GenerateOptions parse_generate_opts(const char* text, glab::Motion& ref_storage,
                                          bool allow_reference) {
  glab::GenerateOptions opts;
  Fields f(parse_object(text, "generate options"), "generate options");
  f.take("seed", opts.seed);
  f.take("dct_keep", opts.dct_keep);
  std::string source, reference;
  f.take("specific", source);
  if (allow_reference) f.take("reference", reference);
  f.finish();
  if (!source.empty()) {
    if (source == "mapped")
      opts.specific = glab::GenerateOptions::SpecificSource::mapped;
    else if (source == "stats")
      opts.specific = glab::GenerateOptions::SpecificSource::stats;
    else if (source == "reference")
      opts.specific = glab::GenerateOptions::SpecificSource::reference;
    else if (source == "zeros")
      opts.specific = glab::GenerateOptions::SpecificSource::zeros;
    else
      glab::fail(glab::Status::invalid_argument,
                 "specific must be mapped, stats, reference or zeros");
  }
  if (opts.specific == glab::GenerateOptions::SpecificSource::reference) {
    require(!reference.empty(), "the reference source needs a reference motion path");
    ref_storage = glab::read_motion(reference);
    opts.reference = &ref_storage;
  } else {
    require(reference.empty(), "a reference path needs \"specific\": \"reference\"");
  }
  return opts;
}

json metrics_json(const std::map<std::string, double>& m) {
  json out = json::object();
  for (const auto& [k, v] : m) out[k] = v;
  return out;
}

double styles_hit(const std::vector<std::vector<glab::Motion>>& groups) {
  double acc = 0.0;
  for (const auto& g : groups) {
    bool seen[3] = {false, false, false};
    for (const glab::Motion& m : g) seen[glab::classify_style(m)] = true;
    acc += static_cast<double>(seen[0]) + static_cast<double>(seen[1]) +
           static_cast<double>(seen[2]);
  }
  return acc / static_cast<double>(groups.size());
}

}  // namespace

// --- handles ----------------------------------------------------------

struct glab_dataset {
  glab::Dataset ds;
};
struct glab_model {
  glab::Model model;
};
struct glab_motion {
  glab::Motion m;
};
struct glab_extractor {
  glab::FeatureExtractor ex;
};

extern "C" {

const char* glab_version(void) { return "0.1.0"; }

const char* glab_status_name(glab_status s) {
  return glab::status_name(static_cast<glab::Status>(static_cast<int>(s)));
}

const char* glab_last_error(void) { return g_last_error.c_str(); }

void glab_string_free(char* s) { std::free(s); }

// --- dataset ----------------------------------------------------------

glab_status glab_dataset_generate(const char* spec_json, glab_dataset** out) {
  return guarded([&] {
    require(out != nullptr, "null output handle");
    glab::Dataset ds = glab::generate_dataset(parse_spec(spec_json));
    *out = new glab_dataset{std::move(ds)};
  });
}

glab_status glab_dataset_save(const glab_dataset* ds, const char* dir) {
  return guarded([&] {
    require(ds != nullptr, "null dataset handle");
    require(dir != nullptr, "null directory path");
    glab::save_dataset(ds->ds, dir);
  });
}

glab_status glab_dataset_load(const char* dir, glab_dataset** out) {
  return guarded([&] {
    require(dir != nullptr, "null directory path");
    require(out != nullptr, "null output handle");
    glab::Dataset ds = glab::load_dataset(dir);
    *out = new glab_dataset{std::move(ds)};
  });
}

glab_status glab_dataset_info(const glab_dataset* ds, char** json_out) {
  return guarded([&] {
    require(ds != nullptr, "null dataset handle");
    require(json_out != nullptr, "null output string");
    json j;
    j["train"] = ds->ds.train.size();
    j["val"] = ds->ds.val.size();
    j["frames"] = ds->ds.frames;
    j["audio_dim"] = ds->ds.audio_dim;
    j["fps"] = ds->ds.fps;
    j["joints"] = ds->ds.skeleton.joints();
    j["min_interstyle_margin"] = ds->ds.min_interstyle_margin;
    *json_out = dup_string(j.dump(2));
  });
}

glab_status glab_dataset_export_sample(const glab_dataset* ds, const char* split, int64_t index,
                                       const char* audio_csv_path, const char* motion_path) {
  return guarded([&] {
    require(ds != nullptr, "null dataset handle");
    require(split != nullptr, "null split name");
    const std::string name = split;
    require(name == "train" || name == "val", "split must be train or val");
    const auto& samples = name == "train" ? ds->ds.train : ds->ds.val;
    if (index < 0 || index >= static_cast<int64_t>(samples.size()))
      glab::fail(glab::Status::invalid_argument,
                 "sample index " + std::to_string(index) + " out of range (split has " +
                     std::to_string(samples.size()) + ")");
    const glab::DatasetSample& s = samples[static_cast<size_t>(index)];
    if (audio_csv_path != nullptr) glab::write_features_csv(s.audio, audio_csv_path);
    if (motion_path != nullptr) glab::write_motion(s.motion, motion_path);
  });
}

void glab_dataset_free(glab_dataset* ds) { delete ds; }

// --- motion -----------------------------------------------------------

glab_status glab_motion_read(const char* path, glab_motion** out) {
  return guarded([&] {
    require(path != nullptr, "null motion path");
    require(out != nullptr, "null output handle");
    *out = new glab_motion{glab::read_motion(path)};
  });
}

glab_status glab_motion_write(const glab_motion* m, const char* path) {
  return guarded([&] {
    require(m != nullptr, "null motion handle");
    require(path != nullptr, "null motion path");
    glab::write_motion(m->m, path);
  });
}

int64_t glab_motion_frames(const glab_motion* m) { return m ? m->m.frames : 0; }
int64_t glab_motion_joints(const glab_motion* m) { return m ? m->m.joints : 0; }
int64_t glab_motion_dims(const glab_motion* m) { return m ? m->m.dims : 0; }

glab_status glab_motion_values(const glab_motion* m, const double** data, int64_t* count) {
  return guarded([&] {
    require(m != nullptr, "null motion handle");
    require(data != nullptr && count != nullptr, "null output pointer");
    *data = m->m.data.data();
    *count = static_cast<int64_t>(m->m.data.size());
  });
}

glab_status glab_motion_stats(const glab_motion* m, char** json_out) {
  return guarded([&] {
    require(m != nullptr, "null motion handle");
    require(json_out != nullptr, "null output string");
    json j;
    j["mean_speed"] = glab::mean_speed(m->m);
    if (m->m.has_skeleton && m->m.skeleton.wrists[0] >= 0 && m->m.skeleton.wrists[1] >= 0) {
      const auto e = glab::wrist_energies(m->m);
      j["wrist_energies"] = {e[0], e[1]};
      j["style"] = glab::classify_style(m->m);
    }
    *json_out = dup_string(j.dump(2));
  });
}

void glab_motion_free(glab_motion* m) { delete m; }

// --- extractor ----------------------------------------------------------

glab_status glab_extractor_train(const glab_dataset* ds, const char* opts_json,
                                 glab_extractor** out) {
  return guarded([&] {
    require(ds != nullptr, "null dataset handle");
    require(out != nullptr, "null output handle");
    glab::ExtractorTrainOpts opts;
    Fields f(parse_object(opts_json, "extractor options"), "extractor options");
    f.take("steps", opts.steps);
    f.take("lr", opts.lr);
    f.take("seed", opts.seed);
    f.finish();
    *out = new glab_extractor{glab::train_dataset_extractor(ds->ds, opts)};
  });
}

glab_status glab_extractor_save(const glab_extractor* ex, const char* stem) {
  return guarded([&] {
    require(ex != nullptr, "null extractor handle");
    require(stem != nullptr, "null checkpoint stem");
    ex->ex.save(stem);
  });
}

glab_status glab_extractor_load(const char* stem, glab_extractor** out) {
  return guarded([&] {
    require(stem != nullptr, "null checkpoint stem");
    require(out != nullptr, "null output handle");
    *out = new glab_extractor{glab::FeatureExtractor::load(stem)};
  });
}

void glab_extractor_free(glab_extractor* ex) { delete ex; }

// --- model --------------------------------------------------------------

glab_status glab_model_create(const char* config_json, glab_model** out) {
  return guarded([&] {
    require(out != nullptr, "null output handle");
    const glab::ModelConfig cfg = parse_model_config(parse_object(config_json, "model config"));
    *out = new glab_model{glab::Model::create(cfg)};
  });
}

glab_status glab_model_save(const glab_model* m, const char* stem) {
  return guarded([&] {
    require(m != nullptr, "null model handle");
    require(stem != nullptr, "null checkpoint stem");
    m->model.save(stem);
  });
}

glab_status glab_model_load(const char* stem, glab_model** out) {
  return guarded([&] {
    require(stem != nullptr, "null checkpoint stem");
    require(out != nullptr, "null output handle");
    *out = new glab_model{glab::Model::load(stem)};
  });
}

glab_status glab_model_info(const glab_model* m, char** json_out) {
  return guarded([&] {
    require(m != nullptr, "null model handle");
    require(json_out != nullptr, "null output string");
    const glab::ModelConfig& cfg = m->model.config();
    json j;
    j["audio_dim"] = cfg.audio_dim;
    j["output"] = cfg.output == glab::OutputMode::rotations6d ? "rotations6d" : "positions2d";
    j["shared_dim"] = cfg.shared_dim;
    j["specific_dim"] = cfg.specific_dim;
    j["mapping_hidden"] = cfg.mapping_hidden;
    j["audio_channels"] = cfg.audio_channels;
    j["motion_channels"] = cfg.motion_channels;
    j["decoder_channels"] = cfg.decoder_channels;
    j["kernel"] = cfg.kernel;
    j["dilations"] = cfg.dilations;
    j["use_dct"] = cfg.use_dct;
    j["dct_frames"] = cfg.dct_frames;
    j["baseline_no_split"] = cfg.baseline_no_split;
    j["seed"] = cfg.seed;
    j["fps"] = cfg.fps;
    j["joints"] = cfg.joints();
    j["trained"] = m->model.trained();
    *json_out = dup_string(j.dump(2));
  });
}

void glab_model_free(glab_model* m) { delete m; }

glab_status glab_train(glab_model* m, const glab_dataset* ds, const glab_extractor* ex,
                       const char* train_json, char** log_json_out) {
  return guarded([&] {
    require(m != nullptr, "null model handle");
    require(ds != nullptr, "null dataset handle");
    const glab::TrainConfig cfg = parse_train_config(parse_object(train_json, "train config"));
    const glab::TrainResult res =
        glab::train_model(m->model, ds->ds, ex ? &ex->ex : nullptr, cfg);
    if (log_json_out != nullptr) {
      json j;
      j["final_total"] = res.final_total;
      json rows = json::array();
      for (const glab::TrainLogRow& r : res.log) {
        json row;
        row["step"] = r.step;
        row["total"] = r.total;
        row["recon_motion"] = r.recon_motion;
        row["recon_audio"] = r.recon_audio;
        row["relaxed"] = r.relaxed;
        row["cycle"] = r.cycle;
        row["diversity"] = r.diversity;
        row["align"] = r.align;
        row["kl"] = r.kl;
        row["stft"] = r.stft;
        row["ssim"] = r.ssim;
        row["lpips"] = r.lpips;
        rows.push_back(row);
      }
      j["rows"] = rows;
      *log_json_out = dup_string(j.dump(2));
    }
  });
}

glab_status glab_generate(const glab_model* m, const char* audio_path, const char* opts_json,
                          glab_motion** out) {
  return guarded([&] {
    require(m != nullptr, "null model handle");
    require(audio_path != nullptr, "null audio path");
    require(out != nullptr, "null output handle");
    const glab::FeatureMatrix audio = read_features(audio_path);
    glab::Motion ref;
    const glab::GenerateOptions opts = parse_generate_opts(opts_json, ref, true);
    *out = new glab_motion{m->model.generate(audio, opts)};
  });
}

glab_status glab_timeline_insert(const glab_model* m, const char* audio_path,
                                 const char* reference_path, int64_t start, int64_t stop,
                                 const char* opts_json, glab_motion** out) {
  return guarded([&] {
    require(m != nullptr, "null model handle");
    require(audio_path != nullptr, "null audio path");
    require(reference_path != nullptr, "null reference motion path");
    require(out != nullptr, "null output handle");
    const glab::FeatureMatrix audio = read_features(audio_path);
    const glab::Motion ref = glab::read_motion(reference_path);
    glab::Motion unused;
    const glab::GenerateOptions opts = parse_generate_opts(opts_json, unused, false);
    *out = new glab_motion{m->model.timeline_insert(audio, ref, start, stop, opts)};
  });
}

// --- reports ------------------------------------------------------------

glab_status glab_evaluate_pair(const glab_motion* pred, const glab_motion* ref,
                               const glab_extractor* ex, const char* opts_json,
                               char** report_json) {
  return guarded([&] {
    require(pred != nullptr && ref != nullptr, "null motion handle");
    require(report_json != nullptr, "null output string");
    Fields f(parse_object(opts_json, "evaluate options"), "evaluate options");
    const glab::EvalConfig cfg = parse_eval_config(f);
    f.finish();
    const auto metrics = glab::evaluate_pair(pred->m, ref->m, ex ? &ex->ex : nullptr, cfg);
    *report_json = dup_string(metrics_json(metrics).dump(2));
  });
}

glab_status glab_evaluate(const glab_model* m, const glab_dataset* ds, const glab_extractor* ex,
                          const char* opts_json, char** report_json) {
  return guarded([&] {
    require(m != nullptr, "null model handle");
    require(ds != nullptr, "null dataset handle");
    require(report_json != nullptr, "null output string");
    Fields f(parse_object(opts_json, "evaluate options"), "evaluate options");
    int64_t draws = 4;
    uint64_t seed = 1;
    f.take("draws", draws);
    f.take("seed", seed);
    const glab::EvalConfig cfg = parse_eval_config(f);
    f.finish();
    const glab::FeatureExtractor* fx = ex ? &ex->ex : nullptr;

    // Reference-coded reconstruction against the ground truth.
    std::vector<glab::Motion> preds, gts;
    for (const glab::DatasetSample& s : ds->ds.val) {
      const int64_t frames = glab::usable_frames(m->model, s.audio.frames);
      if (frames < 2) continue;
      preds.push_back(glab::reconstruct_with_reference(m->model, s));
      glab::Motion gt = s.motion;
      gt.frames = frames;
      gt.data.resize(static_cast<size_t>(frames * gt.joints * gt.dims));
      gts.push_back(std::move(gt));
    }
    require(!preds.empty(), "no usable validation samples");
    json report;
    report["reconstruction"] = metrics_json(glab::evaluate_set(preds, gts, fx, cfg));

    // Style-set generation: many draws per validation audio.
    const auto groups = glab::generate_style_sets(m->model, ds->ds, draws, seed);
    std::vector<glab::Motion> flat;
    for (const auto& g : groups)
      for (const glab::Motion& mo : g) flat.push_back(mo);
    json gen;
    gen["diversity"] = glab::diversity(flat, cfg.diversity_window);
    gen["multimodality"] = glab::multimodality(groups);
    gen["styles_hit"] = styles_hit(groups);
    gen["mean_speed"] = [&] {
      double acc = 0.0;
      for (const glab::Motion& mo : flat) acc += glab::mean_speed(mo);
      return acc / static_cast<double>(flat.size());
    }();
    if (fx != nullptr) gen["fid"] = glab::fid(*fx, flat, gts);
    report["generation"] = gen;
    *report_json = dup_string(report.dump(2));
  });
}

glab_status glab_noise_experiment(const glab_dataset* ds, const char* opts_json,
                                  char** report_json) {
  return guarded([&] {
    require(ds != nullptr, "null dataset handle");
    require(report_json != nullptr, "null output string");
    Fields f(parse_object(opts_json, "noise options"), "noise options");
    std::vector<double> sigmas{0.0, 1.0, 2.0, 5.0, 10.0, 20.0};
    double pck_delta = 3.0;
    int64_t seeds = 5;
    uint64_t seed = 1;
    f.take("sigmas_deg", sigmas);
    f.take("pck_delta", pck_delta);
    f.take("seeds", seeds);
    f.take("seed", seed);
    f.finish();
    std::vector<glab::Motion> clean;
    for (const glab::DatasetSample& s : ds->ds.val) clean.push_back(s.motion);
    const glab::NoiseResult res = glab::noise_experiment(clean, sigmas, pck_delta, seeds, seed);
    json j;
    j["pck_delta"] = res.pck_delta;
    json rows = json::array();
    for (const glab::NoiseRow& r : res.rows) {
      json row = metrics_json(r.metrics);
      row["sigma_deg"] = r.sigma_deg;
      rows.push_back(row);
    }
    j["rows"] = rows;
    *report_json = dup_string(j.dump(2));
  });
}

glab_status glab_rho_sweep(const glab_dataset* ds, const glab_extractor* ex, const char* cfg_json,
                           char** report_json) {
  return guarded([&] {
    require(ds != nullptr, "null dataset handle");
    require(report_json != nullptr, "null output string");
    Fields f(parse_object(cfg_json, "rho sweep config"), "rho sweep config");
    json model_json = json::object(), train_json = json::object();
    f.sub("model", model_json);
    f.sub("train", train_json);
    std::vector<double> rhos{0.0, 1.0, 3.0, 6.0};
    f.take("rhos", rhos);
    f.finish();
    const glab::ModelConfig mc = parse_model_config(model_json);
    const glab::TrainConfig tc = parse_train_config(train_json);
    const glab::RhoSweepResult res =
        glab::rho_sweep(ds->ds, mc, tc, ex ? &ex->ex : nullptr, rhos);
    json rows = json::array();
    for (const glab::RhoSweepRow& r : res.rows) {
      json row;
      row["rho"] = r.rho;
      row["multimodality"] = r.multimodality;
      row["position_l1"] = r.position_l1;
      row["styles_hit"] = r.styles_hit;
      rows.push_back(row);
    }
    json j;
    j["rows"] = rows;
    *report_json = dup_string(j.dump(2));
  });
}

glab_status glab_dct_ablation(const glab_dataset* ds, const glab_extractor* ex,
                              const char* cfg_json, char** report_json) {
  return guarded([&] {
    require(ds != nullptr, "null dataset handle");
    require(report_json != nullptr, "null output string");
    Fields f(parse_object(cfg_json, "dct ablation config"), "dct ablation config");
    json model_json = json::object(), train_json = json::object();
    f.sub("model", model_json);
    f.sub("train", train_json);
    std::vector<int64_t> keeps{0, 32, 16, 8, 4, 2};
    f.take("keeps", keeps);
    f.finish();
    const glab::ModelConfig mc = parse_model_config(model_json);
    const glab::TrainConfig tc = parse_train_config(train_json);
    const glab::DctAblationResult res =
        glab::dct_ablation(ds->ds, mc, tc, ex ? &ex->ex : nullptr, keeps);
    json j;
    j["base_position_l1"] = res.base_position_l1;
    j["dct_position_l1"] = res.dct_position_l1;
    auto pairs = [](const std::vector<std::pair<int64_t, double>>& rows) {
      json out = json::array();
      for (const auto& [keep, speed] : rows) out.push_back({keep, speed});
      return out;
    };
    j["base_speed_by_keep"] = pairs(res.base_speed_by_keep);
    j["dct_speed_by_keep"] = pairs(res.dct_speed_by_keep);
    *report_json = dup_string(j.dump(2));
  });
}

glab_status glab_grad_check(uint64_t seed, char** report_json) {
  return guarded([&] {
    require(report_json != nullptr, "null output string");
    const glab::GradSuiteResult res = glab::run_grad_suite(seed);
    json j;
    j["max_op_err"] = res.max_op_err;
    j["max_loss_err"] = res.max_loss_err;
    json cases = json::array();
    for (const auto& [name, err] : res.per_case) {
      json row;
      row["name"] = name;
      row["err"] = err;
      cases.push_back(row);
    }
    j["cases"] = cases;
    *report_json = dup_string(j.dump(2));
  });
}

glab_status glab_wav_features(const char* wav_path, const char* opts_json,
                              const char* out_csv_path) {
  return guarded([&] {
    require(wav_path != nullptr, "null wav path");
    require(out_csv_path != nullptr, "null output path");
    glab::LogMelSpec spec;
    Fields f(parse_object(opts_json, "wav options"), "wav options");
    f.take("n_mels", spec.n_mels);
    f.take("hop", spec.hop);
    f.take("n_fft", spec.n_fft);
    f.take("fmin", spec.fmin);
    f.take("fmax", spec.fmax);
    f.finish();
    int64_t rate = 0;
    const std::vector<double> samples = glab::read_wav(wav_path, &rate);
    spec.sample_rate = rate;
    int64_t frames = 0;
    const std::vector<double> mel = glab::log_mel(samples, spec, &frames);
    glab::FeatureMatrix fm;
    fm.frames = frames;
    fm.dim = spec.n_mels;
    fm.data = mel;
    glab::write_features_csv(fm, out_csv_path);
  });
}

}  // extern "C"
