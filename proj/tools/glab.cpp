// Command-line front end for the gesture-synthesis laboratory. Talks to the
// core exclusively through the shared C API.

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include <gesturelab/gesturelab.h>

using nlohmann::json;

namespace {

[[noreturn]] void die(glab_status st) {
  std::fprintf(stderr, "error (%s): %s\n", glab_status_name(st), glab_last_error());
  std::exit(static_cast<int>(st));
}

void check(glab_status st) {
  if (st != GLAB_OK) die(st);
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    std::fprintf(stderr, "error (io): cannot read %s\n", path.c_str());
    std::exit(static_cast<int>(GLAB_IO));
  }
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

void emit(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::printf("%s\n", text.c_str());
    return;
  }
  std::ofstream out(out_path);
  if (!out) {
    std::fprintf(stderr, "error (io): cannot write %s\n", out_path.c_str());
    std::exit(static_cast<int>(GLAB_IO));
  }
  out << text << '\n';
}

struct OwnedString {
  char* text = nullptr;
  ~OwnedString() { glab_string_free(text); }
};

// Flag bundle -> JSON config text. Starts from an optional JSON file so every
// setting stays reachable, then lets the common flags override it.
struct ModelFlags {
  std::string json_path;
  int64_t audio_dim = -1, shared_dim = -1, specific_dim = -1, dct_frames = -1, seed = -1;
  std::string output;
  bool use_dct = false, baseline = false;

  void attach(CLI::App* cmd) {
    cmd->add_option("--model-json", json_path, "model config JSON file (full control)");
    cmd->add_option("--audio-dim", audio_dim, "audio feature channels");
    cmd->add_option("--output", output, "rotations6d or positions2d");
    cmd->add_option("--shared-dim", shared_dim, "shared code channels");
    cmd->add_option("--specific-dim", specific_dim, "motion-specific code channels");
    cmd->add_flag("--use-dct", use_dct, "DCT-variant latent heads");
    cmd->add_option("--dct-frames", dct_frames, "fixed clip length of the DCT variant");
    cmd->add_flag("--baseline", baseline, "single-code baseline (no split)");
    cmd->add_option("--model-seed", seed, "parameter init seed");
  }

  std::string to_json() const {
    json j = json_path.empty() ? json::object() : json::parse(slurp(json_path));
    if (audio_dim >= 0) j["audio_dim"] = audio_dim;
    if (!output.empty()) j["output"] = output;
    if (shared_dim >= 0) j["shared_dim"] = shared_dim;
    if (specific_dim >= 0) j["specific_dim"] = specific_dim;
    if (use_dct) j["use_dct"] = true;
    if (dct_frames >= 0) j["dct_frames"] = dct_frames;
    if (baseline) j["baseline_no_split"] = true;
    if (seed >= 0) j["seed"] = static_cast<uint64_t>(seed);
    return j.dump();
  }
};

struct TrainFlags {
  std::string json_path, log_csv;
  int64_t steps = -1, batch = -1, crop = -1, log_every = -1, seed = -1;
  double lr = -1.0, rho = -1.0;

  void attach(CLI::App* cmd) {
    cmd->add_option("--train-json", json_path, "train config JSON file (full control)");
    cmd->add_option("--steps", steps, "optimization steps");
    cmd->add_option("--batch", batch, "clips per step");
    cmd->add_option("--crop", crop, "training window, frames");
    cmd->add_option("--lr", lr, "Adam learning rate");
    cmd->add_option("--train-seed", seed, "sampling seed");
    cmd->add_option("--rho", rho, "relaxed-hinge slack (motion units)");
    cmd->add_option("--log-every", log_every, "steps between log rows");
    cmd->add_option("--log-csv", log_csv, "write the loss curve as CSV");
  }

  std::string to_json(bool lpips_on) const {
    json j = json_path.empty() ? json::object() : json::parse(slurp(json_path));
    if (steps >= 0) j["steps"] = steps;
    if (batch >= 0) j["batch"] = batch;
    if (crop >= 0) j["crop"] = crop;
    if (lr >= 0) j["lr"] = lr;
    if (seed >= 0) j["seed"] = static_cast<uint64_t>(seed);
    if (log_every >= 0) j["log_every"] = log_every;
    if (!log_csv.empty()) j["log_csv"] = log_csv;
    if (rho >= 0) j["weights"]["rho"] = rho;
    if (!lpips_on && !j.contains("weights")) j["weights"] = json::object();
    if (!lpips_on && !j["weights"].contains("lpips")) j["weights"]["lpips"] = 0.0;
    return j.dump();
  }
};

glab_dataset* load_data(const std::string& dir) {
  glab_dataset* ds = nullptr;
  check(glab_dataset_load(dir.c_str(), &ds));
  return ds;
}

glab_model* load_model(const std::string& stem) {
  glab_model* m = nullptr;
  check(glab_model_load(stem.c_str(), &m));
  return m;
}

glab_extractor* maybe_load_extractor(const std::string& stem) {
  if (stem.empty()) return nullptr;
  glab_extractor* ex = nullptr;
  check(glab_extractor_load(stem.c_str(), &ex));
  return ex;
}

std::string generate_opts_json(uint64_t seed, int64_t dct_keep, const std::string& specific,
                               const std::string& reference) {
  json j;
  j["seed"] = seed;
  if (dct_keep > 0) j["dct_keep"] = dct_keep;
  if (!specific.empty()) j["specific"] = specific;
  if (!reference.empty()) j["reference"] = reference;
  return j.dump();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gesture-synthesis laboratory"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(glab_version()));

  // ---- dataset ----------------------------------------------------------
  auto* dataset = app.add_subcommand("dataset", "synthetic corpus tools");
  dataset->require_subcommand(1);

  auto* ds_gen = dataset->add_subcommand("gen", "generate and save a corpus");
  std::string ds_out, ds_spec_json;
  int64_t ds_rtrain = -1, ds_rval = -1, ds_styles = -1, ds_frames = -1, ds_audio_dim = -1;
  int64_t ds_seed = -1;
  ds_gen->add_option("--out", ds_out, "output directory")->required();
  ds_gen->add_option("--spec-json", ds_spec_json, "spec JSON file (full control)");
  ds_gen->add_option("--rhythms-train", ds_rtrain, "train rhythm groups");
  ds_gen->add_option("--rhythms-val", ds_rval, "validation rhythm groups");
  ds_gen->add_option("--styles", ds_styles, "styles per rhythm (1..3)");
  ds_gen->add_option("--frames", ds_frames, "frames per clip");
  ds_gen->add_option("--audio-dim", ds_audio_dim, "audio feature channels");
  ds_gen->add_option("--seed", ds_seed, "corpus seed");
  ds_gen->callback([&] {
    json j = ds_spec_json.empty() ? json::object() : json::parse(slurp(ds_spec_json));
    if (ds_rtrain >= 0) j["rhythms_train"] = ds_rtrain;
    if (ds_rval >= 0) j["rhythms_val"] = ds_rval;
    if (ds_styles >= 0) j["styles"] = ds_styles;
    if (ds_frames >= 0) j["frames"] = ds_frames;
    if (ds_audio_dim >= 0) j["audio_dim"] = ds_audio_dim;
    if (ds_seed >= 0) j["seed"] = static_cast<uint64_t>(ds_seed);
    glab_dataset* ds = nullptr;
    check(glab_dataset_generate(j.dump().c_str(), &ds));
    check(glab_dataset_save(ds, ds_out.c_str()));
    OwnedString info;
    check(glab_dataset_info(ds, &info.text));
    std::printf("%s\n", info.text);
    glab_dataset_free(ds);
  });

  auto* ds_info = dataset->add_subcommand("info", "describe a saved corpus");
  std::string ds_info_dir;
  ds_info->add_option("--data", ds_info_dir, "corpus directory")->required();
  ds_info->callback([&] {
    glab_dataset* ds = load_data(ds_info_dir);
    OwnedString info;
    check(glab_dataset_info(ds, &info.text));
    std::printf("%s\n", info.text);
    glab_dataset_free(ds);
  });

  auto* ds_export = dataset->add_subcommand("export", "write one sample's audio/motion files");
  std::string ds_exp_dir, ds_exp_split = "val", ds_exp_audio, ds_exp_motion;
  int64_t ds_exp_index = 0;
  ds_export->add_option("--data", ds_exp_dir, "corpus directory")->required();
  ds_export->add_option("--split", ds_exp_split, "train or val");
  ds_export->add_option("--index", ds_exp_index, "sample index");
  ds_export->add_option("--audio", ds_exp_audio, "features CSV output path");
  ds_export->add_option("--motion", ds_exp_motion, "motion JSON output path");
  ds_export->callback([&] {
    glab_dataset* ds = load_data(ds_exp_dir);
    check(glab_dataset_export_sample(ds, ds_exp_split.c_str(), ds_exp_index,
                                     ds_exp_audio.empty() ? nullptr : ds_exp_audio.c_str(),
                                     ds_exp_motion.empty() ? nullptr : ds_exp_motion.c_str()));
    glab_dataset_free(ds);
  });

  // ---- train --------------------------------------------------------------
  auto* train = app.add_subcommand("train", "train a model on a corpus");
  std::string tr_data, tr_out, tr_extractor, tr_log_json;
  bool tr_train_extractor = false;
  ModelFlags tr_model;
  TrainFlags tr_cfg;
  train->add_option("--data", tr_data, "corpus directory")->required();
  train->add_option("--out", tr_out, "checkpoint stem to write")->required();
  tr_model.attach(train);
  tr_cfg.attach(train);
  train->add_option("--extractor", tr_extractor, "extractor checkpoint stem (perceptual term)");
  train->add_flag("--train-extractor", tr_train_extractor,
                  "train a fresh extractor first and use it");
  train->add_option("--log-json", tr_log_json, "write the training log as JSON");
  train->callback([&] {
    glab_dataset* ds = load_data(tr_data);
    glab_extractor* ex = maybe_load_extractor(tr_extractor);
    if (tr_train_extractor) {
      if (ex != nullptr) {
        std::fprintf(stderr, "error (invalid_argument): pass --extractor or --train-extractor\n");
        std::exit(static_cast<int>(GLAB_INVALID_ARGUMENT));
      }
      check(glab_extractor_train(ds, "{}", &ex));
      check(glab_extractor_save(ex, (tr_out + ".extractor").c_str()));
    }
    glab_model* model = nullptr;
    check(glab_model_create(tr_model.to_json().c_str(), &model));
    OwnedString log;
    check(glab_train(model, ds, ex, tr_cfg.to_json(ex != nullptr).c_str(), &log.text));
    check(glab_model_save(model, tr_out.c_str()));
    if (!tr_log_json.empty()) emit(log.text, tr_log_json);
    OwnedString info;
    check(glab_model_info(model, &info.text));
    std::printf("%s\n", info.text);
    glab_model_free(model);
    glab_extractor_free(ex);
    glab_dataset_free(ds);
  });

  // ---- extractor ------------------------------------------------------------
  auto* extractor = app.add_subcommand("extractor", "perceptual feature extractor tools");
  extractor->require_subcommand(1);
  auto* ex_train = extractor->add_subcommand("train", "train the extractor on a corpus");
  std::string ex_data, ex_out;
  int64_t ex_steps = -1, ex_seed = -1;
  double ex_lr = -1.0;
  ex_train->add_option("--data", ex_data, "corpus directory")->required();
  ex_train->add_option("--out", ex_out, "checkpoint stem to write")->required();
  ex_train->add_option("--steps", ex_steps, "optimization steps");
  ex_train->add_option("--lr", ex_lr, "Adam learning rate");
  ex_train->add_option("--seed", ex_seed, "init/sampling seed");
  ex_train->callback([&] {
    glab_dataset* ds = load_data(ex_data);
    json j;
    if (ex_steps >= 0) j["steps"] = ex_steps;
    if (ex_lr >= 0) j["lr"] = ex_lr;
    if (ex_seed >= 0) j["seed"] = static_cast<uint64_t>(ex_seed);
    glab_extractor* ex = nullptr;
    check(glab_extractor_train(ds, j.dump().c_str(), &ex));
    check(glab_extractor_save(ex, ex_out.c_str()));
    glab_extractor_free(ex);
    glab_dataset_free(ds);
  });

  // ---- generate ---------------------------------------------------------------
  auto* generate = app.add_subcommand("generate", "audio features -> motion clip");
  std::string g_model, g_audio, g_out, g_specific, g_reference;
  uint64_t g_seed = 0;
  int64_t g_keep = 0;
  generate->add_option("--model", g_model, "model checkpoint stem")->required();
  generate->add_option("--audio", g_audio, "features CSV/JSON path")->required();
  generate->add_option("--out", g_out, "motion output path")->required();
  generate->add_option("--seed", g_seed, "style seed");
  generate->add_option("--dct-keep", g_keep, "shared-code low-pass: keep N DCT coefficients");
  generate->add_option("--specific", g_specific, "style source: mapped, stats, reference or zeros");
  generate->add_option("--reference", g_reference, "reference motion path (style donor)");
  generate->callback([&] {
    glab_model* model = load_model(g_model);
    glab_motion* out = nullptr;
    check(glab_generate(model, g_audio.c_str(),
                        generate_opts_json(g_seed, g_keep, g_specific, g_reference).c_str(),
                        &out));
    check(glab_motion_write(out, g_out.c_str()));
    glab_motion_free(out);
    glab_model_free(model);
  });

  // ---- timeline insert -------------------------------------------------------
  auto* insert = app.add_subcommand("timeline-insert",
                                    "splice a reference style into part of the timeline");
  std::string ti_model, ti_audio, ti_ref, ti_out;
  int64_t ti_start = 0, ti_stop = 0;
  uint64_t ti_seed = 0;
  insert->add_option("--model", ti_model, "model checkpoint stem")->required();
  insert->add_option("--audio", ti_audio, "features CSV/JSON path")->required();
  insert->add_option("--reference", ti_ref, "reference motion path")->required();
  insert->add_option("--start", ti_start, "first frame of the insert")->required();
  insert->add_option("--stop", ti_stop, "one past the last frame")->required();
  insert->add_option("--out", ti_out, "motion output path")->required();
  insert->add_option("--seed", ti_seed, "style seed outside the insert");
  insert->callback([&] {
    glab_model* model = load_model(ti_model);
    glab_motion* out = nullptr;
    check(glab_timeline_insert(model, ti_audio.c_str(), ti_ref.c_str(), ti_start, ti_stop,
                               generate_opts_json(ti_seed, 0, "", "").c_str(), &out));
    check(glab_motion_write(out, ti_out.c_str()));
    glab_motion_free(out);
    glab_model_free(model);
  });

  // ---- evaluate -----------------------------------------------------------------
  auto* evaluate = app.add_subcommand("evaluate", "validation report for a trained model");
  std::string ev_model, ev_data, ev_extractor, ev_out;
  int64_t ev_draws = -1;
  uint64_t ev_seed = 1;
  double ev_pck = -1.0;
  evaluate->add_option("--model", ev_model, "model checkpoint stem")->required();
  evaluate->add_option("--data", ev_data, "corpus directory")->required();
  evaluate->add_option("--extractor", ev_extractor, "extractor stem (adds lpips/fid)");
  evaluate->add_option("--draws", ev_draws, "style draws per validation audio");
  evaluate->add_option("--seed", ev_seed, "draw seed");
  evaluate->add_option("--pck-delta", ev_pck, "PCK threshold, motion units");
  evaluate->add_option("--out", ev_out, "write the report here instead of stdout");
  evaluate->callback([&] {
    glab_model* model = load_model(ev_model);
    glab_dataset* ds = load_data(ev_data);
    glab_extractor* ex = maybe_load_extractor(ev_extractor);
    json opts;
    if (ev_draws >= 0) opts["draws"] = ev_draws;
    opts["seed"] = ev_seed;
    if (ev_pck >= 0) opts["pck_delta"] = ev_pck;
    OwnedString rep;
    check(glab_evaluate(model, ds, ex, opts.dump().c_str(), &rep.text));
    emit(rep.text, ev_out);
    glab_extractor_free(ex);
    glab_dataset_free(ds);
    glab_model_free(model);
  });

  auto* compare = app.add_subcommand("compare", "pairwise metrics between two motion files");
  std::string cp_pred, cp_ref, cp_extractor, cp_out;
  double cp_pck = -1.0;
  compare->add_option("pred", cp_pred, "predicted motion path")->required();
  compare->add_option("ref", cp_ref, "reference motion path")->required();
  compare->add_option("--extractor", cp_extractor, "extractor stem (adds lpips)");
  compare->add_option("--pck-delta", cp_pck, "PCK threshold, motion units");
  compare->add_option("--out", cp_out, "write the report here instead of stdout");
  compare->callback([&] {
    glab_motion* pred = nullptr;
    glab_motion* ref = nullptr;
    check(glab_motion_read(cp_pred.c_str(), &pred));
    check(glab_motion_read(cp_ref.c_str(), &ref));
    glab_extractor* ex = maybe_load_extractor(cp_extractor);
    json opts = json::object();
    if (cp_pck >= 0) opts["pck_delta"] = cp_pck;
    OwnedString rep;
    check(glab_evaluate_pair(pred, ref, ex, opts.dump().c_str(), &rep.text));
    emit(rep.text, cp_out);
    glab_extractor_free(ex);
    glab_motion_free(ref);
    glab_motion_free(pred);
  });

  auto* stats = app.add_subcommand("motion-stats", "speed/style summary of a motion file");
  std::string ms_path;
  stats->add_option("motion", ms_path, "motion path")->required();
  stats->callback([&] {
    glab_motion* m = nullptr;
    check(glab_motion_read(ms_path.c_str(), &m));
    OwnedString rep;
    check(glab_motion_stats(m, &rep.text));
    std::printf("%s\n", rep.text);
    glab_motion_free(m);
  });

  // ---- experiments ---------------------------------------------------------------
  auto* noise = app.add_subcommand("noise-exp", "metric robustness under rotation noise");
  std::string nz_data, nz_out;
  std::vector<double> nz_sigmas;
  double nz_pck = -1.0;
  int64_t nz_seeds = -1;
  uint64_t nz_seed = 1;
  noise->add_option("--data", nz_data, "corpus directory")->required();
  noise->add_option("--sigmas", nz_sigmas, "noise std devs, degrees");
  noise->add_option("--pck-delta", nz_pck, "PCK threshold, motion units");
  noise->add_option("--seeds", nz_seeds, "independent noise draws per sigma");
  noise->add_option("--seed", nz_seed, "noise seed");
  noise->add_option("--out", nz_out, "write the report here instead of stdout");
  noise->callback([&] {
    glab_dataset* ds = load_data(nz_data);
    json opts;
    if (!nz_sigmas.empty()) opts["sigmas_deg"] = nz_sigmas;
    if (nz_pck >= 0) opts["pck_delta"] = nz_pck;
    if (nz_seeds >= 1) opts["seeds"] = nz_seeds;
    opts["seed"] = nz_seed;
    OwnedString rep;
    check(glab_noise_experiment(ds, opts.dump().c_str(), &rep.text));
    emit(rep.text, nz_out);
    glab_dataset_free(ds);
  });

  auto* sweep = app.add_subcommand("rho-sweep", "hinge-slack sweep (one training per rho)");
  std::string rs_data, rs_extractor, rs_out;
  std::vector<double> rs_rhos;
  ModelFlags rs_model;
  TrainFlags rs_train;
  sweep->add_option("--data", rs_data, "corpus directory")->required();
  sweep->add_option("--rhos", rs_rhos, "slack values to sweep");
  rs_model.attach(sweep);
  rs_train.attach(sweep);
  sweep->add_option("--extractor", rs_extractor, "extractor stem (perceptual term)");
  sweep->add_option("--out", rs_out, "write the report here instead of stdout");
  sweep->callback([&] {
    glab_dataset* ds = load_data(rs_data);
    glab_extractor* ex = maybe_load_extractor(rs_extractor);
    json cfg;
    cfg["model"] = json::parse(rs_model.to_json());
    cfg["train"] = json::parse(rs_train.to_json(ex != nullptr));
    if (!rs_rhos.empty()) cfg["rhos"] = rs_rhos;
    OwnedString rep;
    check(glab_rho_sweep(ds, ex, cfg.dump().c_str(), &rep.text));
    emit(rep.text, rs_out);
    glab_extractor_free(ex);
    glab_dataset_free(ds);
  });

  auto* ablate = app.add_subcommand("dct-ablate", "plain vs DCT variant + low-pass speed sweep");
  std::string da_data, da_extractor, da_out;
  std::vector<int64_t> da_keeps;
  ModelFlags da_model;
  TrainFlags da_train;
  ablate->add_option("--data", da_data, "corpus directory")->required();
  ablate->add_option("--keeps", da_keeps, "DCT keep counts for the low-pass sweep");
  da_model.attach(ablate);
  da_train.attach(ablate);
  ablate->add_option("--extractor", da_extractor, "extractor stem (perceptual term)");
  ablate->add_option("--out", da_out, "write the report here instead of stdout");
  ablate->callback([&] {
    glab_dataset* ds = load_data(da_data);
    glab_extractor* ex = maybe_load_extractor(da_extractor);
    json cfg;
    cfg["model"] = json::parse(da_model.to_json());
    cfg["train"] = json::parse(da_train.to_json(ex != nullptr));
    if (!da_keeps.empty()) cfg["keeps"] = da_keeps;
    OwnedString rep;
    check(glab_dct_ablation(ds, ex, cfg.dump().c_str(), &rep.text));
    emit(rep.text, da_out);
    glab_extractor_free(ex);
    glab_dataset_free(ds);
  });

  auto* grads = app.add_subcommand("grad-check", "finite-difference check of ops and losses");
  uint64_t gc_seed = 1;
  double gc_tol = 1e-3;
  std::string gc_out;
  grads->add_option("--seed", gc_seed, "probe seed");
  grads->add_option("--tol", gc_tol, "fail when any max relative error exceeds this");
  grads->add_option("--out", gc_out, "write the report here instead of stdout");
  grads->callback([&] {
    OwnedString rep;
    check(glab_grad_check(gc_seed, &rep.text));
    emit(rep.text, gc_out);
    const json j = json::parse(rep.text);
    const double worst =
        std::max(j.at("max_op_err").get<double>(), j.at("max_loss_err").get<double>());
    if (worst > gc_tol) {
      std::fprintf(stderr, "grad check FAILED: max relative error %.3e > %.3e\n", worst, gc_tol);
      std::exit(1);
    }
    std::fprintf(stderr, "grad check ok: max relative error %.3e\n", worst);
  });

  auto* model_info = app.add_subcommand("model-info", "describe a model checkpoint");
  std::string mi_stem;
  model_info->add_option("--model", mi_stem, "model checkpoint stem")->required();
  model_info->callback([&] {
    glab_model* model = load_model(mi_stem);
    OwnedString info;
    check(glab_model_info(model, &info.text));
    std::printf("%s\n", info.text);
    glab_model_free(model);
  });

  auto* wav = app.add_subcommand("wav-features", "log-mel features CSV from a mono WAV");
  std::string wv_in, wv_out;
  int64_t wv_mels = -1, wv_hop = -1, wv_fft = -1;
  wav->add_option("--wav", wv_in, "input WAV path")->required();
  wav->add_option("--out", wv_out, "features CSV output path")->required();
  wav->add_option("--n-mels", wv_mels, "mel bands (match the model's audio dim)");
  wav->add_option("--hop", wv_hop, "hop size, samples");
  wav->add_option("--n-fft", wv_fft, "FFT size");
  wav->callback([&] {
    json opts;
    if (wv_mels >= 0) opts["n_mels"] = wv_mels;
    if (wv_hop >= 0) opts["hop"] = wv_hop;
    if (wv_fft >= 0) opts["n_fft"] = wv_fft;
    check(glab_wav_features(wv_in.c_str(), opts.dump().c_str(), wv_out.c_str()));
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error (invalid_argument): %s\n", e.what());
    return static_cast<int>(GLAB_INVALID_ARGUMENT);
  }
  return 0;
}
