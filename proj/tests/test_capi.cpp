#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include <gesturelab/gesturelab.h>

extern "C" int capi_c_smoke(void);

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr const char* kTinyModel = R"({
  "audio_channels": [12, 12],
  "motion_channels": [12, 12],
  "decoder_channels": [12, 12],
  "shared_dim": 6,
  "specific_dim": 5,
  "mapping_hidden": 10,
  "seed": 7
})";

constexpr const char* kTinyTrain = R"({
  "steps": 8, "batch": 2, "crop": 32, "log_every": 2,
  "weights": {"lpips": 0}
})";

constexpr const char* kTinySpec =
    R"({"rhythms_train": 2, "rhythms_val": 1, "styles": 2, "frames": 60, "seed": 11})";

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::path("capi_tmp") / name) {
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all("capi_tmp", ec);
  }
  std::string operator/(const std::string& leaf) const { return (path / leaf).string(); }
};

struct Report {
  char* text = nullptr;
  ~Report() { glab_string_free(text); }
  json parse() const {
    REQUIRE(text != nullptr);
    return json::parse(text);
  }
};

glab_dataset* make_dataset() {
  glab_dataset* ds = nullptr;
  REQUIRE(glab_dataset_generate(kTinySpec, &ds) == GLAB_OK);
  return ds;
}

glab_model* make_model(const char* cfg = kTinyModel) {
  glab_model* m = nullptr;
  REQUIRE(glab_model_create(cfg, &m) == GLAB_OK);
  return m;
}

// Minimal mono 16-bit PCM writer so the WAV entry point can be fed without
// touching the core library from this side of the API.
void write_sine_wav(const std::string& path, int64_t samples, int rate, double hz) {
  std::ofstream out(path, std::ios::binary);
  auto w32 = [&](uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); };
  auto w16 = [&](uint16_t v) { out.write(reinterpret_cast<const char*>(&v), 2); };
  const uint32_t data_bytes = static_cast<uint32_t>(samples * 2);
  out.write("RIFF", 4);
  w32(36 + data_bytes);
  out.write("WAVE", 4);
  out.write("fmt ", 4);
  w32(16);
  w16(1);  // PCM
  w16(1);  // mono
  w32(static_cast<uint32_t>(rate));
  w32(static_cast<uint32_t>(rate * 2));
  w16(2);
  w16(16);
  out.write("data", 4);
  w32(data_bytes);
  for (int64_t i = 0; i < samples; ++i) {
    const double s = 0.4 * std::sin(2.0 * 3.14159265358979323846 * hz *
                                    static_cast<double>(i) / static_cast<double>(rate));
    w16(static_cast<uint16_t>(static_cast<int16_t>(std::lround(s * 32767.0))));
  }
}

}  // namespace

TEST_CASE("the header works from plain C") { CHECK(capi_c_smoke() == 0); }

TEST_CASE("dataset round trips through the C boundary") {
  TempDir dir("dataset");
  glab_dataset* ds = make_dataset();

  Report info;
  REQUIRE(glab_dataset_info(ds, &info.text) == GLAB_OK);
  const json j = info.parse();
  CHECK(j.at("train") == 4);
  CHECK(j.at("val") == 2);
  CHECK(j.at("frames") == 60);
  CHECK(j.at("joints") == 8);
  CHECK(j.at("min_interstyle_margin").get<double>() > 0.0);

  REQUIRE(glab_dataset_save(ds, (dir / "corpus").c_str()) == GLAB_OK);
  glab_dataset* loaded = nullptr;
  REQUIRE(glab_dataset_load((dir / "corpus").c_str(), &loaded) == GLAB_OK);
  Report info2;
  REQUIRE(glab_dataset_info(loaded, &info2.text) == GLAB_OK);
  CHECK(info2.parse() == j);

  // Export one sample and inspect it through the motion handle.
  REQUIRE(glab_dataset_export_sample(ds, "val", 0, (dir / "audio.csv").c_str(),
                                     (dir / "gt.json").c_str()) == GLAB_OK);
  glab_motion* gt = nullptr;
  REQUIRE(glab_motion_read((dir / "gt.json").c_str(), &gt) == GLAB_OK);
  CHECK(glab_motion_frames(gt) == 60);
  CHECK(glab_motion_joints(gt) == 8);
  CHECK(glab_motion_dims(gt) == 6);
  const double* data = nullptr;
  int64_t count = 0;
  REQUIRE(glab_motion_values(gt, &data, &count) == GLAB_OK);
  CHECK(count == 60 * 8 * 6);
  Report stats;
  REQUIRE(glab_motion_stats(gt, &stats.text) == GLAB_OK);
  const json s = stats.parse();
  CHECK(s.at("mean_speed").get<double>() > 0.0);
  CHECK(s.contains("style"));
  CHECK(s.at("wrist_energies").size() == 2);

  CHECK(glab_dataset_export_sample(ds, "val", 99, nullptr, nullptr) == GLAB_INVALID_ARGUMENT);
  CHECK(glab_dataset_export_sample(ds, "test", 0, nullptr, nullptr) == GLAB_INVALID_ARGUMENT);

  glab_motion_free(gt);
  glab_dataset_free(loaded);
  glab_dataset_free(ds);
}

TEST_CASE("model lifecycle: create, train, save, load, generate") {
  TempDir dir("model");
  glab_dataset* ds = make_dataset();
  glab_model* model = make_model();

  Report before;
  REQUIRE(glab_model_info(model, &before.text) == GLAB_OK);
  CHECK(before.parse().at("trained") == false);

  Report log;
  REQUIRE(glab_train(model, ds, nullptr, kTinyTrain, &log.text) == GLAB_OK);
  const json lg = log.parse();
  CHECK(lg.at("rows").size() >= 2);
  CHECK(std::isfinite(lg.at("final_total").get<double>()));

  REQUIRE(glab_model_save(model, (dir / "ckpt").c_str()) == GLAB_OK);
  glab_model* loaded = nullptr;
  REQUIRE(glab_model_load((dir / "ckpt").c_str(), &loaded) == GLAB_OK);
  Report after;
  REQUIRE(glab_model_info(loaded, &after.text) == GLAB_OK);
  CHECK(after.parse().at("trained") == true);
  CHECK(after.parse().at("shared_dim") == 6);

  REQUIRE(glab_dataset_export_sample(ds, "val", 0, (dir / "audio.csv").c_str(),
                                     (dir / "gt.json").c_str()) == GLAB_OK);

  glab_motion* gen = nullptr;
  REQUIRE(glab_generate(loaded, (dir / "audio.csv").c_str(), R"({"seed": 5})", &gen) == GLAB_OK);
  CHECK(glab_motion_frames(gen) == 60);

  // Same seed, same motion; different seed, different motion.
  glab_motion* gen2 = nullptr;
  REQUIRE(glab_generate(loaded, (dir / "audio.csv").c_str(), R"({"seed": 5})", &gen2) == GLAB_OK);
  const double *a = nullptr, *b = nullptr;
  int64_t na = 0, nb = 0;
  REQUIRE(glab_motion_values(gen, &a, &na) == GLAB_OK);
  REQUIRE(glab_motion_values(gen2, &b, &nb) == GLAB_OK);
  REQUIRE(na == nb);
  bool same = true;
  for (int64_t i = 0; i < na; ++i)
    if (a[i] != b[i]) same = false;
  CHECK(same);
  glab_motion_free(gen2);
  glab_motion* gen3 = nullptr;
  REQUIRE(glab_generate(loaded, (dir / "audio.csv").c_str(), R"({"seed": 6})", &gen3) == GLAB_OK);
  REQUIRE(glab_motion_values(gen3, &b, &nb) == GLAB_OK);
  same = true;
  for (int64_t i = 0; i < na; ++i)
    if (a[i] != b[i]) same = false;
  CHECK_FALSE(same);
  glab_motion_free(gen3);

  // The trained model's stats feed the "stats" source after a reload.
  glab_motion* from_stats = nullptr;
  REQUIRE(glab_generate(loaded, (dir / "audio.csv").c_str(),
                        R"({"seed": 5, "specific": "stats"})", &from_stats) == GLAB_OK);
  CHECK(glab_motion_frames(from_stats) == 60);
  glab_motion_free(from_stats);

  glab_motion* ref_coded = nullptr;
  const std::string ref_opts =
      std::string(R"({"specific": "reference", "reference": ")") + (dir / "gt.json") + "\"}";
  REQUIRE(glab_generate(loaded, (dir / "audio.csv").c_str(), ref_opts.c_str(), &ref_coded) ==
          GLAB_OK);
  CHECK(glab_motion_frames(ref_coded) == 60);

  glab_motion* inserted = nullptr;
  REQUIRE(glab_timeline_insert(loaded, (dir / "audio.csv").c_str(), (dir / "gt.json").c_str(), 20,
                               40, R"({"seed": 5})", &inserted) == GLAB_OK);
  CHECK(glab_motion_frames(inserted) == 60);
  REQUIRE(glab_motion_write(inserted, (dir / "inserted.json").c_str()) == GLAB_OK);
  glab_motion* reread = nullptr;
  REQUIRE(glab_motion_read((dir / "inserted.json").c_str(), &reread) == GLAB_OK);
  CHECK(glab_motion_frames(reread) == 60);

  glab_motion_free(reread);
  glab_motion_free(inserted);
  glab_motion_free(ref_coded);
  glab_motion_free(gen);
  glab_model_free(loaded);
  glab_model_free(model);
  glab_dataset_free(ds);
}

TEST_CASE("evaluation reports come back as JSON") {
  TempDir dir("eval");
  glab_dataset* ds = make_dataset();
  glab_model* model = make_model();
  REQUIRE(glab_train(model, ds, nullptr, kTinyTrain, nullptr) == GLAB_OK);

  glab_extractor* ex = nullptr;
  REQUIRE(glab_extractor_train(ds, R"({"steps": 5, "seed": 3})", &ex) == GLAB_OK);
  REQUIRE(glab_extractor_save(ex, (dir / "ex").c_str()) == GLAB_OK);
  glab_extractor* ex2 = nullptr;
  REQUIRE(glab_extractor_load((dir / "ex").c_str(), &ex2) == GLAB_OK);

  Report rep;
  REQUIRE(glab_evaluate(model, ds, ex2, R"({"draws": 2, "seed": 3})", &rep.text) == GLAB_OK);
  const json j = rep.parse();
  CHECK(j.at("reconstruction").at("position_l1").get<double>() > 0.0);
  CHECK(j.at("reconstruction").contains("lpips"));
  CHECK(j.at("reconstruction").contains("fid"));
  CHECK(j.at("generation").contains("multimodality"));
  CHECK(j.at("generation").contains("fid"));
  CHECK(j.at("generation").at("styles_hit").get<double>() >= 1.0);

  // Pairwise report between two motion files.
  REQUIRE(glab_dataset_export_sample(ds, "val", 0, (dir / "audio.csv").c_str(),
                                     (dir / "gt.json").c_str()) == GLAB_OK);
  glab_motion* gt = nullptr;
  REQUIRE(glab_motion_read((dir / "gt.json").c_str(), &gt) == GLAB_OK);
  glab_motion* gen = nullptr;
  REQUIRE(glab_generate(model, (dir / "audio.csv").c_str(), R"({"seed": 1})", &gen) == GLAB_OK);
  Report pair;
  REQUIRE(glab_evaluate_pair(gen, gt, nullptr, R"({"pck_delta": 3.0})", &pair.text) == GLAB_OK);
  const json p = pair.parse();
  CHECK(p.at("position_l1").get<double>() > 0.0);
  CHECK(p.at("pck").get<double>() >= 0.0);
  CHECK(p.at("pck").get<double>() <= 1.0);
  CHECK(p.contains("rotation_geodesic"));

  glab_motion_free(gen);
  glab_motion_free(gt);
  glab_extractor_free(ex2);
  glab_extractor_free(ex);
  glab_model_free(model);
  glab_dataset_free(ds);
}

TEST_CASE("experiment entry points produce rows") {
  glab_dataset* ds = make_dataset();

  Report noise;
  REQUIRE(glab_noise_experiment(ds, R"({"sigmas_deg": [0, 5], "seeds": 2, "seed": 2})",
                                &noise.text) == GLAB_OK);
  const json nj = noise.parse();
  REQUIRE(nj.at("rows").size() == 2);
  CHECK(nj.at("rows")[0].at("position_l1").get<double>() <= 1e-5);
  CHECK(nj.at("rows")[0].at("pck").get<double>() == 1.0);
  CHECK(nj.at("rows")[0].contains("ssim"));
  CHECK(nj.at("rows")[1].at("position_l1").get<double>() > 0.0);

  const std::string micro_train =
      R"({"steps": 2, "batch": 1, "crop": 32, "weights": {"lpips": 0}})";
  Report sweep;
  const std::string sweep_cfg = std::string(R"({"model": )") + kTinyModel +
                                R"(, "train": )" + micro_train + R"(, "rhos": [3.0]})";
  REQUIRE(glab_rho_sweep(ds, nullptr, sweep_cfg.c_str(), &sweep.text) == GLAB_OK);
  const json sj = sweep.parse();
  REQUIRE(sj.at("rows").size() == 1);
  CHECK(sj.at("rows")[0].at("rho") == 3.0);
  CHECK(sj.at("rows")[0].at("position_l1").get<double>() > 0.0);

  Report ablation;
  const std::string abl_cfg = std::string(R"({"model": )") + kTinyModel +
                              R"(, "train": )" + micro_train + R"(, "keeps": [0, 4]})";
  REQUIRE(glab_dct_ablation(ds, nullptr, abl_cfg.c_str(), &ablation.text) == GLAB_OK);
  const json aj = ablation.parse();
  CHECK(aj.at("base_position_l1").get<double>() > 0.0);
  CHECK(aj.at("dct_position_l1").get<double>() > 0.0);
  REQUIRE(aj.at("base_speed_by_keep").size() == 2);
  REQUIRE(aj.at("dct_speed_by_keep").size() == 2);

  Report grads;
  REQUIRE(glab_grad_check(3, &grads.text) == GLAB_OK);
  const json gj = grads.parse();
  CHECK(gj.at("max_op_err").get<double>() < 1e-3);
  CHECK(gj.at("max_loss_err").get<double>() < 1e-3);
  CHECK(gj.at("cases").size() > 10);

  glab_dataset_free(ds);
}

TEST_CASE("wav features feed generation end to end") {
  TempDir dir("wav");
  write_sine_wav(dir / "tone.wav", 16000, 16000, 440.0);
  REQUIRE(glab_wav_features((dir / "tone.wav").c_str(), R"({"n_mels": 16})",
                            (dir / "tone.csv").c_str()) == GLAB_OK);

  glab_model* model = make_model();
  glab_motion* out = nullptr;
  REQUIRE(glab_generate(model, (dir / "tone.csv").c_str(), nullptr, &out) == GLAB_OK);
  CHECK(glab_motion_frames(out) == 30);
  CHECK(glab_motion_joints(out) == 8);
  glab_motion_free(out);
  glab_model_free(model);
}

TEST_CASE("failures set a status and an error message") {
  glab_model* model = nullptr;
  CHECK(glab_model_create(R"({"output": "nonsense"})", &model) == GLAB_INVALID_ARGUMENT);
  CHECK(std::string(glab_last_error()).find("output") != std::string::npos);
  CHECK(model == nullptr);

  CHECK(glab_model_create(R"({"speld_wrong": 1})", &model) == GLAB_INVALID_ARGUMENT);
  CHECK(std::string(glab_last_error()).find("speld_wrong") != std::string::npos);

  glab_dataset* ds = make_dataset();
  model = make_model();
  CHECK(glab_train(model, ds, nullptr, R"({"steps": 1, "crop": 32, "weights": {"lpips": 0.05}})",
                   nullptr) == GLAB_INVALID_ARGUMENT);
  CHECK(std::string(glab_last_error()).find("extractor") != std::string::npos);

  glab_motion* out = nullptr;
  CHECK(glab_generate(model, "missing.csv", nullptr, &out) != GLAB_OK);
  CHECK(out == nullptr);

  // A fresh model has no code statistics for the stats source.
  TempDir dir("errs");
  REQUIRE(glab_dataset_export_sample(ds, "val", 0, (dir / "audio.csv").c_str(), nullptr) ==
          GLAB_OK);
  CHECK(glab_generate(model, (dir / "audio.csv").c_str(), R"({"specific": "stats"})", &out) ==
        GLAB_BAD_STATE);
  CHECK(glab_generate(model, (dir / "audio.csv").c_str(), R"({"specific": "reference"})", &out) ==
        GLAB_INVALID_ARGUMENT);
  CHECK(std::string(glab_last_error()).find("reference") != std::string::npos);
  CHECK(glab_generate(model, (dir / "audio.csv").c_str(), R"({"reference": "x.json"})", &out) ==
        GLAB_INVALID_ARGUMENT);

  glab_model_free(model);
  glab_dataset_free(ds);
}
