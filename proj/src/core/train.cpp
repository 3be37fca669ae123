#include "core/train.hpp"

#include <cmath>
#include <fstream>

#include "core/kinematics.hpp"
#include "core/losses.hpp"

namespace glab {

namespace {

struct CropViews {
  Tensor audio;       // [F, Tc]
  Tensor motion_ct;   // [D, Tc]
  Tensor motion_tjd;  // [Tc, J, dims]
  Tensor gt_pos;      // [Tc, J, pos_dims]
};

CropViews make_crop(const Model& model, const DatasetSample& s, int64_t start, int64_t len) {
  const ModelConfig& mc = model.config();
  const int64_t F = s.audio.dim, J = s.motion.joints, D = s.motion.dims;
  CropViews c;

  std::vector<double> audio(static_cast<size_t>(F * len));
  for (int64_t t = 0; t < len; ++t)
    for (int64_t f = 0; f < F; ++f)
      audio[static_cast<size_t>(f * len + t)] =
          s.audio.data[static_cast<size_t>((start + t) * F + f)];
  c.audio = Tensor::from({F, len}, std::move(audio));

  std::vector<double> tjd(s.motion.data.begin() + start * J * D,
                          s.motion.data.begin() + (start + len) * J * D);
  std::vector<double> ct(static_cast<size_t>(J * D * len));
  for (int64_t t = 0; t < len; ++t)
    for (int64_t k = 0; k < J * D; ++k)
      ct[static_cast<size_t>(k * len + t)] = tjd[static_cast<size_t>(t * J * D + k)];
  c.motion_ct = Tensor::from({J * D, len}, std::move(ct));

  if (mc.output == OutputMode::rotations6d) {
    c.gt_pos = Tensor::from({len, J, 3}, fk_positions(s.motion.skeleton, tjd, len));
  } else {
    c.gt_pos = Tensor::from({len, J, D}, tjd);
  }
  c.motion_tjd = Tensor::from({len, J, D}, std::move(tjd));
  return c;
}

}  // namespace

TrainResult train_model(Model& model, const Dataset& ds, const FeatureExtractor* ex,
                        const TrainConfig& cfg) {
  const ModelConfig& mc = model.config();
  const LossWeights& w = cfg.weights;
  const bool baseline = mc.baseline_no_split;
  const bool rot_mode = mc.output == OutputMode::rotations6d;
  const bool structural = !baseline && (w.stft > 0 || w.ssim > 0 || w.lpips > 0);

  if (ds.train.empty()) fail(Status::invalid_argument, "training needs a non-empty train split");
  if (cfg.steps < 1 || cfg.batch < 1) fail(Status::invalid_argument, "steps and batch must be >= 1");
  if (cfg.crop < 2 || cfg.crop > ds.frames)
    fail(Status::invalid_argument, "training crop must be in [2, dataset frames]");
  if (mc.use_dct && cfg.crop != mc.dct_frames)
    fail(Status::invalid_argument, "DCT-variant training needs crop == dct_frames (" +
                                       std::to_string(mc.dct_frames) + "), got " +
                                       std::to_string(cfg.crop));
  if (!baseline && w.stft > 0 && cfg.crop < StftSpec{}.window)
    fail(Status::invalid_argument, "spectral loss needs crop >= " +
                                       std::to_string(StftSpec{}.window) + " frames");
  if (!baseline && w.lpips > 0) {
    if (ex == nullptr)
      fail(Status::invalid_argument, "perceptual loss weight is set but no extractor was given");
    if (ex->config().input_dim != mc.motion_dim())
      fail(Status::shape_mismatch, "extractor input_dim " + std::to_string(ex->config().input_dim) +
                                       " does not match motion dim " +
                                       std::to_string(mc.motion_dim()));
  }
  if (ds.audio_dim != mc.audio_dim)
    fail(Status::shape_mismatch, "dataset audio_dim " + std::to_string(ds.audio_dim) +
                                     " does not match model audio_dim " +
                                     std::to_string(mc.audio_dim));

  Adam opt(model.params().tensors(), cfg.lr);
  Rng rng(mix_seed(cfg.seed, 0x7a17b0a7ULL));
  const int64_t n = static_cast<int64_t>(ds.train.size());
  CodeStats& stats = model.specific_stats();
  bool stats_started = stats.valid();

  TrainResult result;
  const double inv_batch = 1.0 / static_cast<double>(cfg.batch);

  for (int64_t step = 0; step < cfg.steps; ++step) {
    TrainLogRow row;
    row.step = step;

    for (int64_t b = 0; b < cfg.batch; ++b) {
      const DatasetSample& sample = ds.train[static_cast<size_t>(rng.uniform_int(0, n - 1))];
      const int64_t start = rng.uniform_int(0, ds.frames - cfg.crop);
      const CropViews crop = make_crop(model, sample, start, cfg.crop);

      Tape tape;
      Tensor total;
      auto add_term = [&](const Tensor& term, double weight, double& slot, const char* name) {
        const double v = term.item();
        if (!std::isfinite(v))
          fail(Status::numeric, std::string("non-finite ") + name + " loss at step " +
                                    std::to_string(step) + " (train seed " +
                                    std::to_string(cfg.seed) + ")");
        slot += v;
        const Tensor scaled = mul_scalar(term, weight * inv_batch);
        total = total.defined() ? add(total, scaled) : scaled;
      };

      const MotionEncoding em = model.encode_motion_t(crop.motion_ct);
      const AudioEncoding ea = model.encode_audio_t(crop.audio);
      const Tensor s_m = sample_code(em.shared, rng);
      const Tensor s_a = sample_code(ea.shared, rng);
      const Tensor i_m = baseline ? Tensor() : sample_code(em.specific, rng);

      auto run_recon = [&](const Tensor& shared, double& slot, const char* name) {
        const Tensor pred_dt =
            baseline ? model.decode_baseline_t(shared) : model.decode_t(shared, i_m);
        const Tensor pred_tjd = model.to_frames_t(pred_dt);
        const Tensor pred_pos =
            rot_mode ? fk_positions_t(mc.skeleton, pred_tjd) : pred_tjd;
        const MotionLossTerms ml =
            motion_loss(rot_mode ? pred_tjd : Tensor(), rot_mode ? crop.motion_tjd : Tensor(),
                        pred_pos, crop.gt_pos, w.motion);
        add_term(ml.total, w.reconstruction, slot, name);
        if (structural) {
          if (w.stft > 0) add_term(stft_loss(pred_pos, crop.gt_pos), w.stft, row.stft, "spectral");
          if (w.ssim > 0)
            add_term(ssim_loss(pred_pos, crop.gt_pos), w.ssim, row.ssim, "structural-similarity");
          if (w.lpips > 0)
            add_term(perceptual_loss(*ex, pred_dt, crop.motion_ct), w.lpips, row.lpips,
                     "perceptual");
        }
      };
      run_recon(s_m, row.recon_motion, "motion reconstruction");
      run_recon(s_a, row.recon_audio, "audio reconstruction");

      Tensor kl_total;
      auto add_kl = [&](const CodeDist& d, double scale) {
        if (!d.logvar.defined()) return;
        const Tensor term = mul_scalar(kl_normal_loss(d.mean, d.logvar), scale);
        kl_total = kl_total.defined() ? add(kl_total, term) : term;
      };
      add_kl(ea.shared, 1.0);
      add_kl(em.shared, 1.0);

      if (!baseline) {
        add_kl(em.specific, 1.0);

        auto draw_style = [&]() {
          std::vector<double> z(static_cast<size_t>(mc.specific_dim * cfg.crop));
          for (double& v : z) v = rng.normal();
          return model.map_noise_t(Tensor::from({mc.specific_dim, cfg.crop}, std::move(z)));
        };
        const CodeDist r1 = draw_style(), r2 = draw_style();
        add_kl(r1, 0.5);
        add_kl(r2, 0.5);
        const Tensor i_r1 = sample_code(r1, rng);
        const Tensor i_r2 = sample_code(r2, rng);

        const Tensor gen1_dt = model.decode_t(s_a, i_r1);
        const Tensor gen1_tjd = model.to_frames_t(gen1_dt);
        const Tensor gen1_pos = rot_mode ? fk_positions_t(mc.skeleton, gen1_tjd) : gen1_tjd;
        add_term(relaxed_position_loss(gen1_pos, crop.gt_pos, w.rho), w.relaxed, row.relaxed,
                 "relaxed hinge");

        const MotionEncoding eg = model.encode_motion_t(gen1_dt);
        add_term(code_l1(eg.specific.mean, i_r1), w.cycle, row.cycle, "cycle");

        const Tensor gen2_dt = model.decode_t(s_a, i_r2);
        const Tensor gen2_tjd = model.to_frames_t(gen2_dt);
        const Tensor gen2_pos = rot_mode ? fk_positions_t(mc.skeleton, gen2_tjd) : gen2_tjd;
        add_term(diversity_loss(gen1_pos, gen2_pos, w.diversity_cap), w.diversity, row.diversity,
                 "diversity");

        // Running view of the specific-code distribution (exact recompute
        // replaces it after training).
        const auto& im_vals = em.specific.mean.values();
        const int64_t C = mc.specific_dim;
        if (!stats_started) {
          stats.mean.assign(static_cast<size_t>(C), 0.0);
          stats.var.assign(static_cast<size_t>(C), 0.0);
        }
        for (int64_t ch = 0; ch < C; ++ch) {
          double m1 = 0.0, m2 = 0.0;
          for (int64_t t = 0; t < cfg.crop; ++t) {
            const double v = im_vals[static_cast<size_t>(ch * cfg.crop + t)];
            m1 += v;
            m2 += v * v;
          }
          m1 /= static_cast<double>(cfg.crop);
          m2 /= static_cast<double>(cfg.crop);
          const double vc = std::max(m2 - m1 * m1, 0.0);
          if (!stats_started) {
            stats.mean[static_cast<size_t>(ch)] = m1;
            stats.var[static_cast<size_t>(ch)] = vc;
          } else {
            stats.mean[static_cast<size_t>(ch)] =
                cfg.stats_momentum * stats.mean[static_cast<size_t>(ch)] +
                (1.0 - cfg.stats_momentum) * m1;
            stats.var[static_cast<size_t>(ch)] =
                cfg.stats_momentum * stats.var[static_cast<size_t>(ch)] +
                (1.0 - cfg.stats_momentum) * vc;
          }
        }
        stats_started = true;
      }

      add_term(code_l1(s_a, s_m), w.align, row.align, "alignment");
      if (kl_total.defined()) add_term(kl_total, w.kl, row.kl, "kl");

      row.total += total.item() * static_cast<double>(cfg.batch);  // undo the 1/batch scale
      tape.backward(total);
    }

    opt.step();
    opt.zero_grad();

    row.total *= inv_batch;
    row.recon_motion *= inv_batch;
    row.recon_audio *= inv_batch;
    row.relaxed *= inv_batch;
    row.cycle *= inv_batch;
    row.diversity *= inv_batch;
    row.align *= inv_batch;
    row.kl *= inv_batch;
    row.stft *= inv_batch;
    row.ssim *= inv_batch;
    row.lpips *= inv_batch;
    result.final_total = row.total;
    if (step % cfg.log_every == 0 || step + 1 == cfg.steps) result.log.push_back(row);
  }

  if (!baseline) model.specific_stats() = recompute_specific_stats(model, ds);
  model.set_trained(true);

  if (!cfg.log_csv.empty()) {
    std::ofstream out(cfg.log_csv, std::ios::trunc);
    if (!out) fail(Status::io, "cannot write training log: " + cfg.log_csv);
    out << "step,total,recon_motion,recon_audio,relaxed,cycle,diversity,align,kl,stft,ssim,"
           "lpips\n";
    for (const TrainLogRow& r : result.log)
      out << r.step << ',' << r.total << ',' << r.recon_motion << ',' << r.recon_audio << ','
          << r.relaxed << ',' << r.cycle << ',' << r.diversity << ',' << r.align << ',' << r.kl
          << ',' << r.stft << ',' << r.ssim << ',' << r.lpips << '\n';
  }
  return result;
}

CodeStats recompute_specific_stats(const Model& model, const Dataset& ds) {
  const ModelConfig& mc = model.config();
  if (mc.baseline_no_split)
    fail(Status::bad_state, "the no-split baseline has no specific code");
  NoRecord guard;
  const int64_t C = mc.specific_dim;
  std::vector<double> sum(static_cast<size_t>(C), 0.0), sumsq(static_cast<size_t>(C), 0.0);
  int64_t frames = 0;
  // Pools the encoder head's output in its native domain (DCT coefficients
  // for the DCT variant), matching both the running statistics gathered
  // during training and the inverse transform generation applies to
  // stats-sourced draws.
  auto pool = [&](const Tensor& mean_ct) {
    const auto& v = mean_ct.values();
    const int64_t t = mean_ct.dim(1);
    for (int64_t ch = 0; ch < C; ++ch)
      for (int64_t f = 0; f < t; ++f) {
        const double x = v[static_cast<size_t>(ch * t + f)];
        sum[static_cast<size_t>(ch)] += x;
        sumsq[static_cast<size_t>(ch)] += x * x;
      }
    frames += t;
  };
  for (const DatasetSample& s : ds.train) {
    Motion m = s.motion;
    if (mc.use_dct) {
      const int64_t keep = (m.frames / mc.dct_frames) * mc.dct_frames;
      if (keep < mc.dct_frames) continue;
      m.frames = keep;
      m.data.resize(static_cast<size_t>(keep * m.joints * m.dims));
    }
    const Tensor ch = motion_channels_t(m);
    if (!mc.use_dct) {
      pool(model.encode_motion_t(ch).specific.mean);
    } else {
      for (int64_t off = 0; off < m.frames; off += mc.dct_frames)
        pool(model.encode_motion_t(slice(ch, 1, off, off + mc.dct_frames)).specific.mean);
    }
  }
  if (frames == 0) fail(Status::invalid_argument, "no usable training motions for code statistics");
  CodeStats st;
  st.mean.resize(static_cast<size_t>(C));
  st.var.resize(static_cast<size_t>(C));
  for (int64_t ch = 0; ch < C; ++ch) {
    const double m = sum[static_cast<size_t>(ch)] / static_cast<double>(frames);
    st.mean[static_cast<size_t>(ch)] = m;
    st.var[static_cast<size_t>(ch)] =
        std::max(sumsq[static_cast<size_t>(ch)] / static_cast<double>(frames) - m * m, 0.0);
  }
  return st;
}

FeatureExtractor train_dataset_extractor(const Dataset& ds, const ExtractorTrainOpts& opts) {
  if (ds.train.empty()) fail(Status::invalid_argument, "extractor training needs a train split");
  ExtractorConfig cfg;
  cfg.input_dim = ds.train.front().motion.joints * ds.train.front().motion.dims;
  cfg.channels = {16, 16, 16, 128, 16};
  cfg.decoder_channels = {16, 16};
  FeatureExtractor ex = FeatureExtractor::create(cfg, opts.seed);
  std::vector<std::vector<double>> clips;
  clips.reserve(ds.train.size());
  for (const DatasetSample& s : ds.train) clips.push_back(motion_channels(s.motion));
  train_extractor(ex, clips, opts);
  return ex;
}

}  // namespace glab
