#ifndef GESTURELAB_H
#define GESTURELAB_H

/*
 * C interface to the gesture-synthesis laboratory.
 *
 * Conventions:
 *  - Every fallible call returns a glab_status; GLAB_OK is 0.
 *  - On failure, glab_last_error() returns a message for the calling thread
 *    (valid until the thread's next library call).
 *  - Objects come back through out-parameters as opaque handles and must be
 *    released with their matching *_free function. Out-parameters are left
 *    untouched on failure.
 *  - Strings returned through char** out-parameters are heap-allocated and
 *    must be released with glab_string_free.
 *  - Configuration goes in as JSON text; unknown keys are rejected so typos
 *    surface instead of silently falling back to defaults.
 */

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#ifndef GLAB_API
#define GLAB_API
#endif

typedef enum glab_status {
  GLAB_OK = 0,
  GLAB_INVALID_ARGUMENT = 1,
  GLAB_IO = 2,
  GLAB_SHAPE_MISMATCH = 3,
  GLAB_BAD_STATE = 4,
  GLAB_NUMERIC = 5,
  GLAB_INTERNAL = 6
} glab_status;

GLAB_API const char* glab_version(void);
GLAB_API const char* glab_status_name(glab_status s);
GLAB_API const char* glab_last_error(void);
GLAB_API void glab_string_free(char* s);

typedef struct glab_dataset glab_dataset;
typedef struct glab_model glab_model;
typedef struct glab_motion glab_motion;
typedef struct glab_extractor glab_extractor;

/* ------------------------------------------------------------------ */
/* Synthetic dataset                                                    */
/* ------------------------------------------------------------------ */

/*
 * spec_json keys (all optional): rhythms_train, rhythms_val, styles,
 * frames, audio_dim, fps, amp_lo, amp_hi, seed.
 */
GLAB_API glab_status glab_dataset_generate(const char* spec_json, glab_dataset** out);
GLAB_API glab_status glab_dataset_save(const glab_dataset* ds, const char* dir);
GLAB_API glab_status glab_dataset_load(const char* dir, glab_dataset** out);
/* {"train","val","frames","audio_dim","fps","joints","min_interstyle_margin"} */
GLAB_API glab_status glab_dataset_info(const glab_dataset* ds, char** json_out);
/* split is "train" or "val"; either output path may be NULL to skip it. */
GLAB_API glab_status glab_dataset_export_sample(const glab_dataset* ds, const char* split,
                                                int64_t index, const char* audio_csv_path,
                                                const char* motion_path);
GLAB_API void glab_dataset_free(glab_dataset* ds);

/* ------------------------------------------------------------------ */
/* Motion clips                                                         */
/* ------------------------------------------------------------------ */

GLAB_API glab_status glab_motion_read(const char* path, glab_motion** out);
GLAB_API glab_status glab_motion_write(const glab_motion* m, const char* path);
GLAB_API int64_t glab_motion_frames(const glab_motion* m);
GLAB_API int64_t glab_motion_joints(const glab_motion* m);
GLAB_API int64_t glab_motion_dims(const glab_motion* m);
/* Borrowed view of the row-major [frames, joints, dims] buffer; valid while
 * the handle lives. */
GLAB_API glab_status glab_motion_values(const glab_motion* m, const double** data,
                                        int64_t* count);
/* {"mean_speed","style","wrist_energies":[l,r]} (style needs a skeleton). */
GLAB_API glab_status glab_motion_stats(const glab_motion* m, char** json_out);
GLAB_API void glab_motion_free(glab_motion* m);

/* ------------------------------------------------------------------ */
/* Feature extractor (perceptual metric backbone)                       */
/* ------------------------------------------------------------------ */

/* opts_json keys: steps, lr, seed. */
GLAB_API glab_status glab_extractor_train(const glab_dataset* ds, const char* opts_json,
                                          glab_extractor** out);
GLAB_API glab_status glab_extractor_save(const glab_extractor* ex, const char* stem);
GLAB_API glab_status glab_extractor_load(const char* stem, glab_extractor** out);
GLAB_API void glab_extractor_free(glab_extractor* ex);

/* ------------------------------------------------------------------ */
/* Model                                                                */
/* ------------------------------------------------------------------ */

/*
 * config_json keys (all optional, desk-scale defaults): audio_dim, output
 * ("rotations6d" | "positions2d"), shared_dim, specific_dim, mapping_hidden,
 * audio_channels, motion_channels, decoder_channels, kernel, dilations,
 * use_dct, dct_frames, baseline_no_split, seed, fps. The skeleton is the
 * 8-joint desk figure.
 */
GLAB_API glab_status glab_model_create(const char* config_json, glab_model** out);
GLAB_API glab_status glab_model_save(const glab_model* m, const char* stem);
GLAB_API glab_status glab_model_load(const char* stem, glab_model** out);
/* The effective config plus {"trained": bool}. */
GLAB_API glab_status glab_model_info(const glab_model* m, char** json_out);
GLAB_API void glab_model_free(glab_model* m);

/*
 * train_json keys: steps, batch, crop, lr, seed, stats_momentum, log_every,
 * log_csv, weights{reconstruction, stft, ssim, lpips, relaxed, rho, cycle,
 * diversity, diversity_cap, align, kl, motion{rotation, position, speed}}.
 * ex may be NULL when weights.lpips is 0. log_json_out (optional) receives
 * {"final_total", "rows":[{"step","total",...}]}.
 */
GLAB_API glab_status glab_train(glab_model* m, const glab_dataset* ds,
                                const glab_extractor* ex, const char* train_json,
                                char** log_json_out);

/*
 * audio_path: features CSV/JSON (by extension). opts_json keys: seed,
 * dct_keep, specific ("mapped" | "stats" | "reference" | "zeros"), reference (motion
 * file path, required for the reference source).
 */
GLAB_API glab_status glab_generate(const glab_model* m, const char* audio_path,
                                   const char* opts_json, glab_motion** out);

/* Mapped style everywhere except frames [start, stop), which take the
 * reference motion's encoded style. */
GLAB_API glab_status glab_timeline_insert(const glab_model* m, const char* audio_path,
                                          const char* reference_path, int64_t start,
                                          int64_t stop, const char* opts_json,
                                          glab_motion** out);

/* ------------------------------------------------------------------ */
/* Evaluation and experiments (reports come back as JSON text)          */
/* ------------------------------------------------------------------ */

/* Pairwise metrics between two motion files of the same shape. opts_json
 * keys: pck_delta, diversity_window. */
GLAB_API glab_status glab_evaluate_pair(const glab_motion* pred, const glab_motion* ref,
                                        const glab_extractor* ex, const char* opts_json,
                                        char** report_json);

/*
 * Validation-split report: reference-coded reconstruction metrics plus
 * style-set generation metrics. opts_json keys: draws, seed, pck_delta,
 * diversity_window. ex adds the perceptual and distribution metrics.
 * Output: {"reconstruction":{...}, "generation":{...,"multimodality",
 * "styles_hit"}}.
 */
GLAB_API glab_status glab_evaluate(const glab_model* m, const glab_dataset* ds,
                                   const glab_extractor* ex, const char* opts_json,
                                   char** report_json);

/* Metric robustness under Euler-angle rotation noise on the validation
 * motions. opts_json keys: sigmas_deg (array), pck_delta, seeds, seed.
 * Output: {"pck_delta", "rows":[{"sigma_deg", <every pair metric>}]}. */
GLAB_API glab_status glab_noise_experiment(const glab_dataset* ds, const char* opts_json,
                                           char** report_json);

/* Trains one model per hinge slack and reports variety/fidelity movement.
 * cfg_json: {"model":{...}, "train":{...}, "rhos":[...]}.
 * Output: {"rows":[{"rho","multimodality","position_l1","styles_hit"}]}. */
GLAB_API glab_status glab_rho_sweep(const glab_dataset* ds, const glab_extractor* ex,
                                    const char* cfg_json, char** report_json);

/* Plain vs DCT-variant side-by-side plus shared-code low-pass speed sweep.
 * cfg_json: {"model":{...}, "train":{...}, "keeps":[...]}.
 * Output: {"base_position_l1","dct_position_l1",
 *          "base_speed_by_keep":[[keep,speed],...], "dct_speed_by_keep":[...]}. */
GLAB_API glab_status glab_dct_ablation(const glab_dataset* ds, const glab_extractor* ex,
                                       const char* cfg_json, char** report_json);

/* Finite-difference check of every autodiff op and training loss.
 * Output: {"max_op_err","max_loss_err","cases":[{"name","err"}]}. */
GLAB_API glab_status glab_grad_check(uint64_t seed, char** report_json);

/* Log-mel features from a mono 16-bit WAV, written as a features CSV.
 * opts_json keys: n_mels, hop, n_fft, fmin, fmax. */
GLAB_API glab_status glab_wav_features(const char* wav_path, const char* opts_json,
                                       const char* out_csv_path);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* GESTURELAB_H */
