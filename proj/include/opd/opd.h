/* opd - multi-frame denoising laboratory.
 *
 * C interface to the core library. All functions return opd_status;
 * OPD_OK means success and anything else leaves a human-readable
 * message in opd_last_error() (thread-local). Handles are opaque and
 * must be released with their matching free/close function.
 */
#ifndef OPD_H
#define OPD_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum opd_status {
    OPD_OK = 0,
    OPD_ERR_INVALID_ARGUMENT = 1,
    OPD_ERR_SHAPE_MISMATCH = 2,
    OPD_ERR_IO = 3,
    OPD_ERR_FORMAT_MAGIC = 4,
    OPD_ERR_FORMAT_TRUNCATED = 5,
    OPD_ERR_DIVERGED = 6,
    OPD_ERR_INTERNAL = 7
} opd_status;

const char* opd_status_name(opd_status s);

/* Message describing the most recent failure on this thread. */
const char* opd_last_error(void);

const char* opd_version(void);

/* Caps the worker threads used by batched kernels (0 restores the
 * default). Results are identical for any thread count. */
void opd_set_num_threads(int n);

/* ---------- dataset synthesis ---------- */

typedef enum opd_noise_kind {
    OPD_NOISE_GAUSSIAN = 0,
    OPD_NOISE_POISSON = 1,
    OPD_NOISE_SPECKLE = 2
} opd_noise_kind;

typedef struct opd_synth_params {
    opd_noise_kind kind;
    double sigma;       /* gaussian std in 8-bit units */
    double lambda;      /* poisson photon scale */
    double looks;       /* speckle look count */
    int32_t frames;     /* frames per sample, >= 2 */
    int32_t count;      /* sample count (procedural source) */
    int32_t size;       /* square crop extent, even */
    uint64_t seed;
    const char* clean_dir; /* optional PNG source directory, NULL for procedural */
} opd_synth_params;

void opd_synth_params_init(opd_synth_params* p);

opd_status opd_synth_dataset(const opd_synth_params* p, const char* out_dir);

/* ---------- datasets ---------- */

typedef struct opd_dataset opd_dataset;

typedef struct opd_dataset_info {
    int32_t samples;
    int32_t frames_per_sample;
    int32_t height;
    int32_t width;
    int32_t has_clean; /* 1 when every sample carries a clean reference */
} opd_dataset_info;

/* Opens a dataset directory (manifest.json) or a bare sample directory
 * (frames_f32.bin). */
opd_status opd_dataset_open(const char* dir, opd_dataset** out);
void opd_dataset_close(opd_dataset* ds);
opd_status opd_dataset_info_get(const opd_dataset* ds, opd_dataset_info* out);

/* ---------- models ---------- */

typedef struct opd_model opd_model;

opd_status opd_model_create(uint64_t seed, opd_model** out);
opd_status opd_model_load(const char* path, opd_model** out);
opd_status opd_model_save(const opd_model* model, const char* path);
void opd_model_free(opd_model* model);
int64_t opd_model_param_count(const opd_model* model);

/* ---------- training ---------- */

typedef struct opd_train_params {
    const char* strategy;   /* n2c | n2n | opd-rc | opd-al */
    int64_t steps;
    int32_t batch_samples;
    double learning_rate;
    double beta1, beta2, eps;
    uint64_t seed;
    double validation_fraction;
    int64_t log_every;
    int64_t val_every;
    int32_t full_pairs;     /* nonzero: use every coupled pair per step */
} opd_train_params;

void opd_train_params_init(opd_train_params* p);

typedef struct opd_train_result {
    double final_val_psnr;
    double final_val_ssim;
    double final_val_rmse;
    double input_psnr;      /* unclipped noisy baseline on the validation split */
    double seconds;
    int64_t steps_run;
} opd_train_result;

/* Row callback fired for every emitted log row; fields that do not apply
 * are NaN. */
typedef struct opd_log_row {
    int64_t step;
    int64_t epoch;
    double train_loss;
    double mse_term;
    double msa_term;
    double val_psnr;
    double val_ssim;
    double val_rmse;
    double seconds;
} opd_log_row;

typedef void (*opd_progress_fn)(const opd_log_row* row, void* user);

/* Trains in place. csv_log_path may be NULL; progress may be NULL. */
opd_status opd_train(opd_model* model, const opd_dataset* ds, const opd_train_params* p,
                     const char* csv_log_path, opd_progress_fn progress, void* user,
                     opd_train_result* out);

/* ---------- evaluation and inference ---------- */

typedef struct opd_metrics {
    double psnr;
    double ssim;
    double rmse;
    int64_t images;
    int64_t psnr_inf_excluded; /* identical pairs excluded from the psnr mean */
    int32_t proxy_reference;   /* 1 when scored against frame averages */
} opd_metrics;

typedef enum opd_infer_mode { OPD_INFER_PER_FRAME = 0, OPD_INFER_FUSED = 1 } opd_infer_mode;

opd_status opd_evaluate_model(const opd_model* model, const opd_dataset* ds, opd_infer_mode mode,
                              opd_metrics* out);

/* Scores the plain frame-average estimate. */
opd_status opd_evaluate_aar(const opd_dataset* ds, opd_metrics* out);

/* Mean PSNR of raw noisy frames against the reference. */
opd_status opd_input_psnr(const opd_dataset* ds, double* out);

/* Writes denoised PNGs (clipped) and float binaries (unclipped) per
 * sample into out_dir. */
opd_status opd_denoise(const opd_model* model, const opd_dataset* ds, const char* out_dir,
                       opd_infer_mode mode);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* OPD_H */
