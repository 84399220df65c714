#pragma once

#include "core/allocation.hpp"
#include "core/dataset.hpp"
#include "core/metrics.hpp"
#include "core/model.hpp"

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace opd {

struct TrainConfig {
    Strategy strategy = Strategy::opd_al;
    std::int64_t steps = 2000;
    int batch_samples = 4;
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::uint64_t seed = 1;
    double validation_fraction = 0.1;
    std::int64_t log_every = 50;
    std::int64_t val_every = 500;
    // Use all coupled pairs per sample per step instead of one. Off by
    // default so every strategy sees the same per-step pair volume.
    bool full_pairs = false;

    void validate() const;
};

// Per-parameter first and second moment buffers plus the step counter.
struct AdamState {
    std::vector<std::vector<float>> m;
    std::vector<std::vector<float>> v;
    std::int64_t t = 0;

    explicit AdamState(const std::vector<Tensor<float>>& params);
};

struct DivergenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Standard bias-corrected update from the populated gradients. Verifies
// all gradients are finite before mutating anything and throws
// DivergenceError otherwise.
void adam_step(std::vector<Tensor<float>>& params, AdamState& state, double lr, double beta1,
               double beta2, double eps);

// Whole-sample split: validation gets max(1, round(fraction * N)) samples
// (capped so at least one training sample remains). Returns
// (train_indices, validation_indices), each sorted ascending.
std::pair<std::vector<int>, std::vector<int>> split_validation(int sample_count, double fraction,
                                                               std::uint64_t seed);

struct TrainLogRow {
    std::int64_t step = 0;
    std::int64_t epoch = 0;
    std::string strategy;
    bool has_train = false;
    double train_loss = 0.0;
    bool has_breakdown = false;  // mse/msa terms, alienation strategy only
    double mse_term = 0.0;
    double msa_term = 0.0;
    bool has_val = false;
    double val_psnr = 0.0;
    double val_ssim = 0.0;
    double val_rmse = 0.0;
    double seconds = 0.0;
};

struct TrainLog {
    std::vector<TrainLogRow> rows;
};

// CSV schema: step,epoch,strategy,train_loss,mse_term,msa_term,val_psnr,
// val_ssim,val_rmse,seconds with empty fields where not applicable.
void write_train_log_csv(const std::string& path, const TrainLog& log);

struct TrainResult {
    TrainLog log;
    MetricsReport final_validation;
    double input_psnr_val = 0.0;  // unclipped noisy-frame baseline on the val split
    double seconds = 0.0;
    std::int64_t steps_run = 0;
    std::vector<int> train_indices;
    std::vector<int> val_indices;
};

using ProgressFn = std::function<void(const TrainLogRow&)>;

// Runs the full loop: epoch-shuffled sample batching, one optimizer step
// per training step, periodic validation (clean reference when present,
// frame-average proxy otherwise). Aborts with DivergenceError after 10
// consecutive non-finite losses.
TrainResult train_run(DenoiserNet<float>& net, const Dataset& data, const TrainConfig& cfg,
                      const ProgressFn& on_row = nullptr);

}  // namespace opd
