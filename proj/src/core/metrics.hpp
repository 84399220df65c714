#pragma once

#include "core/dataset.hpp"
#include "core/model.hpp"
#include "core/tensor.hpp"

#include <limits>
#include <vector>

namespace opd {

// Accumulation after registration: the pixelwise mean of the frames.
// Frames are assumed aligned.
Tensor<float> aar(const std::vector<Tensor<float>>& frames);

// 10*log10(peak^2 / mse); identical inputs give the +infinity sentinel.
double psnr(const Tensor<float>& a, const Tensor<float>& b, double peak = 1.0);

double rmse(const Tensor<float>& a, const Tensor<float>& b);

// Mean SSIM over all valid 11x11 windows with a sigma = 1.5 Gaussian
// weighting, K1 = 0.01, K2 = 0.03, peak 1. Requires H, W >= 11.
double ssim(const Tensor<float>& a, const Tensor<float>& b);

Tensor<float> clip01(const Tensor<float>& t);

enum class InferenceMode { per_frame, fused };

struct MetricsReport {
    std::vector<double> per_sample_psnr;
    std::vector<double> per_sample_ssim;
    std::vector<double> per_sample_rmse;
    double mean_psnr = 0.0;
    double mean_ssim = 0.0;
    double mean_rmse = 0.0;
    std::int64_t images = 0;          // individual predictions measured
    std::int64_t psnr_inf_excluded = 0;  // identical pairs left out of the psnr mean
    bool proxy_reference = false;     // true when scored against frame averages
};

// Denoises every frame of every listed sample and scores against the
// clean reference (or, without one, the frame average, flagged as proxy).
// per_frame scores each frame's estimate; fused scores the mean of the m
// estimates. Predictions are clipped to [0,1] for metric computation
// only.
MetricsReport evaluate_model(const DenoiserNet<float>& net, const Dataset& data,
                             InferenceMode mode, const std::vector<int>& sample_indices = {});

// Same scoring applied to the AAR estimate instead of a model.
MetricsReport evaluate_aar(const Dataset& data, const std::vector<int>& sample_indices = {});

// Mean PSNR of the raw (unclipped) noisy frames against clean; the
// baseline that trained models must beat.
double input_psnr(const Dataset& data, const std::vector<int>& sample_indices = {});

inline constexpr double kPsnrInf = std::numeric_limits<double>::infinity();

}  // namespace opd
