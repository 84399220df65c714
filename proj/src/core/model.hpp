#pragma once

#include "core/rng.hpp"
#include "core/tensor.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace opd {

// Zero-mean normal weights with std = sqrt(2 / fan_in), fan_in = C*k*k.
// Draw order is the canonical (o, c, ky, kx) nest, independent of the
// tensor's storage layout.
template <typename T>
Tensor<T> he_init(const Shape& weight_shape, RngStream& rng);

struct ConvLayerPlan {
    const char* name;
    int in_channels;
    int out_channels;
    int kernel;
    int stride;
    int padding;
    bool relu_after;
};

// Fixed architecture identifier written into checkpoints.
inline constexpr const char* kArchId = "opd-ed2s-v1";

// Layer plan of the two-scale encoder-decoder. The decoder upsamples by
// pixel replication before up_conv and concatenates the enc1b activation
// before skip_conv. The head is linear (no clamp).
const std::vector<ConvLayerPlan>& denoiser_plan();

std::int64_t denoiser_param_count();

// Compact convolutional encoder-decoder denoiser: one noisy frame in,
// one denoised estimate out, shape preserved for even H and W.
template <typename T>
class DenoiserNet {
public:
    explicit DenoiserNet(std::uint64_t seed);

    // batch (B,1,H,W) with H, W even -> (B,1,H,W)
    Tensor<T> forward(Tape<T>& tape, const Tensor<T>& batch) const;

    // Weight and bias tensors in declared layer order (w0, b0, w1, b1, ...).
    std::vector<Tensor<T>> parameters() const;
    std::int64_t parameter_count() const;

    std::uint64_t seed() const { return seed_; }
    const std::string& trained_strategy() const { return trained_strategy_; }
    std::int64_t trained_steps() const { return trained_steps_; }
    void set_training_provenance(const std::string& strategy, std::int64_t steps) {
        trained_strategy_ = strategy;
        trained_steps_ = steps;
    }

private:
    struct Layer {
        Tensor<T> w;
        Tensor<T> b;
        ConvLayerPlan plan;
    };
    std::vector<Layer> layers_;
    std::uint64_t seed_ = 0;
    std::string trained_strategy_ = "none";
    std::int64_t trained_steps_ = 0;
};

using DenoiserNetF = DenoiserNet<float>;
using DenoiserNetD = DenoiserNet<double>;

extern template Tensor<float> he_init<float>(const Shape&, RngStream&);
extern template Tensor<double> he_init<double>(const Shape&, RngStream&);
extern template class DenoiserNet<float>;
extern template class DenoiserNet<double>;

}  // namespace opd
