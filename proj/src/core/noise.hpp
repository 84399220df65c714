#pragma once

#include "core/rng.hpp"
#include "core/tensor.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace opd {

enum class NoiseKind { gaussian, poisson, speckle };

const char* noise_kind_name(NoiseKind k);
NoiseKind parse_noise_kind(const std::string& name);

struct NoiseSpec {
    NoiseKind kind = NoiseKind::gaussian;
    double sigma255 = 25.0;  // gaussian std in 8-bit units
    double lambda = 30.0;    // poisson photon scale
    double looks = 4.0;      // speckle look count L

    void validate() const;
    double active_parameter() const;
};

// m noisy realizations of one clean scene. Frames (and clean) are
// (1,1,H,W) tensors; noisy values are intentionally left unclipped so the
// noise stays zero-mean (clipping happens only on 8-bit export).
struct FrameStack {
    std::string id;
    std::vector<Tensor<float>> frames;
    Tensor<float> clean;  // may be invalid() when no reference exists
    bool has_clean() const { return clean.valid(); }
    int frame_count() const { return static_cast<int>(frames.size()); }
};

// clean + N(0, (sigma255/255)^2), i.i.d. per pixel, unclipped.
Tensor<float> add_gaussian(const Tensor<float>& clean, double sigma255, RngStream& rng);

// Poisson(lambda * x) / lambda per pixel: mean x, variance x / lambda.
// Rejects clean values outside [0, 1].
Tensor<float> add_poisson(const Tensor<float>& clean, double lambda, RngStream& rng);

// x * Gamma(L, 1/L) per pixel: multiplicative, unit mean, variance 1/L.
Tensor<float> add_speckle(const Tensor<float>& clean, double looks, RngStream& rng);

Tensor<float> apply_noise(const Tensor<float>& clean, const NoiseSpec& spec, RngStream& rng);

// m independent frames; frame j draws from a stream derived from
// (master_seed, sample_index, j), so regeneration is bitwise stable no
// matter how samples are scheduled.
FrameStack make_stack(const Tensor<float>& clean, const NoiseSpec& spec, int m,
                      std::uint64_t master_seed, std::int64_t sample_index);

// Built-in clean source: band-limited random textures overlaid with
// geometric shapes and a striped patch, values in [0, 1].
Tensor<float> procedural_clean(int size, std::uint64_t seed, std::int64_t sample_index);

struct SynthParams {
    NoiseSpec noise;
    int frames = 8;
    int count = 8;         // procedural sample count (ignored with clean_dir)
    int size = 64;         // square crop extent
    std::uint64_t seed = 1;
    std::string clean_dir;  // optional: PNG sources instead of procedural
};

// Writes <out>/<sample_id>/{frame_XX.png, clean.png, frames_f32.bin} plus
// manifest.json, and returns the manifest path.
std::string synth_dataset(const SynthParams& params, const std::string& out_dir);

}  // namespace opd
