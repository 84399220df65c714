#pragma once

#include "core/noise.hpp"
#include "core/tensor.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace opd {

struct DatasetMeta {
    int version = 1;
    NoiseSpec noise;
    int m = 0;
    std::uint64_t seed = 0;
};

struct ManifestSample {
    std::string id;
    int h = 0, w = 0;
    bool has_clean = false;
};

// Fully loaded dataset; training reads the float binaries, never the PNGs.
struct Dataset {
    DatasetMeta meta;
    std::vector<FrameStack> stacks;
    int height = 0, width = 0;

    int sample_count() const { return static_cast<int>(stacks.size()); }
    bool all_have_clean() const;
};

// frames_f32.bin: magic "OPDF", u32 version=1, u32 m, u32 H, u32 W, then
// m*H*W little-endian floats, frame-major. Unclipped values.
void write_frames_bin(const std::string& path, const std::vector<Tensor<float>>& frames);
std::vector<Tensor<float>> read_frames_bin(const std::string& path);

// <dir>/<stack.id>/: frame_<jj>.png (clipped 8-bit), clean.png when
// present, frames_f32.bin.
void write_sample_dir(const std::string& dataset_dir, const FrameStack& stack);

// Writes manifest.json and returns its path.
std::string write_manifest(const std::string& dataset_dir, const DatasetMeta& meta,
                           const std::vector<ManifestSample>& samples);

Dataset load_dataset(const std::string& dataset_dir);

// A bare sample directory (frames_f32.bin + optional clean.png) loads as a
// one-sample dataset with unknown noise metadata.
Dataset load_sample_dir(const std::string& sample_dir);

}  // namespace opd
