#pragma once

#include "core/model.hpp"

#include <stdexcept>
#include <string>

namespace opd {

// Checkpoint file: magic "OPD1", little-endian u32 header length, a
// key=value text header (format id, architecture id, seed, strategy,
// step count, per-layer shapes), then the raw float32 parameter payload
// in declared layer order, each weight serialized in the canonical
// (o, c, ky, kx) nest. Save -> load -> save is byte-identical.
struct CheckpointError : std::runtime_error {
    enum class Kind { bad_magic, truncated, shape_mismatch, parse };
    Kind kind;
    CheckpointError(Kind k, const std::string& msg) : std::runtime_error(msg), kind(k) {}
};

void save_checkpoint(const std::string& path, const DenoiserNet<float>& net);

DenoiserNet<float> load_checkpoint(const std::string& path);

}  // namespace opd
