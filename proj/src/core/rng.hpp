#pragma once

#include <cstdint>
#include <random>

namespace opd {

// Seeded random stream with hand-rolled samplers. std::mt19937_64 is
// bit-for-bit portable; the standard distributions are not, so every
// transform lives here and test fixtures stay reproducible across
// compilers and standard libraries.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform in [0, 1) with 53-bit resolution.
    double uniform01();

    // Uniform integer in [0, n). n must be positive.
    std::uint64_t below(std::uint64_t n);

    // Standard normal via Box-Muller (one cached value).
    double normal();

    // Poisson with the given mean: Knuth product method for small means,
    // Hormann's PTRS transformed rejection for large ones.
    std::uint64_t poisson(double mean);

    // Gamma(shape, scale), shape >= 1, via Marsaglia-Tsang.
    double gamma(double shape, double scale);

private:
    std::mt19937_64 engine_;
    double cached_normal_ = 0.0;
    bool has_cached_normal_ = false;
};

// splitmix64 finalizer; the building block of stream derivation.
std::uint64_t mix64(std::uint64_t x);

// Derives an independent child seed from a root seed and up to three
// component indices (sample, frame, step, ...). Each purpose gets its own
// tag so streams for different uses never collide.
std::uint64_t derive_seed(std::uint64_t root, std::uint64_t tag,
                          std::uint64_t a = 0, std::uint64_t b = 0,
                          std::uint64_t c = 0);

// Stream purpose tags.
namespace seed_tag {
inline constexpr std::uint64_t noise = 0x6e6f697365;        // frame noise draws
inline constexpr std::uint64_t clean_gen = 0x636c65616e;    // procedural clean images
inline constexpr std::uint64_t init = 0x696e6974;           // weight init
inline constexpr std::uint64_t shuffle = 0x7368756666;      // epoch shuffling
inline constexpr std::uint64_t partition = 0x70617274;      // frame partitions
inline constexpr std::uint64_t pair_pick = 0x7069636b;      // per-step pair choice
inline constexpr std::uint64_t split = 0x73706c6974;        // train/val split
}  // namespace seed_tag

}  // namespace opd
