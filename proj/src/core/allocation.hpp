#pragma once

#include "core/noise.hpp"
#include "core/rng.hpp"
#include "core/tensor.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace opd {

enum class Strategy { n2c, n2n, opd_rc, opd_al };

const char* strategy_name(Strategy s);
Strategy parse_strategy(const std::string& name);  // accepts "opd-rc" and "opd_rc"

// Disjoint halves of the frame indices [0, m). J[t] couples with K[t].
// For odd m exactly one index is discarded.
struct Partition {
    std::vector<int> J, K;
    int discarded = -1;

    int pair_count() const { return static_cast<int>(J.size()); }
};

// Uniform random partition: a full random permutation split in the
// middle. Every permutation is equally likely, so every ordered couple
// appears with probability (m/2) / (m(m-1)) per draw.
Partition random_partition(int m, RngStream& rng);

// Fresh independent partition for (sample, step). Used every step of the
// random-coupling strategy; the odd-m discard is redrawn each time so no
// frame is permanently silenced.
Partition opd_rc_step_plan(int m, std::uint64_t train_seed, std::int64_t sample_index,
                           std::int64_t step);

// One partition per sample, drawn once and fixed for all of training.
class N2nStaticPlan {
public:
    N2nStaticPlan(int sample_count, int m, std::uint64_t master_seed);
    const Partition& partition_for(int sample_index) const;

private:
    std::vector<Partition> partitions_;
};

// Per-sample target for noisy-to-clean-estimate training: every frame of
// sample i is paired with the frame average of sample i, giving
// N * m pairs per epoch.
std::vector<Tensor<float>> n2c_plan(const std::vector<FrameStack>& stacks);

// Frequency of each ordered couple (input j, label k) over a partition
// stream; the statistical check behind "frames are evenly used".
struct CoverageTable {
    int m = 0;
    std::int64_t steps = 0;
    std::vector<std::int64_t> counts;  // m*m, row = input index

    std::int64_t count(int j, int k) const { return counts[static_cast<std::size_t>(j) * m + k]; }
    // couples observed for (j,k) divided by the number of steps
    double frequency(int j, int k) const {
        return static_cast<double>(count(j, k)) / static_cast<double>(steps);
    }
    // fraction of steps in which frame j served as an input
    double input_rate(int j) const;
};

CoverageTable pairing_coverage(const std::function<Partition(std::int64_t)>& plan_at_step,
                               std::int64_t steps, int m);

}  // namespace opd
