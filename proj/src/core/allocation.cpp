#include "core/allocation.hpp"

#include "core/metrics.hpp"

#include <numeric>
#include <stdexcept>

namespace opd {

const char* strategy_name(Strategy s) {
    switch (s) {
        case Strategy::n2c: return "n2c";
        case Strategy::n2n: return "n2n";
        case Strategy::opd_rc: return "opd_rc";
        case Strategy::opd_al: return "opd_al";
    }
    return "?";
}

Strategy parse_strategy(const std::string& name) {
    std::string n = name;
    for (auto& ch : n) {
        if (ch == '-') ch = '_';
    }
    if (n == "n2c") return Strategy::n2c;
    if (n == "n2n") return Strategy::n2n;
    if (n == "opd_rc") return Strategy::opd_rc;
    if (n == "opd_al") return Strategy::opd_al;
    throw std::invalid_argument("unknown strategy: " + name);
}

Partition random_partition(int m, RngStream& rng) {
    if (m < 2) throw std::invalid_argument("random_partition: m must be >= 2");
    std::vector<int> perm(m);
    std::iota(perm.begin(), perm.end(), 0);
    for (int i = m - 1; i > 0; --i) {  // Fisher-Yates
        const int j = static_cast<int>(rng.below(static_cast<std::uint64_t>(i) + 1));
        std::swap(perm[i], perm[j]);
    }
    const int half = m / 2;
    Partition p;
    p.J.assign(perm.begin(), perm.begin() + half);
    p.K.assign(perm.begin() + half, perm.begin() + 2 * half);
    if (m % 2 == 1) p.discarded = perm[m - 1];
    return p;
}

Partition opd_rc_step_plan(int m, std::uint64_t train_seed, std::int64_t sample_index,
                           std::int64_t step) {
    RngStream rng(derive_seed(train_seed, seed_tag::partition,
                              static_cast<std::uint64_t>(sample_index),
                              static_cast<std::uint64_t>(step)));
    return random_partition(m, rng);
}

N2nStaticPlan::N2nStaticPlan(int sample_count, int m, std::uint64_t master_seed) {
    partitions_.reserve(sample_count);
    for (int i = 0; i < sample_count; ++i) {
        RngStream rng(derive_seed(master_seed, seed_tag::partition,
                                  static_cast<std::uint64_t>(i), 0x6e326e));
        partitions_.push_back(random_partition(m, rng));
    }
}

const Partition& N2nStaticPlan::partition_for(int sample_index) const {
    return partitions_.at(static_cast<std::size_t>(sample_index));
}

std::vector<Tensor<float>> n2c_plan(const std::vector<FrameStack>& stacks) {
    std::vector<Tensor<float>> targets;
    targets.reserve(stacks.size());
    for (const auto& s : stacks) {
        if (s.frame_count() < 2) {
            throw std::invalid_argument("n2c_plan: stacks need m >= 2 frames");
        }
        targets.push_back(aar(s.frames));
    }
    return targets;
}

double CoverageTable::input_rate(int j) const {
    std::int64_t total = 0;
    for (int k = 0; k < m; ++k) total += count(j, k);
    return static_cast<double>(total) / static_cast<double>(steps);
}

CoverageTable pairing_coverage(const std::function<Partition(std::int64_t)>& plan_at_step,
                               std::int64_t steps, int m) {
    if (steps < 1) throw std::invalid_argument("pairing_coverage: steps must be >= 1");
    CoverageTable table;
    table.m = m;
    table.steps = steps;
    table.counts.assign(static_cast<std::size_t>(m) * m, 0);
    for (std::int64_t s = 0; s < steps; ++s) {
        const Partition p = plan_at_step(s);
        for (int t = 0; t < p.pair_count(); ++t) {
            table.counts[static_cast<std::size_t>(p.J[t]) * m + p.K[t]] += 1;
        }
    }
    return table;
}

}  // namespace opd
