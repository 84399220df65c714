#include "core/gradcheck.hpp"

#include "core/ops.hpp"
#include "core/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace opd {

namespace {

double eval_loss(const std::function<Tensor<double>(Tape<double>&)>& fn) {
    Tape<double> tape;
    tape.set_recording(false);
    const double v = fn(tape).scalar_value();
    if (!std::isfinite(v)) throw std::runtime_error("grad_check: loss is not finite");
    return v;
}

}  // namespace

double grad_check(const std::function<Tensor<double>(Tape<double>&)>& fn,
                  const std::vector<Tensor<double>>& params, double step,
                  std::int64_t max_coords_per_param, std::uint64_t coord_seed) {
    if (step <= 0.0) throw std::invalid_argument("grad_check: step must be positive");

    for (const auto& p : params) const_cast<Tensor<double>&>(p).zero_grad();
    Tape<double> tape;
    Tensor<double> loss = fn(tape);
    if (!std::isfinite(loss.scalar_value())) {
        throw std::runtime_error("grad_check: loss is not finite");
    }
    backward(tape, loss);

    std::vector<std::vector<double>> analytic;
    analytic.reserve(params.size());
    for (const auto& p : params) {
        analytic.push_back(const_cast<Tensor<double>&>(p).grad());
    }

    double worst = 0.0;
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        Tensor<double>& p = const_cast<Tensor<double>&>(params[pi]);
        const std::int64_t n = p.numel();

        std::vector<std::int64_t> coords(n);
        std::iota(coords.begin(), coords.end(), 0);
        if (max_coords_per_param > 0 && n > max_coords_per_param) {
            RngStream rng(derive_seed(coord_seed, 0x67636b, pi));
            for (std::int64_t i = 0; i < max_coords_per_param; ++i) {
                const std::int64_t j =
                    i + static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(n - i)));
                std::swap(coords[i], coords[j]);
            }
            coords.resize(max_coords_per_param);
        }

        for (std::int64_t ci : coords) {
            const double saved = p.values()[ci];
            p.values()[ci] = saved + step;
            const double lp = eval_loss(fn);
            p.values()[ci] = saved - step;
            const double lm = eval_loss(fn);
            p.values()[ci] = saved;
            const double numeric = (lp - lm) / (2.0 * step);
            const double a = analytic[pi][ci];
            const double rel =
                std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-12});
            worst = std::max(worst, rel);
        }
    }
    return worst;
}

}  // namespace opd
