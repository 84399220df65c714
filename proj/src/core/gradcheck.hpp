#pragma once

#include "core/tensor.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace opd {

// Compares analytic gradients against central finite differences
// (f(v+h) - f(v-h)) / (2h) and returns the worst relative error
// |a - n| / max(|a|, |n|, 1e-12) over all checked coordinates.
//
// fn must rebuild the loss from the current parameter values on every
// call and be deterministic. Coordinates sitting exactly on a relu kink
// are the caller's responsibility to avoid (keep inputs away from zero).
//
// max_coords_per_param = 0 checks every coordinate; a positive value
// checks a deterministic random subset of that size per parameter,
// which keeps full-model checks inside a sane time budget.
double grad_check(const std::function<Tensor<double>(Tape<double>&)>& fn,
                  const std::vector<Tensor<double>>& params, double step,
                  std::int64_t max_coords_per_param = 0, std::uint64_t coord_seed = 0);

}  // namespace opd
