#pragma once

#include "core/ops.hpp"
#include "core/tensor.hpp"

#include <vector>

namespace opd {

// Training objectives. The squared L2 norm is realized everywhere as the
// per-element mean (mean_squared_diff), so loss magnitudes do not depend
// on image size; all identities between the loss forms hold because both
// sides are built from that one primitive.

template <typename T>
struct LossBreakdown {
    Tensor<T> total;     // == mse_term - msa_term by construction
    Tensor<T> mse_term;
    Tensor<T> msa_term;
};

// Mean squared difference between one prediction and one label (used by
// the noisy-to-clean and pairwise noisy-to-noisy objectives).
template <typename T>
Tensor<T> pairwise_l2(Tape<T>& tape, const Tensor<T>& pred, const Tensor<T>& label);

// || mean_j(outputs) - clean_est ||^2.
template <typename T>
Tensor<T> opd_clean_loss(Tape<T>& tape, const std::vector<Tensor<T>>& outputs,
                         const Tensor<T>& clean_est);

// Algebraic split of opd_clean_loss:
//   mse = (1/m)   sum_j ||y_j - clean||^2
//   msa = (1/m^2) sum_{j<k} ||y_j - y_k||^2
// total = mse - msa equals opd_clean_loss on the same inputs.
template <typename T>
LossBreakdown<T> opd_clean_decomposed(Tape<T>& tape, const std::vector<Tensor<T>>& outputs,
                                      const Tensor<T>& clean_est);

// (1/(m(m-1))) sum over ordered pairs j != k of ||y_j - frame_k||^2.
// Frames are labels: they must not require grad.
template <typename T>
Tensor<T> mse_noisy(Tape<T>& tape, const std::vector<Tensor<T>>& outputs,
                    const std::vector<Tensor<T>>& frames);

// Mean square alienation: (1/m^2) sum_{j<k} ||y_j - y_k||^2.
template <typename T>
Tensor<T> msa(Tape<T>& tape, const std::vector<Tensor<T>>& outputs);

// The mutual-supervision objective: mse_noisy - msa. May be negative on
// particular batches; callers must not assume nonnegativity.
template <typename T>
LossBreakdown<T> opd_loss(Tape<T>& tape, const std::vector<Tensor<T>>& outputs,
                          const std::vector<Tensor<T>>& frames);

#define OPD_EXTERN_LOSSES(T)                                                               \
    extern template Tensor<T> pairwise_l2<T>(Tape<T>&, const Tensor<T>&, const Tensor<T>&); \
    extern template Tensor<T> opd_clean_loss<T>(Tape<T>&, const std::vector<Tensor<T>>&,   \
                                                const Tensor<T>&);                         \
    extern template LossBreakdown<T> opd_clean_decomposed<T>(                              \
        Tape<T>&, const std::vector<Tensor<T>>&, const Tensor<T>&);                        \
    extern template Tensor<T> mse_noisy<T>(Tape<T>&, const std::vector<Tensor<T>>&,        \
                                           const std::vector<Tensor<T>>&);                 \
    extern template Tensor<T> msa<T>(Tape<T>&, const std::vector<Tensor<T>>&);             \
    extern template LossBreakdown<T> opd_loss<T>(Tape<T>&, const std::vector<Tensor<T>>&,  \
                                                 const std::vector<Tensor<T>>&);

OPD_EXTERN_LOSSES(float)
OPD_EXTERN_LOSSES(double)
#undef OPD_EXTERN_LOSSES

}  // namespace opd
