#include "core/losses.hpp"

#include <stdexcept>
#include <string>

namespace opd {

namespace {

template <typename T>
void require_multi_frame(const std::vector<Tensor<T>>& outputs, const char* op) {
    if (outputs.size() < 2) {
        throw std::invalid_argument(std::string(op) + ": needs m >= 2 tensors, got " +
                                    std::to_string(outputs.size()));
    }
    for (const auto& t : outputs) {
        if (t.shape() != outputs[0].shape()) {
            throw std::invalid_argument(std::string(op) + ": shape mismatch " +
                                        shape_str(outputs[0].shape()) + " vs " +
                                        shape_str(t.shape()));
        }
    }
}

}  // namespace

template <typename T>
Tensor<T> pairwise_l2(Tape<T>& tape, const Tensor<T>& pred, const Tensor<T>& label) {
    return mean_squared_diff(tape, pred, label);
}

template <typename T>
Tensor<T> opd_clean_loss(Tape<T>& tape, const std::vector<Tensor<T>>& outputs,
                         const Tensor<T>& clean_est) {
    require_multi_frame(outputs, "opd_clean_loss");
    return mean_squared_diff(tape, mean_stack(tape, outputs), clean_est);
}

template <typename T>
LossBreakdown<T> opd_clean_decomposed(Tape<T>& tape, const std::vector<Tensor<T>>& outputs,
                                      const Tensor<T>& clean_est) {
    require_multi_frame(outputs, "opd_clean_decomposed");
    const int m = static_cast<int>(outputs.size());

    std::vector<Tensor<T>> mse_terms;
    mse_terms.reserve(m);
    for (const auto& y : outputs) mse_terms.push_back(mean_squared_diff(tape, y, clean_est));
    Tensor<T> mse = scale(tape, sum_scalars(tape, mse_terms), T(1) / static_cast<T>(m));

    std::vector<Tensor<T>> msa_terms;
    msa_terms.reserve(m * (m - 1) / 2);
    for (int j = 0; j < m; ++j)
        for (int k = j + 1; k < m; ++k)
            msa_terms.push_back(mean_squared_diff(tape, outputs[j], outputs[k]));
    Tensor<T> msa_v =
        scale(tape, sum_scalars(tape, msa_terms), T(1) / static_cast<T>(m) / static_cast<T>(m));

    Tensor<T> total = add(tape, mse, scale(tape, msa_v, T(-1)));
    return LossBreakdown<T>{total, mse, msa_v};
}

template <typename T>
Tensor<T> mse_noisy(Tape<T>& tape, const std::vector<Tensor<T>>& outputs,
                    const std::vector<Tensor<T>>& frames) {
    require_multi_frame(outputs, "mse_noisy");
    if (frames.size() != outputs.size()) {
        throw std::invalid_argument("mse_noisy: " + std::to_string(outputs.size()) +
                                    " outputs vs " + std::to_string(frames.size()) + " frames");
    }
    for (const auto& f : frames) {
        if (f.shape() != outputs[0].shape()) {
            throw std::invalid_argument("mse_noisy: frame shape " + shape_str(f.shape()) +
                                        " does not match outputs " +
                                        shape_str(outputs[0].shape()));
        }
        if (f.requires_grad()) {
            throw std::invalid_argument("mse_noisy: frames are labels and must not require grad");
        }
    }
    const int m = static_cast<int>(outputs.size());
    std::vector<Tensor<T>> terms;
    terms.reserve(m * (m - 1));
    for (int j = 0; j < m; ++j)
        for (int k = 0; k < m; ++k)
            if (k != j) terms.push_back(mean_squared_diff(tape, outputs[j], frames[k]));
    return scale(tape, sum_scalars(tape, terms),
                 T(1) / (static_cast<T>(m) * static_cast<T>(m - 1)));
}

template <typename T>
Tensor<T> msa(Tape<T>& tape, const std::vector<Tensor<T>>& outputs) {
    require_multi_frame(outputs, "msa");
    const int m = static_cast<int>(outputs.size());
    std::vector<Tensor<T>> terms;
    terms.reserve(m * (m - 1) / 2);
    for (int j = 0; j < m; ++j)
        for (int k = j + 1; k < m; ++k)
            terms.push_back(mean_squared_diff(tape, outputs[j], outputs[k]));
    return scale(tape, sum_scalars(tape, terms),
                 T(1) / static_cast<T>(m) / static_cast<T>(m));
}

template <typename T>
LossBreakdown<T> opd_loss(Tape<T>& tape, const std::vector<Tensor<T>>& outputs,
                          const std::vector<Tensor<T>>& frames) {
    Tensor<T> mse = mse_noisy(tape, outputs, frames);
    Tensor<T> msa_v = msa(tape, outputs);
    Tensor<T> total = add(tape, mse, scale(tape, msa_v, T(-1)));
    return LossBreakdown<T>{total, mse, msa_v};
}

#define OPD_INSTANTIATE_LOSSES(T)                                                          \
    template Tensor<T> pairwise_l2<T>(Tape<T>&, const Tensor<T>&, const Tensor<T>&);       \
    template Tensor<T> opd_clean_loss<T>(Tape<T>&, const std::vector<Tensor<T>>&,          \
                                         const Tensor<T>&);                                \
    template LossBreakdown<T> opd_clean_decomposed<T>(Tape<T>&,                            \
                                                      const std::vector<Tensor<T>>&,       \
                                                      const Tensor<T>&);                   \
    template Tensor<T> mse_noisy<T>(Tape<T>&, const std::vector<Tensor<T>>&,               \
                                    const std::vector<Tensor<T>>&);                        \
    template Tensor<T> msa<T>(Tape<T>&, const std::vector<Tensor<T>>&);                    \
    template LossBreakdown<T> opd_loss<T>(Tape<T>&, const std::vector<Tensor<T>>&,         \
                                          const std::vector<Tensor<T>>&);

OPD_INSTANTIATE_LOSSES(float)
OPD_INSTANTIATE_LOSSES(double)
#undef OPD_INSTANTIATE_LOSSES

}  // namespace opd
