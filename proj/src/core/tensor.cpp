#include "core/tensor.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace opd {

std::string shape_str(const Shape& s) {
    std::ostringstream os;
    os << "(";
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i) os << "x";
        os << s[i];
    }
    os << ")";
    return os.str();
}

std::int64_t shape_numel(const Shape& s) {
    std::int64_t n = 1;
    for (int e : s) n *= e;
    return n;
}

namespace {
void check_shape(const Shape& s) {
    if (s.empty()) throw std::invalid_argument("tensor shape must not be empty");
    for (int e : s) {
        if (e <= 0) {
            throw std::invalid_argument("tensor extents must be positive, got " + shape_str(s));
        }
    }
}
}  // namespace

template <typename T>
Tensor<T>::Tensor(Shape shape, T fill) : d_(std::make_shared<TensorData<T>>()) {
    check_shape(shape);
    d_->shape = std::move(shape);
    d_->values.assign(static_cast<std::size_t>(shape_numel(d_->shape)), fill);
}

template <typename T>
Tensor<T>::Tensor(Shape shape, std::vector<T> values) : d_(std::make_shared<TensorData<T>>()) {
    check_shape(shape);
    if (shape_numel(shape) != static_cast<std::int64_t>(values.size())) {
        throw std::invalid_argument("value count " + std::to_string(values.size()) +
                                    " does not match shape " + shape_str(shape));
    }
    d_->shape = std::move(shape);
    d_->values = std::move(values);
}

template <typename T>
std::vector<T>& Tensor<T>::grad() {
    if (d_->grad.empty()) d_->grad.assign(d_->values.size(), T(0));
    return d_->grad;
}

template <typename T>
const std::vector<T>& Tensor<T>::grad() const {
    if (d_->grad.empty()) throw std::logic_error("gradient not populated");
    return d_->grad;
}

template <typename T>
void Tensor<T>::zero_grad() {
    d_->grad.assign(d_->values.size(), T(0));
}

template <typename T>
std::int64_t Tensor<T>::index4(int b, int c, int y, int x) const {
    const Shape& s = d_->shape;
    if (s.size() != 4) throw std::logic_error("index4 on tensor of rank " + std::to_string(s.size()));
    return ((static_cast<std::int64_t>(b) * s[2] + y) * s[3] + x) * s[1] + c;
}

template <typename T>
T Tensor<T>::scalar_value() const {
    if (numel() != 1) {
        throw std::invalid_argument("expected a scalar tensor, got shape " + shape_str(d_->shape));
    }
    return d_->values[0];
}

template <typename T>
Tensor<T> Tensor<T>::clone_detached() const {
    return Tensor<T>(d_->shape, d_->values);
}

template <typename T>
bool Tensor<T>::all_finite() const {
    for (T v : d_->values) {
        if (!std::isfinite(static_cast<double>(v))) return false;
    }
    return true;
}

template <typename T>
void Tape<T>::record(std::function<void()> backward_step, Tensor<T> node_output) {
    node_output.set_producer_tape(this);
    steps_.push_back(std::move(backward_step));
    node_outputs_.push_back(std::move(node_output));
}

template <typename T>
void Tape<T>::clear() {
    steps_.clear();
    node_outputs_.clear();
}

template <typename T>
void Tape<T>::run_backward(const Tensor<T>& loss) {
    if (loss.numel() != 1) {
        throw std::invalid_argument("backward requires a scalar loss, got shape " +
                                    shape_str(loss.shape()));
    }
    if (loss.producer_tape() != this) {
        throw std::invalid_argument("loss was not produced through this tape");
    }
    // Node (non-leaf) grads are scratch state: reset them so each backward
    // pass contributes exactly one gradient unit to the leaves.
    for (auto& t : node_outputs_) t.zero_grad();
    const_cast<Tensor<T>&>(loss).grad()[0] = T(1);
    for (auto it = steps_.rbegin(); it != steps_.rend(); ++it) (*it)();
}

template struct TensorData<float>;
template struct TensorData<double>;
template class Tensor<float>;
template class Tensor<double>;
template class Tape<float>;
template class Tape<double>;

}  // namespace opd
