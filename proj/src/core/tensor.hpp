#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace opd {

using Shape = std::vector<int>;

std::string shape_str(const Shape& s);
std::int64_t shape_numel(const Shape& s);

// Dense tensor over float (training) or double (verification).
//
// Logical shapes follow the batch x channels x height x width convention.
// Storage puts channels innermost: a 4-d tensor (d0,d1,d2,d3) is laid out
// as (d0,d2,d3,d1); every other rank is plain row-major. Code outside the
// conv/shape kernels goes through at()/index() and never needs to know.
template <typename T>
struct TensorData {
    Shape shape;
    std::vector<T> values;
    std::vector<T> grad;  // empty until touched by backward
    bool requires_grad = false;
    const void* tape = nullptr;  // tape that produced this tensor, if any
};

template <typename T>
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(Shape shape, T fill = T(0));
    Tensor(Shape shape, std::vector<T> values);

    static Tensor scalar(T v) { return Tensor(Shape{1}, std::vector<T>{v}); }

    bool valid() const { return static_cast<bool>(d_); }
    const Shape& shape() const { return d_->shape; }
    int dim(int i) const { return d_->shape[i]; }
    int rank() const { return static_cast<int>(d_->shape.size()); }
    std::int64_t numel() const { return static_cast<std::int64_t>(d_->values.size()); }

    std::vector<T>& values() { return d_->values; }
    const std::vector<T>& values() const { return d_->values; }
    T* data() { return d_->values.data(); }
    const T* data() const { return d_->values.data(); }

    bool requires_grad() const { return d_->requires_grad; }
    void set_requires_grad(bool b) { d_->requires_grad = b; }

    bool has_grad() const { return !d_->grad.empty(); }
    std::vector<T>& grad();              // allocates zeros on first use
    const std::vector<T>& grad() const;  // requires has_grad()
    T* grad_data() { return grad().data(); }
    void zero_grad();

    const void* producer_tape() const { return d_->tape; }
    void set_producer_tape(const void* t) { d_->tape = t; }

    // Flat storage index of logical 4-d position (b, c, y, x).
    std::int64_t index4(int b, int c, int y, int x) const;
    T& at4(int b, int c, int y, int x) { return d_->values[index4(b, c, y, x)]; }
    T at4(int b, int c, int y, int x) const { return d_->values[index4(b, c, y, x)]; }

    T scalar_value() const;

    // Deep copy of values/shape; grad and tape links are not copied.
    Tensor clone_detached() const;

    bool all_finite() const;

    bool same_data(const Tensor& o) const { return d_ == o.d_; }

private:
    std::shared_ptr<TensorData<T>> d_;
};

// Ordered record of executed operations. Backward replays the record in
// exact reverse execution order. Leaf gradients accumulate across
// backward() calls; call zero_grad on the leaves (or Tape::clear and
// rebuild) to reset them.
template <typename T>
class Tape {
public:
    void record(std::function<void()> backward_step, Tensor<T> node_output);
    bool recording_enabled() const { return enabled_; }
    void set_recording(bool b) { enabled_ = b; }

    std::size_t size() const { return steps_.size(); }
    void clear();

    // Populates d(loss)/d(leaf) for every requires_grad leaf reachable from
    // loss. loss must be a scalar produced through this tape.
    void run_backward(const Tensor<T>& loss);

private:
    std::vector<std::function<void()>> steps_;
    std::vector<Tensor<T>> node_outputs_;
    bool enabled_ = true;
};

using TensorF = Tensor<float>;
using TensorD = Tensor<double>;

extern template struct TensorData<float>;
extern template struct TensorData<double>;
extern template class Tensor<float>;
extern template class Tensor<double>;
extern template class Tape<float>;
extern template class Tape<double>;

}  // namespace opd
