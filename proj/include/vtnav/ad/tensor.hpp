#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace vtnav::ad {

using Shape = std::vector<std::size_t>;

struct ShapeError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct IndexError : std::out_of_range {
    using std::out_of_range::out_of_range;
};
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::size_t numel(const Shape& shape);

// While a guard is alive on this thread, ops record no graph (inference mode).
bool grad_enabled();
class NoGradGuard {
public:
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

private:
    bool previous_;
};
std::string to_string(const Shape& shape);

template <typename T>
struct Node {
    Shape shape;
    std::vector<T> value;
    std::vector<T> grad;  // lazily allocated
    bool requires_grad = false;
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void(Node&)> backward_fn;

    std::vector<T>& grad_buffer() {
        if (grad.empty()) grad.assign(value.size(), T(0));
        return grad;
    }
};

// Handle to a node of the recorded operation graph. Copies share the node.
// Values of a non-leaf tensor never change once the op that produced it returns.
template <typename T>
class Tensor {
public:
    using value_type = T;

    Tensor() = default;
    explicit Tensor(std::shared_ptr<Node<T>> node) : node_(std::move(node)) {}

    static Tensor zeros(Shape shape, bool requires_grad = false);
    static Tensor filled(Shape shape, T value, bool requires_grad = false);
    static Tensor from(Shape shape, std::vector<T> values, bool requires_grad = false);
    static Tensor scalar(T value, bool requires_grad = false);

    bool defined() const { return node_ != nullptr; }
    const Shape& shape() const { return node_->shape; }
    std::size_t rank() const { return node_->shape.size(); }
    std::size_t numel() const { return node_->value.size(); }
    // 2-D view used by every op: the last dimension is columns, the rest fold into rows.
    std::size_t cols() const;
    std::size_t rows() const;

    std::span<const T> values() const { return node_->value; }
    // Mutable access is for leaves only (parameters, inputs).
    std::span<T> mutable_values();
    T item() const;
    T at(std::size_t r, std::size_t c) const { return node_->value[r * cols() + c]; }

    bool requires_grad() const { return node_->requires_grad; }
    void set_requires_grad(bool flag);
    bool has_grad() const { return !node_->grad.empty(); }
    std::span<const T> grad() const { return node_->grad; }
    std::span<T> mutable_grad() { return node_->grad_buffer(); }
    void zero_grad();

    bool is_leaf() const { return !node_->backward_fn; }
    bool all_finite() const;

    // Reverse-mode sweep from this tensor; seeds d(this)/d(this) = 1, so it must be a scalar.
    // The recorded graph below this node is released afterwards.
    void backward();
    // Same, seeded with an explicit upstream gradient.
    void backward(std::span<const T> seed);

    // New leaf sharing no graph with this tensor.
    Tensor detach() const;

    Node<T>& node() const { return *node_; }
    const std::shared_ptr<Node<T>>& node_ptr() const { return node_; }

private:
    std::shared_ptr<Node<T>> node_;
};

extern template class Tensor<float>;
extern template class Tensor<double>;

}  // namespace vtnav::ad
