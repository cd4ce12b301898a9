#include "vtnav/ad/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_set>
#include <utility>

namespace vtnav::ad {

std::size_t numel(const Shape& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    return n;
}

namespace {
thread_local bool g_grad_enabled = true;
}

bool grad_enabled() {
    return g_grad_enabled;
}

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) {
    g_grad_enabled = false;
}

NoGradGuard::~NoGradGuard() {
    g_grad_enabled = previous_;
}

std::string to_string(const Shape& shape) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
    os << ']';
    return os.str();
}

template <typename T>
Tensor<T> Tensor<T>::zeros(Shape shape, bool requires_grad) {
    return filled(std::move(shape), T(0), requires_grad);
}

template <typename T>
Tensor<T> Tensor<T>::filled(Shape shape, T value, bool requires_grad) {
    auto n = std::make_shared<Node<T>>();
    n->value.assign(ad::numel(shape), value);
    n->shape = std::move(shape);
    n->requires_grad = requires_grad;
    return Tensor(std::move(n));
}

template <typename T>
Tensor<T> Tensor<T>::from(Shape shape, std::vector<T> values, bool requires_grad) {
    if (ad::numel(shape) != values.size())
        throw ShapeError("tensor of shape " + to_string(shape) + " given " + std::to_string(values.size()) +
                         " values");
    auto n = std::make_shared<Node<T>>();
    n->shape = std::move(shape);
    n->value = std::move(values);
    n->requires_grad = requires_grad;
    return Tensor(std::move(n));
}

template <typename T>
Tensor<T> Tensor<T>::scalar(T value, bool requires_grad) {
    return from(Shape{}, std::vector<T>{value}, requires_grad);
}

template <typename T>
std::size_t Tensor<T>::cols() const {
    return node_->shape.empty() ? 1 : node_->shape.back();
}

template <typename T>
std::size_t Tensor<T>::rows() const {
    const std::size_t c = cols();
    return c == 0 ? 0 : node_->value.size() / c;
}

template <typename T>
std::span<T> Tensor<T>::mutable_values() {
    if (!is_leaf()) throw std::logic_error("mutable_values() on a non-leaf tensor");
    return node_->value;
}

template <typename T>
T Tensor<T>::item() const {
    if (numel() != 1) throw ShapeError("item() on tensor of shape " + to_string(shape()));
    return node_->value[0];
}

template <typename T>
void Tensor<T>::set_requires_grad(bool flag) {
    if (!is_leaf()) throw std::logic_error("set_requires_grad() on a non-leaf tensor");
    node_->requires_grad = flag;
}

template <typename T>
void Tensor<T>::zero_grad() {
    std::fill(node_->grad.begin(), node_->grad.end(), T(0));
}

template <typename T>
bool Tensor<T>::all_finite() const {
    return std::all_of(node_->value.begin(), node_->value.end(), [](T v) { return std::isfinite(v); });
}

template <typename T>
void Tensor<T>::backward() {
    if (numel() != 1) throw ShapeError("backward() without a seed needs a scalar, got " + to_string(shape()));
    const T one = T(1);
    backward(std::span<const T>(&one, 1));
}

template <typename T>
void Tensor<T>::backward(std::span<const T> seed) {
    if (seed.size() != numel()) throw ShapeError("backward seed size mismatch");
    if (!node_->requires_grad) throw std::logic_error("backward() on a tensor that does not require grad");
    if (!all_finite()) throw NumericError("non-finite value at backward root");

    // Iterative post-order DFS gives a topological order (parents before children).
    std::vector<Node<T>*> order;
    std::unordered_set<Node<T>*> seen;
    std::vector<std::pair<Node<T>*, std::size_t>> stack;
    stack.emplace_back(node_.get(), 0);
    seen.insert(node_.get());
    while (!stack.empty()) {
        auto& [n, next] = stack.back();
        if (next < n->parents.size()) {
            Node<T>* p = n->parents[next++].get();
            if (p->requires_grad && seen.insert(p).second) stack.emplace_back(p, 0);
        } else {
            order.push_back(n);
            stack.pop_back();
        }
    }

    auto& g = node_->grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += seed[i];

    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node<T>* n = *it;
        if (n->backward_fn) n->backward_fn(*n);
    }
    for (Node<T>* n : order) {
        if (!n->backward_fn) continue;
        n->backward_fn = nullptr;
        n->parents.clear();
        if (n != node_.get()) std::vector<T>().swap(n->grad);
    }
}

template <typename T>
Tensor<T> Tensor<T>::detach() const {
    return from(node_->shape, node_->value, false);
}

template class Tensor<float>;
template class Tensor<double>;

}  // namespace vtnav::ad
