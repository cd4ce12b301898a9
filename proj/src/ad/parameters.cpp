#include "vtnav/ad/parameters.hpp"

#include <cmath>
#include <stdexcept>

namespace vtnav::ad {

template <typename T>
Tensor<T> ParameterSet<T>::add(const std::string& name, Shape shape) {
    return add_constant(name, std::move(shape), T(0));
}

template <typename T>
Tensor<T> ParameterSet<T>::add_constant(const std::string& name, Shape shape, T value) {
    if (contains(name)) throw std::invalid_argument("duplicate parameter name " + name);
    auto t = Tensor<T>::filled(std::move(shape), value, true);
    index_[name] = entries_.size();
    entries_.push_back({name, t});
    return t;
}

template <typename T>
Tensor<T> ParameterSet<T>::add_uniform(const std::string& name, Shape shape, std::size_t fan_in, Rng& rng) {
    auto t = add(name, std::move(shape));
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (T& v : t.mutable_values()) v = static_cast<T>(dist(rng));
    return t;
}

template <typename T>
const Tensor<T>& ParameterSet<T>::get(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw std::out_of_range("unknown parameter " + name);
    return entries_[it->second].tensor;
}

template <typename T>
Tensor<T>& ParameterSet<T>::get(const std::string& name) {
    auto it = index_.find(name);
    if (it == index_.end()) throw std::out_of_range("unknown parameter " + name);
    return entries_[it->second].tensor;
}

template <typename T>
std::size_t ParameterSet<T>::scalar_count() const {
    std::size_t n = 0;
    for (const auto& e : entries_) n += e.tensor.numel();
    return n;
}

template <typename T>
void ParameterSet<T>::zero_grad() {
    for (auto& e : entries_) e.tensor.zero_grad();
}

template class ParameterSet<float>;
template class ParameterSet<double>;

}  // namespace vtnav::ad
