#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "vtnav/ad/tensor.hpp"
#include "vtnav/util/random.hpp"

namespace vtnav::ad {

// Named, ordered collection of trainable leaves. Registration order is stable and
// defines iteration order for optimizers and checkpoints.
template <typename T>
class ParameterSet {
public:
    struct Entry {
        std::string name;
        Tensor<T> tensor;
    };

    Tensor<T> add(const std::string& name, Shape shape);
    // uniform(-1/sqrt(fan_in), +1/sqrt(fan_in))
    Tensor<T> add_uniform(const std::string& name, Shape shape, std::size_t fan_in, Rng& rng);
    Tensor<T> add_constant(const std::string& name, Shape shape, T value);

    bool contains(const std::string& name) const { return index_.count(name) != 0; }
    const Tensor<T>& get(const std::string& name) const;
    Tensor<T>& get(const std::string& name);

    const std::vector<Entry>& entries() const { return entries_; }
    std::vector<Entry>& entries() { return entries_; }
    std::size_t size() const { return entries_.size(); }
    std::size_t scalar_count() const;

    void zero_grad();
    // Copies values (not graph) from a set with identical names and shapes.
    template <typename U>
    void copy_values_from(const ParameterSet<U>& other);

private:
    std::vector<Entry> entries_;
    std::map<std::string, std::size_t> index_;
};

template <typename T>
template <typename U>
void ParameterSet<T>::copy_values_from(const ParameterSet<U>& other) {
    for (auto& e : entries_) {
        const auto& src = other.get(e.name);
        if (src.shape() != e.tensor.shape()) throw ShapeError("parameter shape mismatch for " + e.name);
        auto dst = e.tensor.mutable_values();
        auto sv = src.values();
        for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = static_cast<T>(sv[i]);
    }
}

extern template class ParameterSet<float>;
extern template class ParameterSet<double>;

}  // namespace vtnav::ad
