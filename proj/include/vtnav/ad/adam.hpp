#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "vtnav/ad/parameters.hpp"

namespace vtnav::ad {

struct AdamHyper {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// First/second moments of one parameter tensor, stored at parameter precision.
template <typename T>
struct AdamMoments {
    std::vector<T> m;
    std::vector<T> v;
    std::uint64_t t = 0;
};

// One bias-corrected Adam update of `param` in place; increments moments.t.
template <typename T>
void adam_update(std::span<T> param, std::span<const T> grad, AdamMoments<T>& moments, const AdamHyper& hyper,
                 double lr);

// Adam over a ParameterSet. The learning rate may vary per parameter name.
template <typename T>
class Adam {
public:
    using LrRule = std::function<double(const std::string& name)>;

    Adam(const ParameterSet<T>& params, AdamHyper hyper, LrRule lr_rule = {});

    // Applies one update from the gradients currently stored on the parameters.
    // Parameters without a gradient buffer are treated as having zero gradient.
    void step(ParameterSet<T>& params);

    std::uint64_t steps() const { return t_; }
    const AdamHyper& hyper() const { return hyper_; }
    const std::vector<AdamMoments<T>>& moments() const { return moments_; }

private:
    AdamHyper hyper_;
    LrRule lr_rule_;
    std::vector<std::string> names_;
    std::vector<AdamMoments<T>> moments_;
    std::uint64_t t_ = 0;
};

extern template class Adam<float>;
extern template class Adam<double>;

}  // namespace vtnav::ad
