#include "vtnav/ad/adam.hpp"

#include <cmath>

namespace vtnav::ad {

template <typename T>
void adam_update(std::span<T> param, std::span<const T> grad, AdamMoments<T>& mo, const AdamHyper& h, double lr) {
    if (mo.m.empty()) {
        mo.m.assign(param.size(), T(0));
        mo.v.assign(param.size(), T(0));
    }
    if (mo.m.size() != param.size()) throw ShapeError("adam: moment size does not match parameter");
    if (!grad.empty() && grad.size() != param.size()) throw ShapeError("adam: gradient size does not match parameter");
    bool finite = true;
    for (const T g : grad) finite &= std::isfinite(g);
    if (!finite) throw NumericError("adam: non-finite gradient");
    ++mo.t;
    const auto step = static_cast<T>(lr / (1.0 - std::pow(h.beta1, static_cast<double>(mo.t))));
    const auto inv_c2 = static_cast<T>(1.0 / (1.0 - std::pow(h.beta2, static_cast<double>(mo.t))));
    const auto b1 = static_cast<T>(h.beta1), b2 = static_cast<T>(h.beta2), eps = static_cast<T>(h.eps);
    T* m = mo.m.data();
    T* v = mo.v.data();
    T* p = param.data();
    for (std::size_t i = 0; i < param.size(); ++i) {
        const T g = grad.empty() ? T(0) : grad[i];
        m[i] = b1 * m[i] + (T(1) - b1) * g;
        v[i] = b2 * v[i] + (T(1) - b2) * g * g;
        p[i] -= step * m[i] / (std::sqrt(v[i] * inv_c2) + eps);
    }
}

template <typename T>
Adam<T>::Adam(const ParameterSet<T>& params, AdamHyper hyper, LrRule lr_rule)
    : hyper_(hyper), lr_rule_(std::move(lr_rule)) {
    for (const auto& e : params.entries()) {
        names_.push_back(e.name);
        moments_.emplace_back();
    }
}

template <typename T>
void Adam<T>::step(ParameterSet<T>& params) {
    if (params.size() != names_.size()) throw ShapeError("adam: parameter set changed since construction");
    ++t_;
    for (std::size_t i = 0; i < names_.size(); ++i) {
        auto& tensor = params.get(names_[i]);
        const double lr = lr_rule_ ? lr_rule_(names_[i]) : hyper_.lr;
        adam_update<T>(tensor.mutable_values(), tensor.grad(), moments_[i], hyper_, lr);
    }
}

template void adam_update<float>(std::span<float>, std::span<const float>, AdamMoments<float>&, const AdamHyper&, double);
template void adam_update<double>(std::span<double>, std::span<const double>, AdamMoments<double>&, const AdamHyper&,
                                  double);
template class Adam<float>;
template class Adam<double>;

}  // namespace vtnav::ad
