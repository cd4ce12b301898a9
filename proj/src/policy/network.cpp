#include "vtnav/policy/network.hpp"

#include <algorithm>
#include <cmath>

namespace vtnav::policy {

template <typename T>
PolicyState<T> PolicyState<T>::zeros() {
    return {ad::Tensor<T>::zeros({1, kHiddenWidth}), ad::Tensor<T>::zeros({1, kHiddenWidth})};
}

double ActionDistribution::entropy() const {
    double h = 0.0;
    for (double p : probs)
        if (p > 0.0) h -= p * std::log(p);
    return h;
}

bool ActionDistribution::valid(double tol) const {
    double total = 0.0;
    for (double p : probs) {
        if (!std::isfinite(p) || p < 0.0) return false;
        total += p;
    }
    return std::abs(total - 1.0) <= tol;
}

template <typename T>
ActionDistribution PolicyOutput<T>::distribution() const {
    const auto v = logits.values();
    const double mx = *std::max_element(v.begin(), v.end());
    ActionDistribution d;
    double total = 0.0;
    for (std::size_t i = 0; i < d.probs.size(); ++i) total += d.probs[i] = std::exp(static_cast<double>(v[i]) - mx);
    for (double& p : d.probs) p /= total;
    return d;
}

template <typename T>
LSTMCell<T>::LSTMCell(ad::ParameterSet<T>& params, const std::string& name, std::size_t in, std::size_t width_,
                      Rng& rng)
    : gates(params, name + ".gates", in + width_, 4 * width_, rng), width(width_) {}

template <typename T>
PolicyState<T> LSTMCell<T>::operator()(const ad::Tensor<T>& x, const PolicyState<T>& state) const {
    const auto g = gates(ad::concat_cols<T>({x, state.hidden}));
    const auto input = ad::sigmoid(ad::slice_cols(g, 0, width));
    const auto forget = ad::sigmoid(ad::slice_cols(g, width, width));
    const auto candidate = ad::tanh(ad::slice_cols(g, 2 * width, width));
    const auto output = ad::sigmoid(ad::slice_cols(g, 3 * width, width));
    const auto cell = ad::add(ad::mul(forget, state.cell), ad::mul(input, candidate));
    return {ad::mul(output, ad::tanh(cell)), cell};
}

template <typename T>
PolicyHead<T>::PolicyHead(ad::ParameterSet<T>& params, std::size_t representation_width, Rng& rng,
                          const std::string& prefix)
    : project(params, prefix + "project", representation_width, kHiddenWidth, rng),
      action_embedding(params.add_uniform(prefix + "action_embedding", {static_cast<std::size_t>(env::kNumActions), kActionEmbeddingWidth}, 1, rng)),
      recurrent(params, prefix + "lstm", kHiddenWidth + kActionEmbeddingWidth, kHiddenWidth, rng),
      actor(params, prefix + "actor", kHiddenWidth, env::kNumActions, rng),
      critic(params, prefix + "critic", kHiddenWidth, 1, rng) {}

template <typename T>
PolicyOutput<T> PolicyHead<T>::operator()(const ad::Tensor<T>& representation, std::optional<env::Action> previous,
                                          const PolicyState<T>& state) const {
    const auto visual = project(ad::mean_rows(representation));
    const auto action = previous ? ad::slice_rows(action_embedding, static_cast<std::size_t>(env::index_of(*previous)), 1)
                                 : ad::Tensor<T>::zeros({1, kActionEmbeddingWidth});
    auto next = recurrent(ad::concat_cols<T>({visual, action}), state);
    return {actor(next.hidden), critic(next.hidden), next};
}

std::string to_string(Variant v) {
    return v == Variant::VTNet ? "vtnet" : "baseline";
}

std::optional<Variant> parse_variant(const std::string& s) {
    if (s == "vtnet") return Variant::VTNet;
    if (s == "baseline") return Variant::Baseline;
    return std::nullopt;
}

template <typename T>
ActorCritic<T>::ActorCritic(Variant variant, const model::VTConfig& config, ad::ParameterSet<T>& params, Rng& rng)
    : variant_(variant), config_(config) {
    config_.validate();
    std::size_t width = 0;
    if (variant == Variant::VTNet) {
        vt_ = std::make_unique<model::VisualTransformer<T>>(config_, params, rng);
        width = config_.d_model;
    } else {
        global_reduce_ = std::make_unique<Linear<T>>(params, "baseline.global_reduce", config_.global_channels,
                                                     kBaselineGlobalChannels, rng);
        width = config_.local_input_width() + config_.positions() * kBaselineGlobalChannels;
    }
    head_ = std::make_unique<PolicyHead<T>>(params, width, rng);
}

template <typename T>
ad::Tensor<T> ActorCritic<T>::represent(const perception::Observation& obs, int target_class) const {
    if (vt_) return vt_->forward(obs, target_class);
    const auto local = ad::mean_rows(model::local_inputs<T>(obs.detections, target_class, config_, false).rows);
    const auto global = (*global_reduce_)(model::global_input<T>(obs.global, config_));
    return ad::concat_cols<T>({local, ad::reshape(global, {1, global.numel()})});
}

template <typename T>
PolicyOutput<T> ActorCritic<T>::step(const perception::Observation& obs, int target_class,
                                     std::optional<env::Action> previous, const PolicyState<T>& state) const {
    return (*head_)(represent(obs, target_class), previous, state);
}

env::Action select_action(const ActionDistribution& dist, SelectMode mode, Rng& rng) {
    if (mode == SelectMode::Argmax)
        return env::kAllActions[static_cast<std::size_t>(std::max_element(dist.probs.begin(), dist.probs.end()) -
                                                         dist.probs.begin())];
    const double u = uniform01(rng);
    double acc = 0.0;
    for (std::size_t i = 0; i < dist.probs.size(); ++i) {
        acc += dist.probs[i];
        if (u < acc) return env::kAllActions[i];
    }
    for (std::size_t i = dist.probs.size(); i-- > 0;)
        if (dist.probs[i] > 0.0) return env::kAllActions[i];
    return env::kAllActions.back();
}

template struct PolicyState<float>;
template struct PolicyState<double>;
template struct PolicyOutput<float>;
template struct PolicyOutput<double>;
template struct LSTMCell<float>;
template struct LSTMCell<double>;
template struct PolicyHead<float>;
template struct PolicyHead<double>;
template class ActorCritic<float>;
template class ActorCritic<double>;

}  // namespace vtnav::policy
