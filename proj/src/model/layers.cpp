#include "vtnav/model/layers.hpp"

#include <cmath>

namespace vtnav::model {

template <typename T>
Linear<T>::Linear(ParameterSet<T>& params, const std::string& name, std::size_t in, std::size_t out, Rng& rng)
    : weight(params.add_uniform(name + ".weight", {in, out}, in, rng)),
      bias(params.add_uniform(name + ".bias", {out}, in, rng)) {}

template <typename T>
Tensor<T> Linear<T>::operator()(const Tensor<T>& x) const {
    return ad::add(ad::matmul(x, weight), bias);
}

template <typename T>
LayerNorm<T>::LayerNorm(ParameterSet<T>& params, const std::string& name, std::size_t width)
    : gain(params.add_constant(name + ".gain", {width}, T(1))), bias(params.add_constant(name + ".bias", {width}, T(0))) {}

template <typename T>
Tensor<T> LayerNorm<T>::operator()(const Tensor<T>& x) const {
    return ad::layer_norm(x, gain, bias);
}

template <typename T>
FeedForward<T>::FeedForward(ParameterSet<T>& params, const std::string& name, std::size_t width, std::size_t hidden,
                            Rng& rng)
    : expand(params, name + ".expand", width, hidden, rng), contract(params, name + ".contract", hidden, width, rng) {}

template <typename T>
Tensor<T> FeedForward<T>::operator()(const Tensor<T>& x) const {
    return contract(ad::relu(expand(x)));
}

template <typename T>
Tensor<T> scaled_dot_attention(const Tensor<T>& q, const Tensor<T>& k, const Tensor<T>& v,
                               const std::optional<Tensor<T>>& log_mult, Tensor<T>* weights_out) {
    const T inv_sqrt = T(1) / std::sqrt(static_cast<T>(q.cols()));
    auto scores = ad::scale(ad::matmul(q, ad::transpose(k)), inv_sqrt);
    if (log_mult) scores = ad::add(scores, *log_mult);
    auto weights = ad::softmax_rows(scores);
    if (weights_out) *weights_out = weights;
    return ad::matmul(weights, v);
}

template <typename T>
MultiHeadAttention<T>::MultiHeadAttention(ParameterSet<T>& params, const std::string& name, std::size_t width,
                                          std::size_t heads_, Rng& rng)
    : heads(heads_),
      query(params, name + ".query", width, width, rng),
      key(params, name + ".key", width, width, rng),
      value(params, name + ".value", width, width, rng),
      output(params, name + ".output", width, width, rng) {
    if (heads == 0 || width % heads != 0) throw ad::ShapeError("attention width must be divisible by heads");
}

template <typename T>
Tensor<T> MultiHeadAttention<T>::operator()(const Tensor<T>& queries, const Tensor<T>& keys_values,
                                            const std::optional<Tensor<T>>& log_mult, AttentionCapture* capture,
                                            const std::string& label) const {
    const auto q = query(queries);
    const auto k = key(keys_values);
    const auto v = value(keys_values);
    const std::size_t dh = q.cols() / heads;
    std::vector<Tensor<T>> outs;
    outs.reserve(heads);
    for (std::size_t h = 0; h < heads; ++h) {
        Tensor<T> w;
        const bool whole = heads == 1;
        outs.push_back(scaled_dot_attention(whole ? q : ad::slice_cols(q, h * dh, dh),
                                            whole ? k : ad::slice_cols(k, h * dh, dh),
                                            whole ? v : ad::slice_cols(v, h * dh, dh), log_mult,
                                            capture ? &w : nullptr));
        if (capture) {
            AttentionMap m;
            m.layer = label;
            m.head = static_cast<int>(h);
            m.rows = w.rows();
            m.cols = w.cols();
            m.weights.assign(w.values().begin(), w.values().end());
            if (log_mult)
                for (T lm : log_mult->values()) m.key_multiplicity.push_back(std::exp(static_cast<double>(lm)));
            capture->maps.push_back(std::move(m));
        }
    }
    return output(heads == 1 ? outs[0] : ad::concat_cols(outs));
}

template struct Linear<float>;
template struct Linear<double>;
template struct LayerNorm<float>;
template struct LayerNorm<double>;
template struct FeedForward<float>;
template struct FeedForward<double>;
template struct MultiHeadAttention<float>;
template struct MultiHeadAttention<double>;
template Tensor<float> scaled_dot_attention(const Tensor<float>&, const Tensor<float>&, const Tensor<float>&,
                                            const std::optional<Tensor<float>>&, Tensor<float>*);
template Tensor<double> scaled_dot_attention(const Tensor<double>&, const Tensor<double>&, const Tensor<double>&,
                                             const std::optional<Tensor<double>>&, Tensor<double>*);

}  // namespace vtnav::model
