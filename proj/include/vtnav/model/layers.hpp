#pragma once

#include <optional>
#include <string>
#include <vector>

#include "vtnav/ad/ops.hpp"
#include "vtnav/ad/parameters.hpp"

namespace vtnav::model {

using ad::ParameterSet;
using ad::Tensor;

// y = x W + b with W [in, out]. PyTorch-style uniform(+-1/sqrt(in)) init.
template <typename T>
struct Linear {
    Tensor<T> weight;
    Tensor<T> bias;

    Linear() = default;
    Linear(ParameterSet<T>& params, const std::string& name, std::size_t in, std::size_t out, Rng& rng);
    Tensor<T> operator()(const Tensor<T>& x) const;
    std::size_t in() const { return weight.shape()[0]; }
    std::size_t out() const { return weight.shape()[1]; }
};

template <typename T>
struct LayerNorm {
    Tensor<T> gain;
    Tensor<T> bias;

    LayerNorm() = default;
    LayerNorm(ParameterSet<T>& params, const std::string& name, std::size_t width);
    Tensor<T> operator()(const Tensor<T>& x) const;
};

// Position-wise Linear -> ReLU -> Linear.
template <typename T>
struct FeedForward {
    Linear<T> expand;
    Linear<T> contract;

    FeedForward() = default;
    FeedForward(ParameterSet<T>& params, const std::string& name, std::size_t width, std::size_t hidden, Rng& rng);
    Tensor<T> operator()(const Tensor<T>& x) const;
};

// Row-major attention weights for one head of one call.
struct AttentionMap {
    std::string layer;
    int head = 0;
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> weights;
    std::vector<double> key_multiplicity;  // empty when keys are not compacted
};

struct AttentionCapture {
    std::vector<AttentionMap> maps;
};

// softmax(Q K^T / sqrt(d_k) + log_mult) V. `log_mult` is an optional [1, keys] row added
// to every score row; it lets one key row stand for several identical keys.
template <typename T>
Tensor<T> scaled_dot_attention(const Tensor<T>& q, const Tensor<T>& k, const Tensor<T>& v,
                               const std::optional<Tensor<T>>& log_mult = std::nullopt,
                               Tensor<T>* weights_out = nullptr);

template <typename T>
struct MultiHeadAttention {
    std::size_t heads = 1;
    Linear<T> query, key, value, output;

    MultiHeadAttention() = default;
    MultiHeadAttention(ParameterSet<T>& params, const std::string& name, std::size_t width, std::size_t heads,
                       Rng& rng);

    Tensor<T> operator()(const Tensor<T>& queries, const Tensor<T>& keys_values,
                         const std::optional<Tensor<T>>& log_mult = std::nullopt, AttentionCapture* capture = nullptr,
                         const std::string& label = {}) const;
};

extern template struct Linear<float>;
extern template struct Linear<double>;
extern template struct LayerNorm<float>;
extern template struct LayerNorm<double>;
extern template struct FeedForward<float>;
extern template struct FeedForward<double>;
extern template struct MultiHeadAttention<float>;
extern template struct MultiHeadAttention<double>;

}  // namespace vtnav::model
