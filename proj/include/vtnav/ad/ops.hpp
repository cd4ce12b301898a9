#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "vtnav/ad/tensor.hpp"

// Differentiable primitives. All ops view tensors as 2-D (rows x last dim).
// Broadcasting is limited to a row vector ([c] or [1, c]) against a [r, c] operand.
namespace vtnav::ad {

template <typename T> Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> scale(const Tensor<T>& x, T factor);

template <typename T> Tensor<T> relu(const Tensor<T>& x);
template <typename T> Tensor<T> tanh(const Tensor<T>& x);
template <typename T> Tensor<T> sigmoid(const Tensor<T>& x);
template <typename T> Tensor<T> exp(const Tensor<T>& x);
template <typename T> Tensor<T> log(const Tensor<T>& x);

template <typename T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gain, const Tensor<T>& bias, T eps = T(1e-5));

template <typename T> Tensor<T> softmax_rows(const Tensor<T>& x);
template <typename T> Tensor<T> log_softmax_rows(const Tensor<T>& x);
// Mean over the batch of -log softmax(logits)[label].
template <typename T> Tensor<T> cross_entropy(const Tensor<T>& logits, std::span<const int> labels);
// out[r, 0] = x[r, index[r]]
template <typename T> Tensor<T> pick(const Tensor<T>& x, std::span<const int> index);

template <typename T> Tensor<T> concat_cols(const std::vector<Tensor<T>>& parts);
template <typename T> Tensor<T> concat_rows(const std::vector<Tensor<T>>& parts);
template <typename T> Tensor<T> slice_cols(const Tensor<T>& x, std::size_t start, std::size_t count);
template <typename T> Tensor<T> slice_rows(const Tensor<T>& x, std::size_t start, std::size_t count);
template <typename T> Tensor<T> reshape(const Tensor<T>& x, Shape shape);
template <typename T> Tensor<T> transpose(const Tensor<T>& x);

template <typename T> Tensor<T> sum(const Tensor<T>& x);
template <typename T> Tensor<T> mean(const Tensor<T>& x);
// [r, c] -> [1, c]
template <typename T> Tensor<T> mean_rows(const Tensor<T>& x);
template <typename T> Tensor<T> sum_rows(const Tensor<T>& x);

}  // namespace vtnav::ad
