#include "vtnav/ad/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "vtnav/ad/kernels.hpp"

namespace vtnav::ad {
namespace {

template <typename T, typename Fn>
Tensor<T> record(Shape shape, std::vector<T> value, std::initializer_list<const Tensor<T>*> inputs, Fn&& fn) {
    auto n = std::make_shared<Node<T>>();
    n->shape = std::move(shape);
    n->value = std::move(value);
    bool any = false;
    for (const Tensor<T>* in : inputs) any = any || in->requires_grad();
    if (any && grad_enabled()) {
        n->requires_grad = true;
        for (const Tensor<T>* in : inputs) n->parents.push_back(in->node_ptr());
        n->backward_fn = std::forward<Fn>(fn);
    }
    return Tensor<T>(std::move(n));
}

template <typename T, typename Fn>
Tensor<T> record_many(Shape shape, std::vector<T> value, const std::vector<Tensor<T>>& inputs, Fn&& fn) {
    auto n = std::make_shared<Node<T>>();
    n->shape = std::move(shape);
    n->value = std::move(value);
    bool any = false;
    for (const auto& in : inputs) any = any || in.requires_grad();
    if (any && grad_enabled()) {
        n->requires_grad = true;
        for (const auto& in : inputs) n->parents.push_back(in.node_ptr());
        n->backward_fn = std::forward<Fn>(fn);
    }
    return Tensor<T>(std::move(n));
}

template <typename T>
bool wants_grad(const Node<T>& out, std::size_t i) {
    return out.parents[i]->requires_grad;
}

template <typename T>
bool is_row_vector(const Tensor<T>& v, std::size_t cols) {
    if (v.numel() != cols) return false;
    return v.rank() == 1 || (v.rank() == 2 && v.shape()[0] == 1);
}

enum class Broadcast { kNone, kRight, kLeft };

template <typename T>
Broadcast broadcast_kind(const Tensor<T>& a, const Tensor<T>& b, const char* op) {
    if (a.shape() == b.shape()) return Broadcast::kNone;
    if (is_row_vector(b, a.cols()) && a.rank() >= 1) return Broadcast::kRight;
    if (is_row_vector(a, b.cols()) && b.rank() >= 1) return Broadcast::kLeft;
    throw ShapeError(std::string(op) + ": incompatible shapes " + to_string(a.shape()) + " and " +
                     to_string(b.shape()));
}

template <typename T>
void require_rank2(const Tensor<T>& x, const char* op) {
    if (x.rank() != 2) throw ShapeError(std::string(op) + ": expected a matrix, got " + to_string(x.shape()));
}

// Row stride of each operand: 0 for the broadcast row vector, c otherwise.
struct Strides {
    std::size_t a;
    std::size_t b;
};

inline Strides broadcast_strides(Broadcast kind, std::size_t c) {
    return {kind == Broadcast::kLeft ? 0 : c, kind == Broadcast::kRight ? 0 : c};
}

// Shared implementation for add (sign=+1) and sub (sign=-1).
template <typename T>
Tensor<T> add_signed(const Tensor<T>& a, const Tensor<T>& b, T sign, const char* name) {
    const Broadcast kind = broadcast_kind(a, b, name);
    const Tensor<T>& big = kind == Broadcast::kLeft ? b : a;
    const std::size_t c = big.cols();
    const std::size_t rows = c == 0 ? 0 : big.numel() / c;
    const Strides st = broadcast_strides(kind, c);
    std::vector<T> out(big.numel());
    const T* av = a.values().data();
    const T* bv = b.values().data();
    for (std::size_t r = 0; r < rows; ++r) {
        const T* x = av + r * st.a;
        const T* y = bv + r * st.b;
        T* o = out.data() + r * c;
        for (std::size_t j = 0; j < c; ++j) o[j] = x[j] + sign * y[j];
    }
    return record(big.shape(), std::move(out), {&a, &b}, [st, c, rows, sign](Node<T>& o) {
        const T* g = o.grad.data();
        for (std::size_t side = 0; side < 2; ++side) {
            if (!wants_grad(o, side)) continue;
            T* pg = o.parents[side]->grad_buffer().data();
            const T s = side == 0 ? T(1) : sign;
            const std::size_t stride = side == 0 ? st.a : st.b;
            for (std::size_t r = 0; r < rows; ++r) {
                T* p = pg + r * stride;
                const T* gr = g + r * c;
                for (std::size_t j = 0; j < c; ++j) p[j] += s * gr[j];
            }
        }
    });
}

template <typename T, typename F, typename D>
Tensor<T> unary(const Tensor<T>& x, F forward, D derivative) {
    auto xv = x.values();
    std::vector<T> out(xv.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = forward(xv[i]);
    return record(x.shape(), std::move(out), {&x}, [derivative](Node<T>& o) {
        auto& pg = o.parents[0]->grad_buffer();
        const auto& pv = o.parents[0]->value;
        for (std::size_t i = 0; i < o.grad.size(); ++i) pg[i] += o.grad[i] * derivative(pv[i], o.value[i]);
    });
}

}  // namespace

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
    require_rank2(a, "matmul");
    require_rank2(b, "matmul");
    const std::size_t m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
    if (b.shape()[0] != k)
        throw ShapeError("matmul: inner dimensions differ " + to_string(a.shape()) + " x " + to_string(b.shape()));
    std::vector<T> out(m * n, T(0));
    kernels::gemm_nn(a.values().data(), b.values().data(), out.data(), m, k, n);
    return record(Shape{m, n}, std::move(out), {&a, &b}, [m, k, n](Node<T>& o) {
        const T* g = o.grad.data();
        if (wants_grad(o, 0)) {
            // dA = dC * B^T
            kernels::gemm_nt(g, o.parents[1]->value.data(), o.parents[0]->grad_buffer().data(), m, n, k);
        }
        if (wants_grad(o, 1)) {
            // dB = A^T * dC
            kernels::gemm_tn(o.parents[0]->value.data(), g, o.parents[1]->grad_buffer().data(), m, k, n);
        }
    });
}

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
    return add_signed(a, b, T(1), "add");
}

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
    return add_signed(a, b, T(-1), "sub");
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
    const Broadcast kind = broadcast_kind(a, b, "mul");
    const Tensor<T>& big = kind == Broadcast::kLeft ? b : a;
    const std::size_t c = big.cols();
    const std::size_t rows = c == 0 ? 0 : big.numel() / c;
    const Strides st = broadcast_strides(kind, c);
    const T* av = a.values().data();
    const T* bv = b.values().data();
    std::vector<T> out(big.numel());
    for (std::size_t r = 0; r < rows; ++r) {
        const T* x = av + r * st.a;
        const T* y = bv + r * st.b;
        T* o = out.data() + r * c;
        for (std::size_t j = 0; j < c; ++j) o[j] = x[j] * y[j];
    }
    return record(big.shape(), std::move(out), {&a, &b}, [st, c, rows](Node<T>& o) {
        const T* g = o.grad.data();
        const T* va = o.parents[0]->value.data();
        const T* vb = o.parents[1]->value.data();
        if (wants_grad(o, 0)) {
            T* pg = o.parents[0]->grad_buffer().data();
            for (std::size_t r = 0; r < rows; ++r) {
                T* p = pg + r * st.a;
                const T* y = vb + r * st.b;
                const T* gr = g + r * c;
                for (std::size_t j = 0; j < c; ++j) p[j] += gr[j] * y[j];
            }
        }
        if (wants_grad(o, 1)) {
            T* pg = o.parents[1]->grad_buffer().data();
            for (std::size_t r = 0; r < rows; ++r) {
                T* p = pg + r * st.b;
                const T* x = va + r * st.a;
                const T* gr = g + r * c;
                for (std::size_t j = 0; j < c; ++j) p[j] += gr[j] * x[j];
            }
        }
    });
}

template <typename T>
Tensor<T> scale(const Tensor<T>& x, T factor) {
    return unary(
        x, [factor](T v) { return v * factor; }, [factor](T, T) { return factor; });
}

template <typename T>
Tensor<T> relu(const Tensor<T>& x) {
    return unary(
        x, [](T v) { return v > T(0) ? v : T(0); }, [](T in, T) { return in > T(0) ? T(1) : T(0); });
}

template <typename T>
Tensor<T> tanh(const Tensor<T>& x) {
    return unary(
        x, [](T v) { return std::tanh(v); }, [](T, T y) { return T(1) - y * y; });
}

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& x) {
    return unary(
        x,
        [](T v) {
            if (v >= T(0)) return T(1) / (T(1) + std::exp(-v));
            const T e = std::exp(v);
            return e / (T(1) + e);
        },
        [](T, T y) { return y * (T(1) - y); });
}

template <typename T>
Tensor<T> exp(const Tensor<T>& x) {
    return unary(
        x, [](T v) { return std::exp(v); }, [](T, T y) { return y; });
}

template <typename T>
Tensor<T> log(const Tensor<T>& x) {
    for (T v : x.values())
        if (!(v > T(0))) throw NumericError("log of non-positive value");
    return unary(
        x, [](T v) { return std::log(v); }, [](T in, T) { return T(1) / in; });
}

template <typename T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gain, const Tensor<T>& bias, T eps) {
    const std::size_t r = x.rows(), c = x.cols();
    if (!is_row_vector(gain, c) || !is_row_vector(bias, c))
        throw ShapeError("layer_norm: gain/bias must be row vectors of width " + std::to_string(c));
    auto xv = x.values();
    auto gv = gain.values();
    auto bv = bias.values();
    std::vector<T> out(xv.size());
    std::vector<T> xhat(xv.size());
    std::vector<T> inv_std(r);
    for (std::size_t i = 0; i < r; ++i) {
        const T* row = xv.data() + i * c;
        T mu = 0;
        for (std::size_t j = 0; j < c; ++j) mu += row[j];
        mu /= T(c);
        T var = 0;
        for (std::size_t j = 0; j < c; ++j) var += (row[j] - mu) * (row[j] - mu);
        var /= T(c);
        const T is = T(1) / std::sqrt(var + eps);
        inv_std[i] = is;
        for (std::size_t j = 0; j < c; ++j) {
            const T h = (row[j] - mu) * is;
            xhat[i * c + j] = h;
            out[i * c + j] = gv[j] * h + bv[j];
        }
    }
    return record(x.shape(), std::move(out), {&x, &gain, &bias},
                  [r, c, xhat = std::move(xhat), inv_std = std::move(inv_std)](Node<T>& o) {
                      const auto& g = o.grad;
                      const auto& gv = o.parents[1]->value;
                      if (wants_grad(o, 0)) {
                          auto& px = o.parents[0]->grad_buffer();
                          std::vector<T> dh(c);
                          for (std::size_t i = 0; i < r; ++i) {
                              T s1 = 0, s2 = 0;
                              for (std::size_t j = 0; j < c; ++j) {
                                  dh[j] = g[i * c + j] * gv[j];
                                  s1 += dh[j];
                                  s2 += dh[j] * xhat[i * c + j];
                              }
                              for (std::size_t j = 0; j < c; ++j)
                                  px[i * c + j] +=
                                      inv_std[i] * (dh[j] - s1 / T(c) - xhat[i * c + j] * s2 / T(c));
                          }
                      }
                      if (wants_grad(o, 1)) {
                          auto& pg = o.parents[1]->grad_buffer();
                          for (std::size_t i = 0; i < r; ++i)
                              for (std::size_t j = 0; j < c; ++j) pg[j] += g[i * c + j] * xhat[i * c + j];
                      }
                      if (wants_grad(o, 2)) {
                          auto& pb = o.parents[2]->grad_buffer();
                          for (std::size_t i = 0; i < r; ++i)
                              for (std::size_t j = 0; j < c; ++j) pb[j] += g[i * c + j];
                      }
                  });
}

template <typename T>
Tensor<T> softmax_rows(const Tensor<T>& x) {
    const std::size_t r = x.rows(), c = x.cols();
    auto xv = x.values();
    std::vector<T> out(xv.size());
    for (std::size_t i = 0; i < r; ++i) {
        const T* row = xv.data() + i * c;
        T* y = out.data() + i * c;
        const T mx = *std::max_element(row, row + c);
        T z = 0;
        for (std::size_t j = 0; j < c; ++j) {
            y[j] = std::exp(row[j] - mx);
            z += y[j];
        }
        for (std::size_t j = 0; j < c; ++j) y[j] /= z;
    }
    return record(x.shape(), std::move(out), {&x}, [r, c](Node<T>& o) {
        auto& px = o.parents[0]->grad_buffer();
        for (std::size_t i = 0; i < r; ++i) {
            const T* y = o.value.data() + i * c;
            const T* g = o.grad.data() + i * c;
            T dot = 0;
            for (std::size_t j = 0; j < c; ++j) dot += g[j] * y[j];
            for (std::size_t j = 0; j < c; ++j) px[i * c + j] += y[j] * (g[j] - dot);
        }
    });
}

template <typename T>
Tensor<T> log_softmax_rows(const Tensor<T>& x) {
    const std::size_t r = x.rows(), c = x.cols();
    auto xv = x.values();
    std::vector<T> out(xv.size());
    for (std::size_t i = 0; i < r; ++i) {
        const T* row = xv.data() + i * c;
        const T mx = *std::max_element(row, row + c);
        T z = 0;
        for (std::size_t j = 0; j < c; ++j) z += std::exp(row[j] - mx);
        const T lz = mx + std::log(z);
        for (std::size_t j = 0; j < c; ++j) out[i * c + j] = row[j] - lz;
    }
    return record(x.shape(), std::move(out), {&x}, [r, c](Node<T>& o) {
        auto& px = o.parents[0]->grad_buffer();
        for (std::size_t i = 0; i < r; ++i) {
            const T* y = o.value.data() + i * c;
            const T* g = o.grad.data() + i * c;
            T gs = 0;
            for (std::size_t j = 0; j < c; ++j) gs += g[j];
            for (std::size_t j = 0; j < c; ++j) px[i * c + j] += g[j] - std::exp(y[j]) * gs;
        }
    });
}

template <typename T>
Tensor<T> pick(const Tensor<T>& x, std::span<const int> index) {
    const std::size_t r = x.rows(), c = x.cols();
    if (index.size() != r) throw ShapeError("pick: need one index per row");
    std::vector<int> idx(index.begin(), index.end());
    std::vector<T> out(r);
    for (std::size_t i = 0; i < r; ++i) {
        if (idx[i] < 0 || static_cast<std::size_t>(idx[i]) >= c)
            throw IndexError("pick: index " + std::to_string(idx[i]) + " out of range [0," + std::to_string(c) + ")");
        out[i] = x.values()[i * c + idx[i]];
    }
    return record(Shape{r, 1}, std::move(out), {&x}, [c, idx = std::move(idx)](Node<T>& o) {
        auto& px = o.parents[0]->grad_buffer();
        for (std::size_t i = 0; i < idx.size(); ++i) px[i * c + idx[i]] += o.grad[i];
    });
}

template <typename T>
Tensor<T> cross_entropy(const Tensor<T>& logits, std::span<const int> labels) {
    const std::size_t b = logits.rows(), k = logits.cols();
    if (labels.size() != b) throw ShapeError("cross_entropy: need one label per row");
    for (int l : labels)
        if (l < 0 || static_cast<std::size_t>(l) >= k)
            throw IndexError("cross_entropy: label " + std::to_string(l) + " out of range [0," + std::to_string(k) +
                             ")");
    return scale(sum(pick(log_softmax_rows(logits), labels)), T(-1) / T(b));
}

template <typename T>
Tensor<T> concat_cols(const std::vector<Tensor<T>>& parts) {
    if (parts.empty()) throw ShapeError("concat_cols: no inputs");
    const std::size_t r = parts[0].rows();
    std::size_t total = 0;
    for (const auto& p : parts) {
        if (p.rows() != r) throw ShapeError("concat_cols: row counts differ");
        total += p.cols();
    }
    std::vector<T> out(r * total);
    std::vector<std::size_t> offsets;
    std::size_t off = 0;
    for (const auto& p : parts) {
        offsets.push_back(off);
        const std::size_t pc = p.cols();
        auto pv = p.values();
        for (std::size_t i = 0; i < r; ++i) std::copy_n(pv.data() + i * pc, pc, out.data() + i * total + off);
        off += pc;
    }
    return record_many(Shape{r, total}, std::move(out), parts, [r, total, offsets](Node<T>& o) {
        for (std::size_t s = 0; s < o.parents.size(); ++s) {
            if (!wants_grad(o, s)) continue;
            auto& pg = o.parents[s]->grad_buffer();
            const std::size_t pc = pg.size() / r;
            for (std::size_t i = 0; i < r; ++i)
                for (std::size_t j = 0; j < pc; ++j) pg[i * pc + j] += o.grad[i * total + offsets[s] + j];
        }
    });
}

template <typename T>
Tensor<T> concat_rows(const std::vector<Tensor<T>>& parts) {
    if (parts.empty()) throw ShapeError("concat_rows: no inputs");
    const std::size_t c = parts[0].cols();
    std::size_t r = 0;
    for (const auto& p : parts) {
        if (p.cols() != c) throw ShapeError("concat_rows: column counts differ");
        r += p.rows();
    }
    std::vector<T> out;
    out.reserve(r * c);
    for (const auto& p : parts) out.insert(out.end(), p.values().begin(), p.values().end());
    return record_many(Shape{r, c}, std::move(out), parts, [](Node<T>& o) {
        std::size_t off = 0;
        for (std::size_t s = 0; s < o.parents.size(); ++s) {
            const std::size_t n = o.parents[s]->value.size();
            if (wants_grad(o, s)) {
                auto& pg = o.parents[s]->grad_buffer();
                for (std::size_t i = 0; i < n; ++i) pg[i] += o.grad[off + i];
            }
            off += n;
        }
    });
}

template <typename T>
Tensor<T> slice_cols(const Tensor<T>& x, std::size_t start, std::size_t count) {
    const std::size_t r = x.rows(), c = x.cols();
    if (start + count > c) throw IndexError("slice_cols: range exceeds " + std::to_string(c) + " columns");
    std::vector<T> out(r * count);
    auto xv = x.values();
    for (std::size_t i = 0; i < r; ++i) std::copy_n(xv.data() + i * c + start, count, out.data() + i * count);
    return record(Shape{r, count}, std::move(out), {&x}, [r, c, start, count](Node<T>& o) {
        auto& px = o.parents[0]->grad_buffer();
        for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < count; ++j) px[i * c + start + j] += o.grad[i * count + j];
    });
}

template <typename T>
Tensor<T> slice_rows(const Tensor<T>& x, std::size_t start, std::size_t count) {
    const std::size_t r = x.rows(), c = x.cols();
    if (start + count > r) throw IndexError("slice_rows: range exceeds " + std::to_string(r) + " rows");
    auto xv = x.values();
    std::vector<T> out(xv.begin() + start * c, xv.begin() + (start + count) * c);
    return record(Shape{count, c}, std::move(out), {&x}, [c, start](Node<T>& o) {
        auto& px = o.parents[0]->grad_buffer();
        for (std::size_t i = 0; i < o.grad.size(); ++i) px[start * c + i] += o.grad[i];
    });
}

template <typename T>
Tensor<T> reshape(const Tensor<T>& x, Shape shape) {
    if (numel(shape) != x.numel())
        throw ShapeError("reshape: " + to_string(x.shape()) + " -> " + to_string(shape));
    std::vector<T> out(x.values().begin(), x.values().end());
    return record(std::move(shape), std::move(out), {&x}, [](Node<T>& o) {
        auto& px = o.parents[0]->grad_buffer();
        for (std::size_t i = 0; i < o.grad.size(); ++i) px[i] += o.grad[i];
    });
}

template <typename T>
Tensor<T> transpose(const Tensor<T>& x) {
    require_rank2(x, "transpose");
    const std::size_t r = x.shape()[0], c = x.shape()[1];
    std::vector<T> out(r * c);
    kernels::transpose(x.values().data(), out.data(), r, c);
    return record(Shape{c, r}, std::move(out), {&x}, [r, c](Node<T>& o) {
        auto& px = o.parents[0]->grad_buffer();
        for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < c; ++j) px[i * c + j] += o.grad[j * r + i];
    });
}

template <typename T>
Tensor<T> sum(const Tensor<T>& x) {
    T s = 0;
    for (T v : x.values()) s += v;
    return record(Shape{}, std::vector<T>{s}, {&x}, [](Node<T>& o) {
        auto& px = o.parents[0]->grad_buffer();
        for (T& g : px) g += o.grad[0];
    });
}

template <typename T>
Tensor<T> mean(const Tensor<T>& x) {
    if (x.numel() == 0) throw ShapeError("mean of empty tensor");
    return scale(sum(x), T(1) / T(x.numel()));
}

template <typename T>
Tensor<T> sum_rows(const Tensor<T>& x) {
    const std::size_t r = x.rows(), c = x.cols();
    std::vector<T> out(c, T(0));
    auto xv = x.values();
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) out[j] += xv[i * c + j];
    return record(Shape{1, c}, std::move(out), {&x}, [r, c](Node<T>& o) {
        auto& px = o.parents[0]->grad_buffer();
        for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < c; ++j) px[i * c + j] += o.grad[j];
    });
}

template <typename T>
Tensor<T> mean_rows(const Tensor<T>& x) {
    if (x.rows() == 0) throw ShapeError("mean_rows of empty tensor");
    return scale(sum_rows(x), T(1) / T(x.rows()));
}

#define VTNAV_INSTANTIATE_OPS(T)                                                                 \
    template Tensor<T> matmul(const Tensor<T>&, const Tensor<T>&);                               \
    template Tensor<T> add(const Tensor<T>&, const Tensor<T>&);                                  \
    template Tensor<T> sub(const Tensor<T>&, const Tensor<T>&);                                  \
    template Tensor<T> mul(const Tensor<T>&, const Tensor<T>&);                                  \
    template Tensor<T> scale(const Tensor<T>&, T);                                               \
    template Tensor<T> relu(const Tensor<T>&);                                                   \
    template Tensor<T> tanh(const Tensor<T>&);                                                   \
    template Tensor<T> sigmoid(const Tensor<T>&);                                                \
    template Tensor<T> exp(const Tensor<T>&);                                                    \
    template Tensor<T> log(const Tensor<T>&);                                                    \
    template Tensor<T> layer_norm(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, T);      \
    template Tensor<T> softmax_rows(const Tensor<T>&);                                           \
    template Tensor<T> log_softmax_rows(const Tensor<T>&);                                       \
    template Tensor<T> cross_entropy(const Tensor<T>&, std::span<const int>);                    \
    template Tensor<T> pick(const Tensor<T>&, std::span<const int>);                             \
    template Tensor<T> concat_cols(const std::vector<Tensor<T>>&);                               \
    template Tensor<T> concat_rows(const std::vector<Tensor<T>>&);                               \
    template Tensor<T> slice_cols(const Tensor<T>&, std::size_t, std::size_t);                   \
    template Tensor<T> slice_rows(const Tensor<T>&, std::size_t, std::size_t);                   \
    template Tensor<T> reshape(const Tensor<T>&, Shape);                                         \
    template Tensor<T> transpose(const Tensor<T>&);                                              \
    template Tensor<T> sum(const Tensor<T>&);                                                    \
    template Tensor<T> mean(const Tensor<T>&);                                                   \
    template Tensor<T> mean_rows(const Tensor<T>&);                                              \
    template Tensor<T> sum_rows(const Tensor<T>&);

VTNAV_INSTANTIATE_OPS(float)
VTNAV_INSTANTIATE_OPS(double)

}  // namespace vtnav::ad
