#pragma once

#include <cstddef>
#include <vector>

// Dense row-major kernels shared by the autodiff ops and the perception projections.
namespace vtnav::ad::kernels {

namespace detail {

// C[m x n] += A * B[k x n] where A(r, p) = a[r * a_row + p * a_inner]. Blocks of
// kRows output rows by kCols columns are accumulated in registers.
template <typename T>
void gemm_blocked(const T* a, std::size_t a_row, std::size_t a_inner, const T* b, T* c, std::size_t m, std::size_t k,
                  std::size_t n) {
    constexpr std::size_t kRows = 4;
    constexpr std::size_t kCols = 256 / sizeof(T);
    std::size_t i = 0;
    for (; i + kRows <= m; i += kRows) {
        for (std::size_t j = 0; j < n; j += kCols) {
            const std::size_t w = n - j < kCols ? n - j : kCols;
            T acc[kRows][kCols] = {};
            for (std::size_t p = 0; p < k; ++p) {
                const T* brow = b + p * n + j;
                const T a0 = a[(i + 0) * a_row + p * a_inner];
                const T a1 = a[(i + 1) * a_row + p * a_inner];
                const T a2 = a[(i + 2) * a_row + p * a_inner];
                const T a3 = a[(i + 3) * a_row + p * a_inner];
                if (w == kCols) {
#pragma GCC unroll 4
                    for (std::size_t q = 0; q < kCols; ++q) {
                        const T bv = brow[q];
                        acc[0][q] += a0 * bv;
                        acc[1][q] += a1 * bv;
                        acc[2][q] += a2 * bv;
                        acc[3][q] += a3 * bv;
                    }
                } else {
                    for (std::size_t q = 0; q < w; ++q) {
                        const T bv = brow[q];
                        acc[0][q] += a0 * bv;
                        acc[1][q] += a1 * bv;
                        acc[2][q] += a2 * bv;
                        acc[3][q] += a3 * bv;
                    }
                }
            }
            for (std::size_t r = 0; r < kRows; ++r) {
                T* crow = c + (i + r) * n + j;
                for (std::size_t q = 0; q < w; ++q) crow[q] += acc[r][q];
            }
        }
    }
    for (; i < m; ++i) {
        T* crow = c + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            const T av = a[i * a_row + p * a_inner];
            const T* brow = b + p * n;
            for (std::size_t q = 0; q < n; ++q) crow[q] += av * brow[q];
        }
    }
}

}  // namespace detail

// C[m x n] += A[m x k] * B[k x n]
template <typename T>
void gemm_nn(const T* a, const T* b, T* c, std::size_t m, std::size_t k, std::size_t n) {
    detail::gemm_blocked(a, k, 1, b, c, m, k, n);
}

// C[k x n] += A[m x k]^T * B[m x n]
template <typename T>
void gemm_tn(const T* a, const T* b, T* c, std::size_t m, std::size_t k, std::size_t n) {
    detail::gemm_blocked(a, 1, k, b, c, k, m, n);
}

template <typename T>
void transpose(const T* src, T* dst, std::size_t rows, std::size_t cols) {
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) dst[c * rows + r] = src[r * cols + c];
}

// C[m x n] += A[m x k] * B[n x k]^T. Few-row products use row dot products; larger
// ones transpose B once.
template <typename T>
void gemm_nt(const T* a, const T* b, T* c, std::size_t m, std::size_t k, std::size_t n) {
    if (m >= 8) {
        std::vector<T> bt(k * n);
        transpose(b, bt.data(), n, k);
        gemm_nn(a, bt.data(), c, m, k, n);
        return;
    }
    constexpr std::size_t kLanes = 64 / sizeof(T);
    for (std::size_t i = 0; i < m; ++i) {
        const T* arow = a + i * k;
        for (std::size_t j = 0; j < n; ++j) {
            const T* brow = b + j * k;
            T lanes[kLanes] = {};
            std::size_t p = 0;
            for (; p + kLanes <= k; p += kLanes)
                for (std::size_t q = 0; q < kLanes; ++q) lanes[q] += arow[p + q] * brow[p + q];
            T sum = 0;
            for (std::size_t q = 0; q < kLanes; ++q) sum += lanes[q];
            for (; p < k; ++p) sum += arow[p] * brow[p];
            c[i * n + j] += sum;
        }
    }
}

}  // namespace vtnav::ad::kernels
