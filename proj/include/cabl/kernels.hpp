#pragma once

// Cache-blocked, threaded level-1/2 kernels: dot product with a size
// dispatcher, matrix-vector product for both storage orders, and the rank-1
// update. Each kernel has a naive single-threaded reference next to it; the
// references are the oracles used by the tests and by the bench harness
// spot checks.
//
// All kernels implement pure accumulate semantics (alpha += x.y, c += A x,
// C += x (x) y). Results are bitwise deterministic for a fixed input, plan
// and thread count: work is split into contiguous chunks with a fixed
// chunk -> range mapping, every output element is owned by exactly one chunk,
// and reductions combine partials in chunk-index order.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "dense.hpp"
#include "machine.hpp"
#include "thread_pool.hpp"

namespace cabl {

struct ExecPolicy {
    BlockingPlan plan;
    unsigned threads = 1;

    ExecPolicy(const BlockingPlan& p, unsigned t) : plan(p), threads(t) {
        if (t < 1 || t > p.max_threads)
            throw std::invalid_argument("ExecPolicy: threads must be in [1, plan.max_threads]");
    }
};

// Which code path the last kernel call on this thread took. Two stores per
// kernel call; tests assert dispatch decisions through it.
enum class KernelVariant : std::uint8_t {
    none,
    dot_small,        // whole-range micro-kernel
    dot_blocked,      // explicit block loop, threaded
    gemv_col_blocked,
    gemv_row,
    ger,
};

struct ExecProbe {
    KernelVariant variant = KernelVariant::none;
    unsigned threads_used = 0;
};

inline thread_local ExecProbe g_last_exec;
inline const ExecProbe& last_exec() { return g_last_exec; }

namespace detail {

inline void require(bool ok, const char* msg) {
    if (!ok) throw std::invalid_argument(msg);
}

// Detectable aliasing: identical non-null base pointers.
inline bool aliases(const void* a, const void* b) { return a != nullptr && a == b; }

// Dot micro-kernel: eight independent accumulators so the compiler can turn
// the body into vector FMAs without reassociating a single chain. The
// combine order at the end is fixed.
template <typename T>
T dot_microkernel(const T* x, const T* y, std::size_t n) {
    T acc[8] = {};
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        for (std::size_t k = 0; k < 8; ++k) acc[k] += x[i + k] * y[i + k];
    }
    for (; i < n; ++i) acc[0] += x[i] * y[i];
    T s01 = acc[0] + acc[1];
    T s23 = acc[2] + acc[3];
    T s45 = acc[4] + acc[5];
    T s67 = acc[6] + acc[7];
    return (s01 + s23) + (s45 + s67);
}

// Register-blocked gemv panel, fixed m_r = 8: c(i:i+8) stays in accumulators
// across the column block. A_panel points at A(i, 0), columns are lda apart.
template <typename T>
void gemv_panel8(const T* A_panel, std::size_t lda, const T* x, std::size_t j0,
                 std::size_t j1, T* c_panel) {
    T acc[8];
    for (std::size_t r = 0; r < 8; ++r) acc[r] = c_panel[r];
    for (std::size_t j = j0; j < j1; ++j) {
        const T* col = A_panel + j * lda;
        const T xj = x[j];
        for (std::size_t r = 0; r < 8; ++r) acc[r] += col[r] * xj;
    }
    for (std::size_t r = 0; r < 8; ++r) c_panel[r] = acc[r];
}

// Ragged-edge panel (fewer than m_r rows, or a non-default m_r). Updates c
// in place; the per-row accumulation order is the same as the register
// version, so mixing the two paths does not change results.
template <typename T>
void gemv_panel_any(const T* A_panel, std::size_t lda, std::size_t rows, const T* x,
                    std::size_t j0, std::size_t j1, T* c_panel) {
    for (std::size_t j = j0; j < j1; ++j) {
        const T* col = A_panel + j * lda;
        const T xj = x[j];
        for (std::size_t r = 0; r < rows; ++r) c_panel[r] += col[r] * xj;
    }
}

} // namespace detail

// ---------------------------------------------------------------------------
// DOT
// ---------------------------------------------------------------------------

// Reference: alpha0 + sum of x_p*y_p accumulated left to right.
template <typename T>
T dot_ref(const Vector<T>& x, const Vector<T>& y, T alpha0) {
    detail::require(x.len() == y.len(), "dot: x and y lengths differ");
    T acc = alpha0;
    const T* xs = x.data();
    const T* ys = y.data();
    for (std::size_t p = 0; p < x.len(); ++p) acc += xs[p] * ys[p];
    return acc;
}

// Size-dispatched dot product. At or below plan.dot_cutoff the whole range
// goes through the micro-kernel on the calling thread. Above it the range is
// cut into blocks of plan.dot_block; threads own contiguous runs of blocks,
// accumulate block partials in block order, and the per-thread partials are
// combined in thread-index order before alpha0 is added.
template <typename T>
T dot(const Vector<T>& x, const Vector<T>& y, T alpha0, const ExecPolicy& policy) {
    detail::require(x.len() == y.len(), "dot: x and y lengths differ");
    const std::size_t n = x.len();
    const BlockingPlan& plan = policy.plan;

    if (n <= plan.dot_cutoff) {
        g_last_exec = {KernelVariant::dot_small, 1};
        return detail::dot_microkernel(x.data(), y.data(), n) + alpha0;
    }

    detail::require(plan.dot_block >= 1, "dot: plan.dot_block must be >= 1");
    const std::uint64_t block = plan.dot_block;
    const std::uint64_t nblocks = (n + block - 1) / block;
    std::vector<T> partials(policy.threads, T{});
    const unsigned used = detail::parallel_chunks(
        nblocks, policy.threads, [&](unsigned c, std::uint64_t b0, std::uint64_t b1) {
            T partial{};
            for (std::uint64_t b = b0; b < b1; ++b) {
                const std::size_t off = static_cast<std::size_t>(b * block);
                const std::size_t len = std::min<std::size_t>(block, n - off);
                partial += detail::dot_microkernel(x.data() + off, y.data() + off, len);
            }
            partials[c] = partial;
        });

    T total{};
    for (unsigned c = 0; c < used; ++c) total += partials[c];
    g_last_exec = {KernelVariant::dot_blocked, used};
    return total + alpha0;
}

// ---------------------------------------------------------------------------
// GEMV
// ---------------------------------------------------------------------------

// Reference: c_i += sum_j A(i,j)*x_j with j ascending. Layout-independent.
template <typename T>
void gemv_ref(const DenseMatrix<T>& A, const Vector<T>& x, Vector<T>& c) {
    detail::require(A.cols() == x.len(), "gemv: A.cols != x.len");
    detail::require(A.rows() == c.len(), "gemv: A.rows != c.len");
    detail::require(!detail::aliases(c.data(), x.data()), "gemv: c must not alias x");
    for (std::size_t i = 0; i < A.rows(); ++i) {
        T acc = c[i];
        for (std::size_t j = 0; j < A.cols(); ++j) acc += A(i, j) * x[j];
        c[i] = acc;
    }
}

// Blocked column-major gemv. Loop 1 walks row blocks of m_c and carries the
// threading; within a row block, column blocks of n_c accumulate in ascending
// order, so the summation order of every output element is independent of the
// thread count. Loop 3 walks m_r-high panels held in registers.
template <typename T>
void gemv_col_major(const DenseMatrix<T>& A, const Vector<T>& x, Vector<T>& c,
                    const ExecPolicy& policy) {
    detail::require(A.layout() == Layout::ColMajor, "gemv_col_major: matrix is not col-major");
    detail::require(A.cols() == x.len(), "gemv: A.cols != x.len");
    detail::require(A.rows() == c.len(), "gemv: A.rows != c.len");
    detail::require(!detail::aliases(c.data(), x.data()), "gemv: c must not alias x");

    const std::size_t m = A.rows();
    const std::size_t n = A.cols();
    const BlockingPlan& plan = policy.plan;
    detail::require(plan.m_c >= 1 && plan.n_c >= 1 && plan.m_r >= 1,
                    "gemv_col_major: plan blocks must be >= 1");
    const std::uint64_t row_blocks = m == 0 ? 0 : (m + plan.m_c - 1) / plan.m_c;

    const unsigned used = detail::parallel_chunks(
        row_blocks, policy.threads, [&](unsigned, std::uint64_t b0, std::uint64_t b1) {
            const T* a = A.data();
            const T* xs = x.data();
            T* cs = c.data();
            for (std::uint64_t b = b0; b < b1; ++b) {
                const std::size_t ic = static_cast<std::size_t>(b * plan.m_c);
                const std::size_t ic_end = std::min(m, ic + plan.m_c);
                for (std::size_t jc = 0; jc < n; jc += plan.n_c) {
                    const std::size_t jc_end = std::min(n, jc + plan.n_c);
                    for (std::size_t ir = ic; ir < ic_end; ir += plan.m_r) {
                        const std::size_t rows = std::min<std::size_t>(plan.m_r, ic_end - ir);
                        if (rows == 8)
                            detail::gemv_panel8(a + ir, m, xs, jc, jc_end, cs + ir);
                        else
                            detail::gemv_panel_any(a + ir, m, rows, xs, jc, jc_end, cs + ir);
                    }
                }
            }
        });

    g_last_exec = {KernelVariant::gemv_col_blocked, std::max(used, 1u)};
}

// Row-major gemv: every output row is an independent inner product over a
// unit-stride row, rows are handed to threads in contiguous ranges. Small
// problems (touched elements <= the dot cutoff, i.e. 2*M_L1) stay on the
// calling thread; the thread overhead dominates below that.
template <typename T>
void gemv_row_major(const DenseMatrix<T>& A, const Vector<T>& x, Vector<T>& c,
                    const ExecPolicy& policy) {
    detail::require(A.layout() == Layout::RowMajor, "gemv_row_major: matrix is not row-major");
    detail::require(A.cols() == x.len(), "gemv: A.cols != x.len");
    detail::require(A.rows() == c.len(), "gemv: A.rows != c.len");
    detail::require(!detail::aliases(c.data(), x.data()), "gemv: c must not alias x");

    const std::size_t m = A.rows();
    const std::size_t n = A.cols();
    const std::uint64_t touched = static_cast<std::uint64_t>(m) * n + m + n;
    const unsigned want = touched <= policy.plan.dot_cutoff ? 1 : policy.threads;

    const unsigned used = detail::parallel_chunks(
        m, want, [&](unsigned, std::uint64_t i0, std::uint64_t i1) {
            const T* a = A.data();
            const T* xs = x.data();
            T* cs = c.data();
            for (std::size_t i = i0; i < i1; ++i) {
                const T* row = a + i * n;
                T acc = cs[i];
                for (std::size_t j = 0; j < n; ++j) acc += row[j] * xs[j];
                cs[i] = acc;
            }
        });

    g_last_exec = {KernelVariant::gemv_row, std::max(used, 1u)};
}

// ---------------------------------------------------------------------------
// GER (rank-1 update)
// ---------------------------------------------------------------------------

// Reference: one fused update C(i,j) += x_i*y_j per element, naive loops.
template <typename T>
void ger_ref(const Vector<T>& x, const Vector<T>& y, DenseMatrix<T>& C) {
    detail::require(C.rows() == x.len(), "ger: C.rows != x.len");
    detail::require(C.cols() == y.len(), "ger: C.cols != y.len");
    for (std::size_t i = 0; i < C.rows(); ++i)
        for (std::size_t j = 0; j < C.cols(); ++j) C(i, j) += x[i] * y[j];
}

// Rank-1 update. The outer loop follows the major dimension of C's storage so
// the inner traversal is unit-stride; outer iterations go to threads in
// contiguous ranges, so no two threads ever write the same element. Each
// element receives exactly one FMA, which makes the result bitwise identical
// to ger_ref for any thread count.
template <typename T>
void ger(const Vector<T>& x, const Vector<T>& y, DenseMatrix<T>& C, const ExecPolicy& policy) {
    detail::require(C.rows() == x.len(), "ger: C.rows != x.len");
    detail::require(C.cols() == y.len(), "ger: C.cols != y.len");
    detail::require(!detail::aliases(C.data(), x.data()) && !detail::aliases(C.data(), y.data()),
                    "ger: C must not alias x or y");

    const std::size_t m = C.rows();
    const std::size_t n = C.cols();
    const std::uint64_t touched = static_cast<std::uint64_t>(m) * n + m + n;
    const unsigned want = touched <= policy.plan.dot_cutoff ? 1 : policy.threads;

    unsigned used = 0;
    if (C.layout() == Layout::ColMajor) {
        used = detail::parallel_chunks(n, want, [&](unsigned, std::uint64_t j0, std::uint64_t j1) {
            const T* xs = x.data();
            const T* ys = y.data();
            for (std::size_t j = j0; j < j1; ++j) {
                const T yj = ys[j];
                T* col = C.data() + j * m;
                for (std::size_t i = 0; i < m; ++i) col[i] += xs[i] * yj;
            }
        });
    } else {
        used = detail::parallel_chunks(m, want, [&](unsigned, std::uint64_t i0, std::uint64_t i1) {
            const T* xs = x.data();
            const T* ys = y.data();
            for (std::size_t i = i0; i < i1; ++i) {
                const T xi = xs[i];
                T* row = C.data() + i * n;
                for (std::size_t j = 0; j < n; ++j) row[j] += xi * ys[j];
            }
        });
    }

    g_last_exec = {KernelVariant::ger, std::max(used, 1u)};
}

} // namespace cabl
