#pragma once

// Closed-form transfer lower bounds for DOT / GEM (rank-1) / GEMV on a
// two-level fast/slow memory holding M elements, and the access counts the
// blocked algorithms incur. Everything is evaluated in floating point; the
// printed formulas can go negative for small problems, so BoundReport keeps
// the raw value next to a zero-clamped one.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>

#include "machine.hpp"

namespace cabl {

enum class OpKind { Dot, Gem, Gemv };

inline const char* op_kind_name(OpKind k) {
    switch (k) {
        case OpKind::Dot: return "dot";
        case OpKind::Gem: return "gem";
        case OpKind::Gemv: return "gemv";
    }
    return "?";
}

// One problem instance. m is ignored for Dot.
struct OperationInstance {
    OpKind kind = OpKind::Dot;
    std::uint64_t m = 0;
    std::uint64_t n = 0;
};

inline void validate_instance(const OperationInstance& op) {
    if (op.n < 1) throw std::invalid_argument("operation instance: n must be >= 1");
    if (op.kind != OpKind::Dot && op.m < 1)
        throw std::invalid_argument("operation instance: m must be >= 1");
}

struct TransferBounds {
    double reads_raw = 0.0;
    double stores_raw = 0.0;
};

// Largest number of FMAs executable on M resident plus R read elements split
// across n_objects operands: ((M+R)/n)^(n/(n-1)).
inline double fma_max(double fast_plus_reads, int n_objects) {
    if (!(fast_plus_reads > 0.0))
        throw std::invalid_argument("fma_max: fast_plus_reads must be > 0");
    if (n_objects < 2) throw std::invalid_argument("fma_max: n_objects must be >= 2");
    const double n = static_cast<double>(n_objects);
    return std::pow(fast_plus_reads / n, n / (n - 1.0));
}

// gemv: reads >= 2mn/sqrt(M) - m - 2M, stores >= 2mn/sqrt(M) + m - 3M.
inline TransferBounds gemv_bounds(std::uint64_t m, std::uint64_t n, std::uint64_t M) {
    const double md = static_cast<double>(m);
    const double nd = static_cast<double>(n);
    const double Md = static_cast<double>(M);
    const double lead = 2.0 * md * nd / std::sqrt(Md);
    return {lead - md - 2.0 * Md, lead + md - 3.0 * Md};
}

// gem (rank-1): reads >= 2mn/sqrt(M) - mn - 2M, stores >= 2mn/sqrt(M) + mn - 3M.
inline TransferBounds gem_bounds(std::uint64_t m, std::uint64_t n, std::uint64_t M) {
    const double md = static_cast<double>(m);
    const double nd = static_cast<double>(n);
    const double Md = static_cast<double>(M);
    const double lead = 2.0 * md * nd / std::sqrt(Md);
    return {lead - md * nd - 2.0 * Md, lead + md * nd - 3.0 * Md};
}

// dot: reads >= (8n/M - 8M)/3, stores >= 8n/(3M) - 11M/3.
inline TransferBounds dot_bounds(std::uint64_t n, std::uint64_t M) {
    const double nd = static_cast<double>(n);
    const double Md = static_cast<double>(M);
    return {(8.0 * nd / Md - 8.0 * Md) / 3.0, 8.0 * nd / (3.0 * Md) - 11.0 * Md / 3.0};
}

// Element accesses the blocked column-major gemv pushes through the blocking
// cache level for the x and c streams: mn/m_c + mn/n_c + m.
inline double blocked_gemv_access_count(std::uint64_t m, std::uint64_t n,
                                        const BlockingPlan& plan) {
    if (plan.m_c < 1 || plan.n_c < 1)
        throw std::invalid_argument("blocked_gemv_access_count: plan blocks must be >= 1");
    const double mn = static_cast<double>(m) * static_cast<double>(n);
    return mn / static_cast<double>(plan.m_c) + mn / static_cast<double>(plan.n_c) +
           static_cast<double>(m);
}

// Block loads of the explicit-loop dot: 2n/dot_block.
inline double blocked_dot_access_count(std::uint64_t n, std::uint64_t dot_block) {
    if (dot_block < 1) throw std::invalid_argument("blocked_dot_access_count: dot_block must be >= 1");
    return 2.0 * static_cast<double>(n) / static_cast<double>(dot_block);
}

// Amdahl speedup ceiling less a caller-supplied thread-overhead term:
// 1/(1-p) - overhead.
inline double speedup_bound(double parallel_fraction, double overhead) {
    if (!(parallel_fraction >= 0.0) || parallel_fraction >= 1.0)
        throw std::invalid_argument("speedup_bound: parallel_fraction must be in [0, 1)");
    if (!(overhead >= 0.0)) throw std::invalid_argument("speedup_bound: overhead must be >= 0");
    return 1.0 / (1.0 - parallel_fraction) - overhead;
}

// ---------------------------------------------------------------------------
// Aggregated report for one operation instance at one cache level.
// ---------------------------------------------------------------------------
struct BoundReport {
    double min_reads_raw = 0.0;
    double min_stores_raw = 0.0;
    double min_reads = 0.0;  // max(0, raw)
    double min_stores = 0.0; // max(0, raw)
    std::uint64_t fast_memory_elements = 0;
    // Access count of our blocked algorithm; set for Gemv and Dot only.
    std::optional<double> predicted_reads_blocked;
};

inline BoundReport report(const OperationInstance& op, const MachineDescriptor& machine,
                          const BlockingPlan& plan, std::size_t level_index) {
    validate_instance(op);
    if (level_index >= machine.num_levels())
        throw std::invalid_argument("report: cache level index out of range");
    const std::uint64_t M = machine.capacity_elements(level_index);

    TransferBounds b;
    BoundReport r;
    switch (op.kind) {
        case OpKind::Dot:
            b = dot_bounds(op.n, M);
            r.predicted_reads_blocked = blocked_dot_access_count(op.n, plan.dot_block);
            break;
        case OpKind::Gemv:
            b = gemv_bounds(op.m, op.n, M);
            r.predicted_reads_blocked = blocked_gemv_access_count(op.m, op.n, plan);
            break;
        case OpKind::Gem:
            b = gem_bounds(op.m, op.n, M);
            break;
    }
    r.min_reads_raw = b.reads_raw;
    r.min_stores_raw = b.stores_raw;
    r.min_reads = std::max(0.0, b.reads_raw);
    r.min_stores = std::max(0.0, b.stores_raw);
    r.fast_memory_elements = M;
    return r;
}

} // namespace cabl
