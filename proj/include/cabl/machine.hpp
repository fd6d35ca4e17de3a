#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace cabl {

// Thrown when a machine descriptor or a derived plan violates one of the
// model's rules; the message names the violated rule.
class DescriptorError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// One set-associative data cache level, characterized by line size,
// associative degree and number of sets. Capacity follows from the three.
// ---------------------------------------------------------------------------
struct CacheLevel {
    std::uint64_t line_bytes = 0;
    std::uint64_t associativity = 0;
    std::uint64_t num_sets = 0;
    bool shared = false; // true when the level is shared among cores

    std::uint64_t size_bytes() const { return line_bytes * associativity * num_sets; }
};

// Capacity of a level measured in elements of the given width.
inline std::uint64_t cache_capacity_elements(const CacheLevel& level,
                                             std::uint64_t element_bytes) {
    if (element_bytes < 1) throw DescriptorError("element_bytes must be >= 1");
    return level.size_bytes() / element_bytes;
}

// ---------------------------------------------------------------------------
// Declared memory hierarchy: cache levels ordered L1 outward, core count and
// the width of the numeric element type. Source of all tuning parameters.
// ---------------------------------------------------------------------------
struct MachineDescriptor {
    std::vector<CacheLevel> levels; // ordered L1 outward
    unsigned cores = 1;
    std::uint64_t element_bytes = 8;

    const CacheLevel& level(std::size_t i) const { return levels.at(i); }
    std::size_t num_levels() const { return levels.size(); }
    std::uint64_t capacity_elements(std::size_t i) const {
        return cache_capacity_elements(levels.at(i), element_bytes);
    }
};

inline void validate_machine(const MachineDescriptor& machine) {
    if (machine.element_bytes < 1) throw DescriptorError("element_bytes must be >= 1");
    if (machine.cores < 1) throw DescriptorError("cores must be >= 1");
    if (machine.levels.size() < 2)
        throw DescriptorError("at least two cache levels are required");
    for (const CacheLevel& lv : machine.levels) {
        if (lv.line_bytes < 1 || lv.associativity < 1 || lv.num_sets < 1)
            throw DescriptorError("line_bytes, associativity and num_sets must all be >= 1");
        if ((lv.line_bytes & (lv.line_bytes - 1)) != 0)
            throw DescriptorError("line size must be a power of two");
    }
    for (std::size_t i = 1; i < machine.levels.size(); ++i) {
        if (machine.levels[i].line_bytes != machine.levels[0].line_bytes)
            throw DescriptorError("line size differs across levels");
        if (machine.levels[i].size_bytes() <= machine.levels[i - 1].size_bytes())
            throw DescriptorError("level sizes must increase");
    }
    if (machine.levels[0].shared)
        throw DescriptorError("level 1 must be private (shared = false)");
}

// The generic descriptor the library ships with: 32 KiB private L1 and a
// 512 KiB shared L2, 64-byte lines, 8-byte elements.
inline MachineDescriptor default_machine(unsigned cores = 8) {
    MachineDescriptor m;
    m.levels = {
        CacheLevel{64, 8, 64, false},   // 32 KiB L1
        CacheLevel{64, 8, 1024, true},  // 512 KiB L2
    };
    m.cores = cores;
    m.element_bytes = 8;
    validate_machine(m);
    return m;
}

// ---------------------------------------------------------------------------
// Tuning parameters derived from the hierarchy: the L2 block of A (m_c x n_c),
// the register-block height m_r, and the dot-product block and dispatch
// cutoff, both derived from L1 capacity.
// ---------------------------------------------------------------------------
struct BlockingPlan {
    std::uint64_t m_c = 0;
    std::uint64_t n_c = 0;
    std::uint64_t m_r = 0;
    std::uint64_t dot_block = 0;  // elements per dot micro-kernel invocation
    std::uint64_t dot_cutoff = 0; // at or below this length the small path runs
    unsigned max_threads = 1;
};

// m_r never stated by the machine; two 4-wide FMA accumulators of 8-byte
// elements is the portable default.
inline constexpr std::uint64_t kDefaultRegisterRows = 8;

inline std::uint64_t isqrt_floor(std::uint64_t v) {
    if (v == 0) return 0;
    auto s = static_cast<std::uint64_t>(std::sqrt(static_cast<double>(v)));
    while (s > 0 && s * s > v) --s;
    while ((s + 1) * (s + 1) <= v) ++s;
    return s;
}

inline BlockingPlan derive_blocking_plan(const MachineDescriptor& machine,
                                         std::optional<std::uint64_t> m_r_hint = std::nullopt) {
    validate_machine(machine);
    const std::uint64_t m_r = m_r_hint.value_or(kDefaultRegisterRows);
    if (m_r < 1) throw DescriptorError("m_r must be >= 1");

    const std::uint64_t cap_l1 = machine.capacity_elements(0);
    const std::uint64_t cap_l2 = machine.capacity_elements(1);
    const std::uint64_t side = isqrt_floor(cap_l2);
    if (side < m_r)
        throw DescriptorError("L2 capacity too small: floor(sqrt(M_L2)) < m_r");

    BlockingPlan plan;
    plan.m_r = m_r;
    plan.m_c = side - side % m_r; // square A block, rounded to the register height
    plan.n_c = plan.m_c;
    plan.dot_block = cap_l1 / 2;
    plan.dot_cutoff = 2 * cap_l1;
    plan.max_threads = machine.cores;
    return plan;
}

} // namespace cabl
