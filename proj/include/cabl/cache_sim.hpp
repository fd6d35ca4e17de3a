#pragma once

// Trace-driven simulator of the declared hierarchy: set-associative, LRU
// replacement, write-allocate / write-back, one private instance per core for
// levels marked unshared. Levels are independent (no inclusion is enforced);
// a demand access probes L1 of its core and walks outward on miss, and the
// line is installed at every level it missed in.
//
// Counter conventions:
//   hits + misses       == demand accesses presented to the level
//   evictions           == valid lines displaced by fills
//   writebacks          == dirty lines leaving the level
//   slow_memory_reads   == outermost-level misses
//   slow_memory_writes  == dirty writebacks that reach slow memory
// Writeback traffic between levels is not a demand access and does not touch
// hit/miss counters or LRU state. Dirty lines still resident when a run ends
// are not flushed.

#include <algorithm>
#include <cstdint>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "dense.hpp"
#include "io_bounds.hpp"
#include "machine.hpp"

namespace cabl {

enum class AccessKind : std::uint8_t { Read, Write };

struct Access {
    std::uint64_t address = 0; // byte address
    AccessKind kind = AccessKind::Read;
    unsigned core = 0;
};

struct LevelStats {
    std::uint64_t hits = 0;
    std::uint64_t misses = 0;
    std::uint64_t evictions = 0;
    std::uint64_t writebacks = 0;
};

struct CacheStats {
    std::vector<LevelStats> level;
    std::uint64_t slow_memory_reads = 0;
    std::uint64_t slow_memory_writes = 0;
};

struct AccessOutcome {
    unsigned hit_level = 0; // level index that hit; == num_levels when none did
    bool slow_read = false; // missed every level
};

class CacheSimulator {
public:
    explicit CacheSimulator(const MachineDescriptor& machine) : machine_(machine) {
        validate_machine(machine);
        levels_.reserve(machine.levels.size());
        for (const CacheLevel& lv : machine.levels) {
            LevelState st;
            st.geom = lv;
            const unsigned instances = lv.shared ? 1 : machine.cores;
            st.ways.assign(static_cast<std::size_t>(instances) * lv.num_sets * lv.associativity,
                           Way{});
            levels_.push_back(std::move(st));
        }
        stats_.level.resize(levels_.size());
    }

    AccessOutcome access(const Access& a) {
        if (a.core >= machine_.cores)
            throw std::out_of_range("cache access: core index out of range");
        const std::uint64_t line = a.address / machine_.levels[0].line_bytes;

        const unsigned n = static_cast<unsigned>(levels_.size());
        unsigned hit_at = n;
        for (unsigned li = 0; li < n; ++li) {
            if (probe_touch(li, a.core, line)) {
                ++stats_.level[li].hits;
                hit_at = li;
                break;
            }
            ++stats_.level[li].misses;
        }
        const bool slow = hit_at == n;
        if (slow) ++stats_.slow_memory_reads;

        // Install the line at every level that missed, outermost first.
        for (unsigned li = std::min(hit_at, n); li-- > 0;) fill(li, a.core, line);

        if (a.kind == AccessKind::Write) {
            Way* w = find(0, a.core, line);
            w->dirty = true; // write-allocate guarantees presence at L1
        }
        return {hit_at, slow};
    }

    const CacheStats& stats() const { return stats_; }
    const MachineDescriptor& machine() const { return machine_; }

private:
    struct Way {
        std::uint64_t tag = 0;
        bool valid = false;
        bool dirty = false;
    };

    struct LevelState {
        CacheLevel geom;
        // instance-major, then set-major; within a set, index 0 is MRU
        std::vector<Way> ways;
    };

    Way* set_base(unsigned li, unsigned core, std::uint64_t line) {
        LevelState& st = levels_[li];
        const unsigned inst = st.geom.shared ? 0 : core;
        const std::uint64_t set = line % st.geom.num_sets;
        const std::size_t offset =
            (static_cast<std::size_t>(inst) * st.geom.num_sets + set) * st.geom.associativity;
        return st.ways.data() + offset;
    }

    std::uint64_t tag_of(unsigned li, std::uint64_t line) const {
        return line / levels_[li].geom.num_sets;
    }

    // Demand probe: move the line to MRU position on hit.
    bool probe_touch(unsigned li, unsigned core, std::uint64_t line) {
        Way* base = set_base(li, core, line);
        const std::uint64_t tag = tag_of(li, line);
        const std::size_t assoc = levels_[li].geom.associativity;
        for (std::size_t w = 0; w < assoc; ++w) {
            if (base[w].valid && base[w].tag == tag) {
                std::rotate(base, base + w, base + w + 1);
                return true;
            }
        }
        return false;
    }

    Way* find(unsigned li, unsigned core, std::uint64_t line) {
        Way* base = set_base(li, core, line);
        const std::uint64_t tag = tag_of(li, line);
        const std::size_t assoc = levels_[li].geom.associativity;
        for (std::size_t w = 0; w < assoc; ++w)
            if (base[w].valid && base[w].tag == tag) return base + w;
        return nullptr;
    }

    // Insert the line at MRU; the LRU way falls out of the set.
    void fill(unsigned li, unsigned core, std::uint64_t line) {
        Way* base = set_base(li, core, line);
        const std::size_t assoc = levels_[li].geom.associativity;
        const Way victim = base[assoc - 1];
        std::rotate(base, base + assoc - 1, base + assoc);
        base[0] = Way{tag_of(li, line), true, false};
        if (victim.valid) {
            ++stats_.level[li].evictions;
            if (victim.dirty) {
                // victim shares the set with the incoming line
                const std::uint64_t set = line % levels_[li].geom.num_sets;
                writeback(li, core, victim.tag * levels_[li].geom.num_sets + set);
            }
        }
    }

    // A dirty victim leaves level li: deposit into the first outer level that
    // already holds the line, otherwise it reaches slow memory.
    void writeback(unsigned li, unsigned core, std::uint64_t line) {
        ++stats_.level[li].writebacks;
        for (unsigned lj = li + 1; lj < levels_.size(); ++lj) {
            if (Way* w = find(lj, core, line)) {
                w->dirty = true;
                return;
            }
        }
        ++stats_.slow_memory_writes;
    }

    MachineDescriptor machine_;
    std::vector<LevelState> levels_;
    CacheStats stats_;
};

inline CacheStats simulate(const MachineDescriptor& machine, const std::vector<Access>& trace) {
    CacheSimulator sim(machine);
    for (const Access& a : trace) sim.access(a);
    return sim.stats();
}

// ---------------------------------------------------------------------------
// Trace text format: one access per line, "R|W <hex address> <core>".
// ---------------------------------------------------------------------------

inline std::string dump_trace(const std::vector<Access>& trace) {
    std::ostringstream out;
    for (const Access& a : trace) {
        out << (a.kind == AccessKind::Read ? 'R' : 'W') << " 0x" << std::hex << a.address
            << std::dec << ' ' << a.core << '\n';
    }
    return out.str();
}

inline std::vector<Access> load_trace(const std::string& text) {
    std::vector<Access> trace;
    std::istringstream in(text);
    std::string kind, addr;
    unsigned core = 0;
    std::size_t line_no = 0;
    std::string line;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream ls(line);
        if (!(ls >> kind >> addr >> core) || (kind != "R" && kind != "W"))
            throw std::invalid_argument("trace parse failure at line " + std::to_string(line_no));
        Access a;
        a.kind = kind == "R" ? AccessKind::Read : AccessKind::Write;
        a.address = std::stoull(addr, nullptr, 16);
        a.core = core;
        trace.push_back(a);
    }
    return trace;
}

// ---------------------------------------------------------------------------
// Trace generators mirroring the kernels' exact single-threaded loop orders,
// at element granularity, core 0. Output updates appear as read/write pairs.
// ---------------------------------------------------------------------------

enum class LoopNest { DotSmall, DotLarge, GemvColBlocked, GemvRowMajor, Ger };

struct LoopNestSpec {
    LoopNest kind = LoopNest::DotSmall;
    std::uint64_t m = 0; // rows; unused for the dot kinds
    std::uint64_t n = 0;
    BlockingPlan plan;
    std::uint64_t element_bytes = 8;
    Layout layout = Layout::ColMajor; // Ger only; the gemv kinds imply theirs
    // byte base addresses; operand ranges must be disjoint
    std::uint64_t base_a = 0; // matrix A, or dot operand a
    std::uint64_t base_b = 0; // vector x / b
    std::uint64_t base_c = 0; // output c / C, or the dot scalar alpha
};

namespace detail {

inline std::uint64_t operand_a_bytes(const LoopNestSpec& s) {
    const bool vec = s.kind == LoopNest::DotSmall || s.kind == LoopNest::DotLarge;
    return (vec ? s.n : s.m * s.n) * s.element_bytes;
}
inline std::uint64_t operand_b_bytes(const LoopNestSpec& s) {
    return s.n * s.element_bytes;
}
inline std::uint64_t operand_c_bytes(const LoopNestSpec& s) {
    switch (s.kind) {
        case LoopNest::DotSmall:
        case LoopNest::DotLarge: return s.element_bytes;
        case LoopNest::Ger: return s.m * s.n * s.element_bytes;
        default: return s.m * s.element_bytes;
    }
}

inline bool ranges_overlap(std::uint64_t a0, std::uint64_t a1, std::uint64_t b0,
                           std::uint64_t b1) {
    return a0 < b1 && b0 < a1;
}

} // namespace detail

inline void validate_loop_nest_spec(const LoopNestSpec& s) {
    if (s.element_bytes < 1) throw std::invalid_argument("loop nest: element_bytes must be >= 1");
    if (s.n < 1) throw std::invalid_argument("loop nest: n must be >= 1");
    const bool needs_m = s.kind == LoopNest::GemvColBlocked || s.kind == LoopNest::GemvRowMajor ||
                         s.kind == LoopNest::Ger;
    if (needs_m && s.m < 1) throw std::invalid_argument("loop nest: m must be >= 1");
    if (s.kind == LoopNest::GemvColBlocked &&
        (s.plan.m_c < 1 || s.plan.n_c < 1 || s.plan.m_r < 1))
        throw std::invalid_argument("loop nest: plan blocks must be >= 1");
    if (s.kind == LoopNest::DotLarge && s.plan.dot_block < 1)
        throw std::invalid_argument("loop nest: plan.dot_block must be >= 1");

    const std::uint64_t a0 = s.base_a, a1 = s.base_a + detail::operand_a_bytes(s);
    const std::uint64_t b0 = s.base_b, b1 = s.base_b + detail::operand_b_bytes(s);
    const std::uint64_t c0 = s.base_c, c1 = s.base_c + detail::operand_c_bytes(s);
    if (detail::ranges_overlap(a0, a1, b0, b1) || detail::ranges_overlap(a0, a1, c0, c1) ||
        detail::ranges_overlap(b0, b1, c0, c1))
        throw std::invalid_argument("loop nest: operand address ranges overlap");
}

// Lays the operands out back to back on 4 KiB boundaries so compulsory miss
// counts are exact for any line size up to the page.
inline LoopNestSpec make_loop_nest_spec(LoopNest kind, std::uint64_t m, std::uint64_t n,
                                        const BlockingPlan& plan,
                                        std::uint64_t element_bytes = 8) {
    LoopNestSpec s;
    s.kind = kind;
    s.m = m;
    s.n = n;
    s.plan = plan;
    s.element_bytes = element_bytes;
    s.layout = kind == LoopNest::GemvRowMajor ? Layout::RowMajor : Layout::ColMajor;
    auto align_up = [](std::uint64_t v) { return (v + 4095) / 4096 * 4096; };
    s.base_a = 4096;
    s.base_b = align_up(s.base_a + detail::operand_a_bytes(s));
    s.base_c = align_up(s.base_b + detail::operand_b_bytes(s));
    validate_loop_nest_spec(s);
    return s;
}

inline std::vector<Access> generate_trace(const LoopNestSpec& s) {
    validate_loop_nest_spec(s);
    std::vector<Access> t;
    const std::uint64_t e = s.element_bytes;
    auto rd = [&](std::uint64_t base, std::uint64_t idx) {
        t.push_back({base + idx * e, AccessKind::Read, 0});
    };
    auto wr = [&](std::uint64_t base, std::uint64_t idx) {
        t.push_back({base + idx * e, AccessKind::Write, 0});
    };

    switch (s.kind) {
        case LoopNest::DotSmall:
            for (std::uint64_t i = 0; i < s.n; ++i) {
                rd(s.base_a, i);
                rd(s.base_b, i);
            }
            rd(s.base_c, 0); // alpha joins at the end
            wr(s.base_c, 0);
            break;

        case LoopNest::DotLarge: {
            for (std::uint64_t off = 0; off < s.n; off += s.plan.dot_block) {
                const std::uint64_t end = std::min(s.n, off + s.plan.dot_block);
                for (std::uint64_t i = off; i < end; ++i) {
                    rd(s.base_a, i);
                    rd(s.base_b, i);
                }
            }
            rd(s.base_c, 0);
            wr(s.base_c, 0);
            break;
        }

        case LoopNest::GemvColBlocked: {
            const std::uint64_t m_c = s.plan.m_c, n_c = s.plan.n_c, m_r = s.plan.m_r;
            for (std::uint64_t ic = 0; ic < s.m; ic += m_c) {
                const std::uint64_t ic_end = std::min(s.m, ic + m_c);
                for (std::uint64_t jc = 0; jc < s.n; jc += n_c) {
                    const std::uint64_t jc_end = std::min(s.n, jc + n_c);
                    for (std::uint64_t ir = ic; ir < ic_end; ir += m_r) {
                        const std::uint64_t rows = std::min(m_r, ic_end - ir);
                        for (std::uint64_t r = 0; r < rows; ++r) rd(s.base_c, ir + r);
                        for (std::uint64_t j = jc; j < jc_end; ++j) {
                            rd(s.base_b, j);
                            for (std::uint64_t r = 0; r < rows; ++r)
                                rd(s.base_a, (ir + r) + j * s.m); // col-major
                        }
                        for (std::uint64_t r = 0; r < rows; ++r) wr(s.base_c, ir + r);
                    }
                }
            }
            break;
        }

        case LoopNest::GemvRowMajor:
            for (std::uint64_t i = 0; i < s.m; ++i) {
                rd(s.base_c, i);
                for (std::uint64_t j = 0; j < s.n; ++j) {
                    rd(s.base_a, j + i * s.n); // row-major
                    rd(s.base_b, j);
                }
                wr(s.base_c, i);
            }
            break;

        case LoopNest::Ger:
            // Per element: read C_ij, read a_i, read b_j, write C_ij, walked
            // in layout-major order.
            if (s.layout == Layout::ColMajor) {
                for (std::uint64_t j = 0; j < s.n; ++j)
                    for (std::uint64_t i = 0; i < s.m; ++i) {
                        const std::uint64_t cij = i + j * s.m;
                        rd(s.base_c, cij);
                        rd(s.base_a, i);
                        rd(s.base_b, j);
                        wr(s.base_c, cij);
                    }
            } else {
                for (std::uint64_t i = 0; i < s.m; ++i)
                    for (std::uint64_t j = 0; j < s.n; ++j) {
                        const std::uint64_t cij = j + i * s.n;
                        rd(s.base_c, cij);
                        rd(s.base_a, i);
                        rd(s.base_b, j);
                        wr(s.base_c, cij);
                    }
            }
            break;
    }
    return t;
}

// ---------------------------------------------------------------------------
// Analysis-vs-simulation comparison. Slow-memory transfers happen in lines;
// the record carries both the line count and its element-granular equivalent
// so neither view is hidden. Misses are also attributed to the operand whose
// address range they fall in: the matrix's one-shot compulsory stream and the
// re-read vector streams can then be inspected separately.
// ---------------------------------------------------------------------------
struct AnalysisComparison {
    double lower_bound_raw = 0.0; // min reads at M = outermost capacity
    double lower_bound = 0.0;     // clamped at zero

    // The blocked-model access count (vector streams for the blocked gemv,
    // block loads for the dot), and the model's total element traffic once
    // the one-shot matrix/vector streams are added to it.
    std::optional<double> analytic_count;
    std::optional<double> analytic_elements;

    std::uint64_t elements_per_line = 1;
    std::uint64_t slow_read_lines = 0;
    std::uint64_t slow_read_elements = 0; // lines * elements_per_line
    std::uint64_t matrix_read_lines = 0;  // misses landing in A's range
    std::uint64_t vector_read_lines = 0;  // misses landing in b/c/alpha ranges

    // slow_read_elements / analytic_elements, when the model applies
    std::optional<double> ratio_vs_analytic;
};

inline AnalysisComparison validate_analysis(const LoopNestSpec& spec,
                                            const MachineDescriptor& machine) {
    validate_loop_nest_spec(spec);
    const std::vector<Access> trace = generate_trace(spec);

    CacheSimulator sim(machine);
    const std::uint64_t a0 = spec.base_a;
    const std::uint64_t a1 = a0 + detail::operand_a_bytes(spec);
    AnalysisComparison cmp;
    for (const Access& a : trace) {
        const AccessOutcome out = sim.access(a);
        if (!out.slow_read) continue;
        ++cmp.slow_read_lines;
        if (a.address >= a0 && a.address < a1 &&
            (spec.kind == LoopNest::GemvColBlocked || spec.kind == LoopNest::GemvRowMajor ||
             spec.kind == LoopNest::Ger))
            ++cmp.matrix_read_lines;
        else
            ++cmp.vector_read_lines;
    }

    const std::uint64_t line_bytes = machine.levels[0].line_bytes;
    cmp.elements_per_line = std::max<std::uint64_t>(1, line_bytes / spec.element_bytes);
    cmp.slow_read_elements = cmp.slow_read_lines * cmp.elements_per_line;

    const std::uint64_t M = machine.capacity_elements(machine.num_levels() - 1);
    const double mn = static_cast<double>(spec.m) * static_cast<double>(spec.n);
    TransferBounds b;
    switch (spec.kind) {
        case LoopNest::DotSmall:
        case LoopNest::DotLarge:
            b = dot_bounds(spec.n, M);
            cmp.analytic_count = blocked_dot_access_count(spec.n, spec.plan.dot_block);
            // both vectors stream once, plus the scalar
            cmp.analytic_elements = 2.0 * static_cast<double>(spec.n) + 1.0;
            break;
        case LoopNest::GemvColBlocked:
            b = gemv_bounds(spec.m, spec.n, M);
            cmp.analytic_count = blocked_gemv_access_count(spec.m, spec.n, spec.plan);
            // the matrix streams through exactly once on top of the counted
            // x/c traffic
            cmp.analytic_elements = mn + *cmp.analytic_count;
            break;
        case LoopNest::GemvRowMajor:
            b = gemv_bounds(spec.m, spec.n, M);
            break;
        case LoopNest::Ger:
            b = gem_bounds(spec.m, spec.n, M);
            break;
    }
    if (cmp.analytic_elements)
        cmp.ratio_vs_analytic =
            static_cast<double>(cmp.slow_read_elements) / *cmp.analytic_elements;
    cmp.lower_bound_raw = b.reads_raw;
    cmp.lower_bound = std::max(0.0, b.reads_raw);
    return cmp;
}

} // namespace cabl
