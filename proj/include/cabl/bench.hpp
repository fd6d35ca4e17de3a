#pragma once

// Sweep driver and output emitters for the bench CLI. Every timed
// configuration is spot-checked against its reference kernel first; a
// mismatch aborts that configuration and is reported, never timed. Timing
// uses one warm-up plus `reps` timed runs; short kernels are batched inside
// one timed region so each measurement covers at least a few milliseconds.
// Flop accounting: dot = 2n, gemv = 2mn, ger = 2mn.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "dense.hpp"
#include "io_bounds.hpp"
#include "kernels.hpp"
#include "machine.hpp"

namespace cabl {

struct BenchRecord {
    std::string kernel; // dot | ger | gemv-row | gemv-col
    std::uint64_t m = 0;
    std::uint64_t n = 0;
    unsigned threads = 1;
    unsigned reps = 0;
    double min_s = 0.0;
    double median_s = 0.0;
    double gflops = 0.0;
    double checksum = 0.0; // sum of output elements; plausibility, not correctness
    std::optional<BoundReport> bound; // attached when the sweep ran with bounds
};

struct SweepConfig {
    MachineDescriptor machine = default_machine();
    std::vector<std::string> kernels = {"dot", "ger", "gemv-row", "gemv-col"};
    std::vector<std::uint64_t> sizes = {256, 1024, 4096};
    std::vector<unsigned> threads = {1};
    unsigned reps = 5;
    std::uint64_t seed = 42;
    bool bounds = false;
    double target_batch_seconds = 2e-3;
};

struct SweepResult {
    std::vector<BenchRecord> records;
    std::vector<std::string> failures; // one message per aborted configuration
};

namespace detail {

inline double now_seconds() {
    using clock = std::chrono::steady_clock;
    return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

inline void fill_random(double* data, std::size_t n, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    for (std::size_t i = 0; i < n; ++i) data[i] = dist(rng);
}

inline double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return v[v.size() / 2];
}

inline double flops_of(const std::string& kernel, std::uint64_t m, std::uint64_t n) {
    if (kernel == "dot") return 2.0 * static_cast<double>(n);
    return 2.0 * static_cast<double>(m) * static_cast<double>(n);
}

} // namespace detail

// Runs one (kernel, size, threads) configuration: spot check, warm-up, reps
// timed runs. Returns nothing and appends a failure message when the spot
// check misses.
inline void run_config(const std::string& kernel, std::uint64_t size, unsigned threads,
                       const SweepConfig& config, const BlockingPlan& plan,
                       SweepResult& result) {
    const double eps = std::numeric_limits<double>::epsilon();
    ExecPolicy policy(plan, threads);
    std::mt19937_64 rng(config.seed ^ (size * 0x9e3779b97f4a7c15ULL) ^
                        (threads * 0x2545f4914f6cdd1dULL) ^ std::hash<std::string>{}(kernel));

    BenchRecord rec;
    rec.kernel = kernel;
    rec.threads = threads;
    rec.reps = config.reps;

    double checksum = 0.0;
    std::function<void()> timed_call;
    std::optional<std::string> failure;

    if (kernel == "dot") {
        const std::uint64_t n = size;
        rec.m = 0;
        rec.n = n;
        Vector<double> x(n), y(n);
        detail::fill_random(x.data(), n, rng);
        detail::fill_random(y.data(), n, rng);

        const double got = dot(x, y, 0.0, policy);
        const double want = dot_ref(x, y, 0.0);
        double sumabs = 0.0;
        for (std::uint64_t p = 0; p < n; ++p) sumabs += std::abs(x[p] * y[p]);
        if (std::abs(got - want) > static_cast<double>(n) * eps * sumabs) {
            failure = "max abs diff = " + std::to_string(std::abs(got - want));
        }
        checksum = got;
        timed_call = [x = std::move(x), y = std::move(y), policy]() {
            volatile double sink = dot(x, y, 0.0, policy);
            (void)sink;
        };
    } else {
        const std::uint64_t m = size, n = size;
        rec.m = m;
        rec.n = n;
        const Layout layout = kernel == "gemv-col" ? Layout::ColMajor : Layout::RowMajor;
        DenseMatrix<double> A(m, n, layout);
        detail::fill_random(A.data(), A.size(), rng);

        if (kernel == "ger") {
            Vector<double> x(m), y(n);
            detail::fill_random(x.data(), m, rng);
            detail::fill_random(y.data(), n, rng);
            DenseMatrix<double> C = A; // random initial C
            DenseMatrix<double> Cref = A;
            ger(x, y, C, policy);
            ger_ref(x, y, Cref);
            if (!(C == Cref)) {
                double maxdiff = 0.0;
                for (std::size_t i = 0; i < C.size(); ++i)
                    maxdiff = std::max(maxdiff, std::abs(C.data()[i] - Cref.data()[i]));
                failure = "not bitwise equal, max abs diff = " + std::to_string(maxdiff);
            }
            for (std::size_t i = 0; i < C.size(); ++i) checksum += C.data()[i];
            timed_call = [x = std::move(x), y = std::move(y), C = std::move(C),
                          policy]() mutable { ger(x, y, C, policy); };
        } else {
            Vector<double> x(n), c0(m);
            detail::fill_random(x.data(), n, rng);
            detail::fill_random(c0.data(), m, rng);
            Vector<double> c = c0;
            Vector<double> cref = c0;
            if (kernel == "gemv-col")
                gemv_col_major(A, x, c, policy);
            else
                gemv_row_major(A, x, c, policy);
            gemv_ref(A, x, cref);
            double maxdiff = 0.0;
            bool bad = false;
            for (std::uint64_t i = 0; i < m; ++i) {
                double rowabs = 0.0;
                for (std::uint64_t j = 0; j < n; ++j) rowabs += std::abs(A(i, j) * x[j]);
                const double diff = std::abs(c[i] - cref[i]);
                if (diff > static_cast<double>(n) * eps * rowabs) bad = true;
                maxdiff = std::max(maxdiff, diff);
            }
            if (bad) failure = "max abs diff = " + std::to_string(maxdiff);
            for (std::uint64_t i = 0; i < m; ++i) checksum += c[i];
            const bool col = kernel == "gemv-col";
            timed_call = [A = std::move(A), x = std::move(x), c = std::move(c), policy,
                          col]() mutable {
                if (col)
                    gemv_col_major(A, x, c, policy);
                else
                    gemv_row_major(A, x, c, policy);
            };
        }
    }

    if (failure) {
        result.failures.push_back("kernel=" + kernel + " m=" + std::to_string(rec.m) +
                                  " n=" + std::to_string(rec.n) +
                                  " threads=" + std::to_string(threads) +
                                  ": oracle mismatch, " + *failure);
        return;
    }

    // Warm-up doubles as batch calibration.
    double t0 = detail::now_seconds();
    timed_call();
    double once = detail::now_seconds() - t0;
    std::uint64_t batch = 1;
    if (once > 0.0 && once < config.target_batch_seconds)
        batch = std::min<std::uint64_t>(
            1000000, static_cast<std::uint64_t>(config.target_batch_seconds / once) + 1);

    std::vector<double> times;
    times.reserve(config.reps);
    for (unsigned r = 0; r < config.reps; ++r) {
        t0 = detail::now_seconds();
        for (std::uint64_t b = 0; b < batch; ++b) timed_call();
        const double elapsed = detail::now_seconds() - t0;
        times.push_back(elapsed / static_cast<double>(batch));
    }

    rec.min_s = *std::min_element(times.begin(), times.end());
    rec.median_s = std::max(detail::median_of(times), 1e-12);
    rec.gflops = detail::flops_of(kernel, rec.m, rec.n) / rec.median_s / 1e9;
    rec.checksum = checksum;

    if (config.bounds) {
        OperationInstance op;
        std::size_t level = 1; // bounds at the blocking level (L2)
        if (kernel == "dot") {
            op = {OpKind::Dot, 0, rec.n};
            level = 0; // the dot blocks for L1
        } else if (kernel == "ger") {
            op = {OpKind::Gem, rec.m, rec.n};
        } else {
            op = {OpKind::Gemv, rec.m, rec.n};
        }
        rec.bound = report(op, config.machine, plan, level);
    }

    result.records.push_back(std::move(rec));
}

inline SweepResult run_sweep(const SweepConfig& config) {
    if (config.reps < 3) throw std::invalid_argument("run_sweep: repetitions must be >= 3");
    if (config.kernels.empty() || config.sizes.empty() || config.threads.empty())
        throw std::invalid_argument("run_sweep: kernels, sizes and threads must be non-empty");
    for (const std::string& k : config.kernels)
        if (k != "dot" && k != "ger" && k != "gemv-row" && k != "gemv-col")
            throw std::invalid_argument("run_sweep: unknown kernel '" + k + "'");
    for (std::uint64_t s : config.sizes)
        if (s < 1) throw std::invalid_argument("run_sweep: sizes must be >= 1");

    const BlockingPlan plan = derive_blocking_plan(config.machine);
    for (unsigned t : config.threads)
        if (t < 1 || t > plan.max_threads)
            throw std::invalid_argument("run_sweep: thread count out of range for this machine");

    SweepResult result;
    for (const std::string& kernel : config.kernels)
        for (std::uint64_t size : config.sizes)
            for (unsigned threads : config.threads)
                run_config(kernel, size, threads, config, plan, result);
    return result;
}

// ---------------------------------------------------------------------------
// CSV. Fixed header; doubles carry 9 significant digits. With bounds attached
// the header gains the report columns; predicted_reads_blocked stays empty
// for kernels without a blocked-model count.
// ---------------------------------------------------------------------------

inline constexpr const char* kCsvHeader = "kernel,m,n,threads,reps,min_s,median_s,gflops,checksum";
inline constexpr const char* kCsvBoundsSuffix =
    ",min_reads_raw,min_reads,min_stores_raw,min_stores,fast_memory_elements,"
    "predicted_reads_blocked";

namespace detail {

inline std::string fmt_g9(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

} // namespace detail

inline std::string emit_csv(const std::vector<BenchRecord>& records) {
    if (records.empty()) throw std::invalid_argument("emit_csv: no records");
    const bool with_bounds = records.front().bound.has_value();
    std::ostringstream out;
    out << kCsvHeader << (with_bounds ? kCsvBoundsSuffix : "") << '\n';
    for (const BenchRecord& r : records) {
        out << r.kernel << ',' << r.m << ',' << r.n << ',' << r.threads << ',' << r.reps << ','
            << detail::fmt_g9(r.min_s) << ',' << detail::fmt_g9(r.median_s) << ','
            << detail::fmt_g9(r.gflops) << ',' << detail::fmt_g9(r.checksum);
        if (with_bounds) {
            const BoundReport& b = r.bound.value();
            out << ',' << detail::fmt_g9(b.min_reads_raw) << ',' << detail::fmt_g9(b.min_reads)
                << ',' << detail::fmt_g9(b.min_stores_raw) << ','
                << detail::fmt_g9(b.min_stores) << ',' << b.fast_memory_elements << ',';
            if (b.predicted_reads_blocked) out << detail::fmt_g9(*b.predicted_reads_blocked);
        }
        out << '\n';
    }
    return out.str();
}

inline std::vector<BenchRecord> parse_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw std::invalid_argument("parse_csv: empty document");
    bool with_bounds = false;
    if (line == std::string(kCsvHeader) + kCsvBoundsSuffix)
        with_bounds = true;
    else if (line != kCsvHeader)
        throw std::invalid_argument("parse_csv: unexpected header");

    std::vector<BenchRecord> records;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::string field;
        std::istringstream ls(line);
        while (std::getline(ls, field, ',')) f.push_back(field);
        if (line.back() == ',') f.push_back("");
        const std::size_t want = with_bounds ? 15 : 9;
        if (f.size() != want) throw std::invalid_argument("parse_csv: bad field count");

        BenchRecord r;
        r.kernel = f[0];
        r.m = std::stoull(f[1]);
        r.n = std::stoull(f[2]);
        r.threads = static_cast<unsigned>(std::stoul(f[3]));
        r.reps = static_cast<unsigned>(std::stoul(f[4]));
        r.min_s = std::stod(f[5]);
        r.median_s = std::stod(f[6]);
        r.gflops = std::stod(f[7]);
        r.checksum = std::stod(f[8]);
        if (with_bounds) {
            BoundReport b;
            b.min_reads_raw = std::stod(f[9]);
            b.min_reads = std::stod(f[10]);
            b.min_stores_raw = std::stod(f[11]);
            b.min_stores = std::stod(f[12]);
            b.fast_memory_elements = std::stoull(f[13]);
            if (!f[14].empty()) b.predicted_reads_blocked = std::stod(f[14]);
            r.bound = b;
        }
        records.push_back(std::move(r));
    }
    return records;
}

// ---------------------------------------------------------------------------
// SVG: log-x problem-size vs GFLOP/s line chart, one series per
// (kernel, threads) pair, legend on the right.
// ---------------------------------------------------------------------------

enum class SvgSizeAxis { total_elements, n_dimension };

inline std::string emit_svg(const std::vector<BenchRecord>& records,
                            SvgSizeAxis axis = SvgSizeAxis::total_elements) {
    if (records.empty()) throw std::invalid_argument("emit_svg: no records");

    auto size_of = [&](const BenchRecord& r) -> double {
        if (axis == SvgSizeAxis::n_dimension || r.kernel == "dot")
            return static_cast<double>(r.n);
        return static_cast<double>(r.m) * static_cast<double>(r.n);
    };

    std::map<std::pair<std::string, unsigned>, std::vector<std::pair<double, double>>> series;
    double xmin = std::numeric_limits<double>::max(), xmax = 0.0, ymax = 0.0;
    for (const BenchRecord& r : records) {
        const double x = std::log10(std::max(1.0, size_of(r)));
        series[{r.kernel, r.threads}].push_back({x, r.gflops});
        xmin = std::min(xmin, x);
        xmax = std::max(xmax, x);
        ymax = std::max(ymax, r.gflops);
    }
    if (xmax - xmin < 1e-9) xmax = xmin + 1.0;
    if (ymax <= 0.0) ymax = 1.0;
    ymax *= 1.05;

    const double W = 960, H = 560, L = 70, R = 220, T = 40, B = 60;
    const double pw = W - L - R, ph = H - T - B;
    auto px = [&](double x) { return L + (x - xmin) / (xmax - xmin) * pw; };
    auto py = [&](double y) { return T + ph - y / ymax * ph; };

    static const char* palette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

    std::ostringstream svg;
    svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
        << "\" viewBox=\"0 0 " << W << " " << H << "\">\n";
    svg << "  <rect width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";
    svg << "  <line x1=\"" << L << "\" y1=\"" << T + ph << "\" x2=\"" << L + pw << "\" y2=\""
        << T + ph << "\" stroke=\"black\"/>\n";
    svg << "  <line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << T + ph
        << "\" stroke=\"black\"/>\n";

    // x ticks at integer powers of ten
    for (int k = static_cast<int>(std::ceil(xmin)); k <= static_cast<int>(std::floor(xmax));
         ++k) {
        const double x = px(k);
        svg << "  <line x1=\"" << x << "\" y1=\"" << T + ph << "\" x2=\"" << x << "\" y2=\""
            << T + ph + 5 << "\" stroke=\"black\"/>\n";
        svg << "  <text x=\"" << x << "\" y=\"" << T + ph + 20
            << "\" font-size=\"12\" text-anchor=\"middle\">1e" << k << "</text>\n";
    }
    // y ticks
    for (int k = 0; k <= 5; ++k) {
        const double yv = ymax * k / 5.0;
        const double y = py(yv);
        svg << "  <line x1=\"" << L - 5 << "\" y1=\"" << y << "\" x2=\"" << L << "\" y2=\"" << y
            << "\" stroke=\"black\"/>\n";
        svg << "  <text x=\"" << L - 9 << "\" y=\"" << y + 4
            << "\" font-size=\"12\" text-anchor=\"end\">" << detail::fmt_g9(yv) << "</text>\n";
    }
    svg << "  <text x=\"" << L + pw / 2 << "\" y=\"" << H - 15
        << "\" font-size=\"13\" text-anchor=\"middle\">problem size (elements, log)</text>\n";
    svg << "  <text x=\"18\" y=\"" << T + ph / 2
        << "\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 18 " << T + ph / 2
        << ")\">GFLOP/s</text>\n";

    std::size_t idx = 0;
    double ly = T + 10;
    for (auto& [key, pts] : series) {
        std::sort(pts.begin(), pts.end());
        const char* color = palette[idx % 10];
        svg << "  <polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
        for (const auto& [x, y] : pts) svg << px(x) << ',' << py(y) << ' ';
        svg << "\"/>\n";
        svg << "  <line x1=\"" << L + pw + 15 << "\" y1=\"" << ly << "\" x2=\"" << L + pw + 45
            << "\" y2=\"" << ly << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
        svg << "  <text x=\"" << L + pw + 52 << "\" y=\"" << ly + 4 << "\" font-size=\"12\">"
            << key.first << " (t=" << key.second << ")</text>\n";
        ly += 18;
        ++idx;
    }
    svg << "</svg>\n";
    return svg.str();
}

} // namespace cabl
