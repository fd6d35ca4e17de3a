// Bench CLI: sweeps the kernels over problem sizes and thread counts, spot
// checks every configuration against the reference kernels, and writes CSV
// and an SVG performance plot.
//
//   cabl-bench --kernel all --sizes 256:1048576:4 --threads 1,4
//              --csv out.csv --svg out.svg
//
// Sizes are either a comma list (256,1024,4096) or a geometric range
// start:stop:factor. Matrix kernels run square (m = n = size); dot uses the
// size as the vector length. Exit code is nonzero when any spot check fails.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <cabl/bench.hpp>
#include <cabl/descriptor_json.hpp>

namespace {

std::uint64_t parse_u64(const std::string& tok, const char* what) {
    try {
        std::size_t used = 0;
        const std::uint64_t v = std::stoull(tok, &used);
        if (used != tok.size()) throw std::invalid_argument(tok);
        return v;
    } catch (const std::exception&) {
        throw std::runtime_error(std::string("invalid ") + what + " value '" + tok + "'");
    }
}

std::vector<std::uint64_t> parse_sizes(const std::string& spec) {
    std::vector<std::uint64_t> sizes;
    const auto colon1 = spec.find(':');
    if (colon1 != std::string::npos) {
        const auto colon2 = spec.find(':', colon1 + 1);
        if (colon2 == std::string::npos)
            throw std::runtime_error("--sizes range spec must be start:stop:factor");
        const std::uint64_t start = parse_u64(spec.substr(0, colon1), "--sizes");
        const std::uint64_t stop = parse_u64(spec.substr(colon1 + 1, colon2 - colon1 - 1), "--sizes");
        const std::uint64_t factor = parse_u64(spec.substr(colon2 + 1), "--sizes");
        if (start < 1 || factor < 2)
            throw std::runtime_error("--sizes range needs start >= 1 and factor >= 2");
        for (std::uint64_t s = start; s <= stop; s *= factor) sizes.push_back(s);
        return sizes;
    }
    std::istringstream in(spec);
    std::string tok;
    while (std::getline(in, tok, ',')) {
        if (!tok.empty()) sizes.push_back(parse_u64(tok, "--sizes"));
    }
    return sizes;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"cache-aware level-1/2 kernel benchmark"};

    std::string machine_path;
    std::string kernel = "all";
    std::string sizes_spec = "256,1024,4096,16384";
    std::string threads_spec = "1";
    unsigned reps = 5;
    std::string csv_path, svg_path;
    std::uint64_t seed = 42;
    bool bounds = false;

    app.add_option("--machine", machine_path, "machine descriptor JSON (default: built-in)");
    app.add_option("--kernel", kernel, "dot|ger|gemv-row|gemv-col|all")
        ->check(CLI::IsMember({"dot", "ger", "gemv-row", "gemv-col", "all"}));
    app.add_option("--sizes", sizes_spec, "comma list or start:stop:factor");
    app.add_option("--threads", threads_spec, "comma list of thread counts");
    app.add_option("--reps", reps, "timed repetitions per configuration (>= 3)");
    app.add_option("--csv", csv_path, "CSV output path (default: stdout)");
    app.add_option("--svg", svg_path, "SVG plot output path");
    app.add_option("--seed", seed, "seed for buffer initialization");
    app.add_flag("--bounds", bounds, "append transfer-bound columns to the CSV");

    CLI11_PARSE(app, argc, argv);

    try {
        cabl::SweepConfig config;
        if (!machine_path.empty()) config.machine = cabl::load_descriptor_file(machine_path);
        if (kernel == "all")
            config.kernels = {"dot", "ger", "gemv-row", "gemv-col"};
        else
            config.kernels = {kernel};
        config.sizes = parse_sizes(sizes_spec);
        std::istringstream ts(threads_spec);
        std::string tok;
        config.threads.clear();
        while (std::getline(ts, tok, ','))
            if (!tok.empty())
                config.threads.push_back(static_cast<unsigned>(parse_u64(tok, "--threads")));
        config.reps = reps;
        config.seed = seed;
        config.bounds = bounds;

        const cabl::SweepResult result = cabl::run_sweep(config);

        for (const std::string& f : result.failures) std::cerr << "FAILED " << f << '\n';

        if (!result.records.empty()) {
            const std::string csv = cabl::emit_csv(result.records);
            if (csv_path.empty()) {
                std::cout << csv;
            } else {
                std::ofstream out(csv_path);
                if (!out) throw std::runtime_error("cannot write " + csv_path);
                out << csv;
            }
            if (!svg_path.empty()) {
                std::ofstream out(svg_path);
                if (!out) throw std::runtime_error("cannot write " + svg_path);
                out << cabl::emit_svg(result.records);
            }
        }

        return result.failures.empty() ? 0 : 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
}
