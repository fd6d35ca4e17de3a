#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include <cabl/io_bounds.hpp>

using namespace cabl;

TEST_CASE("fma_max closed form", "[io]") {
    CHECK(fma_max(9.0, 3) == std::pow(3.0, 1.5));
    CHECK(fma_max(4.0, 2) == 4.0);
    for (int n = 2; n <= 6; ++n) CHECK(fma_max(static_cast<double>(n), n) == 1.0);
    CHECK_THROWS_AS(fma_max(0.0, 3), std::invalid_argument);
    CHECK_THROWS_AS(fma_max(4.0, 1), std::invalid_argument);
}

TEST_CASE("fma_max identity at integer N", "[io]") {
    for (int n = 2; n <= 5; ++n)
        for (int N = 1; N <= 50; ++N) {
            const double nd = n, Nd = N;
            CHECK(fma_max(nd * Nd, n) == std::pow(Nd, nd / (nd - 1.0)));
        }
}

TEST_CASE("gemv transfer bounds", "[io]") {
    const TransferBounds big = gemv_bounds(1000, 1000, 256);
    CHECK(big.reads_raw == 123488.0);
    CHECK(big.stores_raw == 125232.0);

    const TransferBounds tiny = gemv_bounds(1, 1, 1);
    CHECK(tiny.reads_raw == -1.0);

    CHECK(gemv_bounds(100, 100, 100).reads_raw == 1700.0);
}

TEST_CASE("gem transfer bounds", "[io]") {
    const TransferBounds b = gem_bounds(100, 100, 100);
    CHECK(b.reads_raw == -8200.0);
    CHECK(b.stores_raw == 11700.0);

    CHECK(gem_bounds(1, 1, 1).stores_raw == 0.0);
    CHECK(gem_bounds(1000, 1000, 4096).reads_raw < 0.0);
}

TEST_CASE("dot transfer bounds", "[io]") {
    const TransferBounds b = dot_bounds(1024, 16);
    CHECK(b.reads_raw == 128.0);
    CHECK_THAT(b.stores_raw, Catch::Matchers::WithinRel(112.0, 1e-12));

    for (std::uint64_t M : {4ull, 16ull, 64ull})
        CHECK(dot_bounds(M * M, M).reads_raw == 0.0);

    CHECK(dot_bounds(1000000, 4096).reads_raw < 0.0);
}

TEST_CASE("blocked access counts", "[io]") {
    BlockingPlan plan;
    plan.m_c = plan.n_c = 256;
    CHECK(blocked_gemv_access_count(1024, 1024, plan) == 9216.0);
    CHECK(blocked_gemv_access_count(512, 256, plan) == 1536.0);

    plan.m_c = plan.n_c = 300; // single block when m = n = block
    CHECK(blocked_gemv_access_count(300, 300, plan) == 2.0 * 300 + 300);

    CHECK(blocked_dot_access_count(8192, 2048) == 8.0);
    CHECK(blocked_dot_access_count(2048, 2048) == 2.0);
}

TEST_CASE("blocked gemv count ties to the bound's leading term at square M", "[io]") {
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<std::uint64_t> dim(1, 1 << 20);
    for (std::uint64_t M : {16ull, 64ull, 256ull, 4096ull}) {
        BlockingPlan plan;
        plan.m_c = plan.n_c = isqrt_floor(M);
        for (int i = 0; i < 200; ++i) {
            const std::uint64_t m = dim(rng), n = dim(rng);
            const double lhs = blocked_gemv_access_count(m, n, plan);
            const double rhs = 2.0 * static_cast<double>(m) * static_cast<double>(n) /
                                   std::sqrt(static_cast<double>(M)) +
                               static_cast<double>(m);
            CHECK(lhs == rhs);
        }
    }
}

TEST_CASE("speedup bound", "[io]") {
    // 0.9 is not exactly representable; the hand value holds to the ulp
    CHECK_THAT(speedup_bound(0.9, 0.0), Catch::Matchers::WithinULP(10.0, 2));
    CHECK(speedup_bound(0.0, 0.0) == 1.0);
    CHECK(speedup_bound(0.5, 0.5) == 1.5);
    CHECK_THROWS_AS(speedup_bound(1.0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(speedup_bound(-0.1, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(speedup_bound(0.5, -1.0), std::invalid_argument);
}

TEST_CASE("speedup bound is monotone", "[io]") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> pd(0.0, 0.999);
    std::uniform_real_distribution<double> od(0.0, 5.0);
    for (int i = 0; i < 300; ++i) {
        double p1 = pd(rng), p2 = pd(rng);
        if (p1 > p2) std::swap(p1, p2);
        const double o = od(rng);
        if (p1 != p2) CHECK(speedup_bound(p1, o) < speedup_bound(p2, o));
        double o1 = od(rng), o2 = od(rng);
        if (o1 > o2) std::swap(o1, o2);
        if (o1 != o2) CHECK(speedup_bound(p1, o1) > speedup_bound(p1, o2));
    }
}

TEST_CASE("raw bounds are monotone in n and in M", "[io]") {
    std::mt19937_64 rng(5);
    std::uniform_int_distribution<std::uint64_t> dim(1, 1 << 16);
    std::uniform_int_distribution<std::uint64_t> cap(1, 1 << 14);
    for (int i = 0; i < 300; ++i) {
        const std::uint64_t m = dim(rng), M = cap(rng);
        std::uint64_t n1 = dim(rng), n2 = dim(rng);
        if (n1 > n2) std::swap(n1, n2);
        CHECK(gemv_bounds(m, n1, M).reads_raw <= gemv_bounds(m, n2, M).reads_raw);
        CHECK(gemv_bounds(m, n1, M).stores_raw <= gemv_bounds(m, n2, M).stores_raw);
        // the printed gem read bound is decreasing in n once sqrt(M) > 2,
        // so only its store bound is monotone
        CHECK(gem_bounds(m, n1, M).stores_raw <= gem_bounds(m, n2, M).stores_raw);
        CHECK(dot_bounds(n1, M).reads_raw <= dot_bounds(n2, M).reads_raw);
        CHECK(dot_bounds(n1, M).stores_raw <= dot_bounds(n2, M).stores_raw);

        std::uint64_t M1 = cap(rng), M2 = cap(rng);
        if (M1 > M2) std::swap(M1, M2);
        const double lead1 = 2.0 * double(m) * double(n1) / std::sqrt(double(M1));
        const double lead2 = 2.0 * double(m) * double(n1) / std::sqrt(double(M2));
        CHECK(lead1 >= lead2);
    }
}

TEST_CASE("bound report clamps and aggregates", "[io]") {
    const MachineDescriptor machine = default_machine();
    const BlockingPlan plan = derive_blocking_plan(machine);

    SECTION("gemv 1024x1024 at L2 composes the component formulas") {
        const BoundReport r = report({OpKind::Gemv, 1024, 1024}, machine, plan, 1);
        const std::uint64_t M = machine.capacity_elements(1);
        CHECK(M == 65536);
        const TransferBounds b = gemv_bounds(1024, 1024, M);
        CHECK(r.min_reads_raw == b.reads_raw);
        CHECK(r.min_stores_raw == b.stores_raw);
        CHECK(r.min_reads == std::max(0.0, b.reads_raw));
        CHECK(r.fast_memory_elements == M);
        REQUIRE(r.predicted_reads_blocked.has_value());
        CHECK(*r.predicted_reads_blocked == 9216.0);
    }
    SECTION("dot at one block predicts two block loads") {
        const BoundReport r = report({OpKind::Dot, 0, plan.dot_block}, machine, plan, 0);
        REQUIRE(r.predicted_reads_blocked.has_value());
        CHECK(*r.predicted_reads_blocked == 2.0);
    }
    SECTION("degenerate gem clamps to zero") {
        const BoundReport r = report({OpKind::Gem, 1, 1}, machine, plan, 0);
        CHECK(r.min_reads == 0.0);
        CHECK(r.min_stores == 0.0);
        CHECK(r.min_reads_raw < 0.0);
        CHECK_FALSE(r.predicted_reads_blocked.has_value());
    }
    SECTION("invalid instances and levels are rejected") {
        CHECK_THROWS_AS(report({OpKind::Gemv, 0, 5}, machine, plan, 1), std::invalid_argument);
        CHECK_THROWS_AS(report({OpKind::Dot, 0, 0}, machine, plan, 0), std::invalid_argument);
        CHECK_THROWS_AS(report({OpKind::Dot, 0, 8}, machine, plan, 5), std::invalid_argument);
    }
}

TEST_CASE("clamping never yields negative bounds", "[io]") {
    const MachineDescriptor machine = default_machine();
    const BlockingPlan plan = derive_blocking_plan(machine);
    std::mt19937_64 rng(17);
    std::uniform_int_distribution<std::uint64_t> dim(1, 1 << 14);
    for (int i = 0; i < 300; ++i) {
        const OperationInstance op{static_cast<OpKind>(i % 3), dim(rng), dim(rng)};
        const BoundReport r = report(op, machine, plan, i % 2);
        CHECK(r.min_reads >= 0.0);
        CHECK(r.min_stores >= 0.0);
        CHECK(r.min_reads == std::max(0.0, r.min_reads_raw));
        CHECK(r.min_stores == std::max(0.0, r.min_stores_raw));
    }
}
