#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "oracles.hpp"
#include "ped/cluster1d.hpp"
#include "ped/error.hpp"

using namespace ped;
using namespace ped::cluster1d;

namespace {

ErrorCode code_of(auto &&fn) {
    try {
        fn();
    } catch (const Error &e) {
        return e.code();
    }
    FAIL("expected a ped::Error");
    return ErrorCode::InvalidArgument;
}

std::vector<double> random_values(std::mt19937_64 &rng, std::size_t n) {
    // Small integer grid so duplicates and cost ties actually occur.
    std::uniform_int_distribution<int> grid(0, 9);
    std::uniform_real_distribution<double> cont(-5.0, 5.0);
    const bool discrete = rng() % 2 == 0;
    std::vector<double> v(n);
    for (auto &x : v)
        x = discrete ? grid(rng) * 0.25 : cont(rng);
    return v;
}

} // namespace

TEST_CASE("ckmeans hand examples") {
    const std::vector<double> v{1, 2, 100, 101};
    const auto c = ckmeans(v, 2);
    CHECK(c.wcss == 1.0);
    CHECK(c.assignment == std::vector<int>{0, 0, 1, 1});
    CHECK(c.boundaries == std::vector<std::size_t>{2});
    CHECK(c.centroids == std::vector<double>{1.5, 100.5});

    const auto e = exhaustive_ckmeans(v, 2);
    CHECK(e.wcss == c.wcss);
    CHECK(e.assignment == c.assignment);

    const std::vector<double> w{3, -1, 4, 1, 5};
    const auto one = ckmeans(w, 1);
    CHECK(one.wcss == doctest::Approx(direct_wcss(w, one.assignment, 1)).epsilon(1e-12));
    CHECK(one.wcss == doctest::Approx(23.2));
    const auto all = ckmeans(w, 5);
    CHECK(all.wcss == 0.0);
    std::vector<int> sorted_ids = all.assignment;
    std::sort(sorted_ids.begin(), sorted_ids.end());
    CHECK(sorted_ids == std::vector<int>{0, 1, 2, 3, 4});

    CHECK(exhaustive_ckmeans(std::vector<double>{0, 0, 0}, 2).wcss == 0.0);
    CHECK(ckmeans(std::vector<double>{0, 0, 0}, 2).wcss == 0.0);
    const auto single = exhaustive_ckmeans(std::vector<double>{5}, 1);
    CHECK(single.wcss == 0.0);
    CHECK(single.assignment == std::vector<int>{0});
}

TEST_CASE("assignment is reported in input order") {
    const std::vector<double> v{100, 1, 101, 2};
    const auto c = ckmeans(v, 2);
    CHECK(c.assignment == std::vector<int>{1, 0, 1, 0});
}

TEST_CASE("equal-cost optima take the smallest last-cluster start") {
    // {0},{1,2} and {0,1},{2} both cost 0.5
    const std::vector<double> v{0, 1, 2};
    const auto c = ckmeans(v, 2);
    CHECK(c.wcss == 0.5);
    CHECK(c.boundaries == std::vector<std::size_t>{1});
    CHECK(exhaustive_ckmeans(v, 2).boundaries == c.boundaries);
}

TEST_CASE("errors") {
    const std::vector<double> v{1, 2, 3};
    CHECK(code_of([&] { ckmeans(v, 0); }) == ErrorCode::BadK);
    CHECK(code_of([&] { ckmeans(v, 4); }) == ErrorCode::BadK);
    CHECK(code_of([&] { ckmeans(std::vector<double>{1, std::nan(""), 2}, 1); }) == ErrorCode::NonFiniteInput);
    CHECK(code_of([&] { ckmeans(std::vector<double>{1, 1.0 / 0.0}, 1); }) == ErrorCode::NonFiniteInput);
    CHECK(code_of([] { exhaustive_ckmeans(std::vector<double>(17, 1.0), 2); }) == ErrorCode::TooLarge);
    CHECK(code_of([&] { exhaustive_ckmeans(v, 0); }) == ErrorCode::BadK);
}

TEST_CASE("cluster_heads") {
    const std::vector<double> v{0.9, 0.88, 0.1};
    const auto c = ckmeans(v, 2);
    CHECK(cluster_heads(c, v) == std::vector<std::size_t>{2, 0});

    const auto singles = ckmeans(v, 3);
    auto heads = cluster_heads(singles, v);
    std::sort(heads.begin(), heads.end());
    CHECK(heads == std::vector<std::size_t>{0, 1, 2});

    const std::vector<double> tied{0.5, 0.5};
    CHECK(cluster_heads(ckmeans(tied, 1), tied) == std::vector<std::size_t>{0});
    CHECK(cluster_heads(ckmeans(tied, 1), tied, HeadMode::NearestCentroid) == std::vector<std::size_t>{0});

    // max 10 sits far from the mean 4; the centroid head is the 3
    const std::vector<double> skew{1, 2, 3, 10, 100};
    const auto s = ckmeans(skew, 2);
    REQUIRE(s.assignment == std::vector<int>{0, 0, 0, 0, 1});
    CHECK(cluster_heads(s, skew) == std::vector<std::size_t>{3, 4});
    CHECK(cluster_heads(s, skew, HeadMode::NearestCentroid) == std::vector<std::size_t>{2, 4});

    auto broken = c;
    broken.assignment.pop_back();
    CHECK(code_of([&] { cluster_heads(broken, v); }) == ErrorCode::InconsistentClustering);
    broken = c;
    broken.assignment = {0, 0, 0};
    CHECK(code_of([&] { cluster_heads(broken, v); }) == ErrorCode::InconsistentClustering);
}

TEST_CASE("property: dynamic program equals exhaustive search exactly") {
    std::mt19937_64 rng(1);
    int mismatches = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = 1 + rng() % 12;
        const int k = 1 + static_cast<int>(rng() % n);
        const auto v = random_values(rng, n);
        const auto dp = ckmeans(v, k);
        const auto ex = exhaustive_ckmeans(v, k);
        if (dp.wcss != ex.wcss || dp.boundaries != ex.boundaries)
            ++mismatches;
    }
    CHECK(mismatches == 0);
}

TEST_CASE("property: contiguous partitions are optimal over all assignments") {
    std::mt19937_64 rng(12);
    for (int trial = 0; trial < 60; ++trial) {
        const std::size_t n = 1 + rng() % 7;
        const int k = 1 + static_cast<int>(rng() % n);
        const auto v = random_values(rng, n);
        CHECK(ckmeans(v, k).wcss == doctest::Approx(oracle::brute_force_kmeans(v, k)).epsilon(1e-9));
    }
}

TEST_CASE("property: structure of the optimal clustering") {
    std::mt19937_64 rng(77);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 1 + rng() % 40;
        const auto v = random_values(rng, n);
        const double sum_sq = std::inner_product(v.begin(), v.end(), v.begin(), 0.0);
        double previous = std::numeric_limits<double>::infinity();
        for (int k = 1; k <= static_cast<int>(n); ++k) {
            const auto c = ckmeans(v, k);

            // contiguity in sorted order, non-empty clusters
            std::vector<std::size_t> order(n);
            std::iota(order.begin(), order.end(), 0);
            std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return v[a] < v[b]; });
            std::vector<int> count(static_cast<std::size_t>(k), 0);
            for (std::size_t i = 0; i < n; ++i) {
                ++count[static_cast<std::size_t>(c.assignment[order[i]])];
                if (i > 0)
                    CHECK(c.assignment[order[i]] >= c.assignment[order[i - 1]]);
            }
            CHECK(std::count(count.begin(), count.end(), 0) == 0);

            // prefix-sum costs carry rounding on the scale of sum(v^2)
            CHECK(std::abs(c.wcss - direct_wcss(v, c.assignment, k)) <= 1e-12 * (1.0 + sum_sq));
            CHECK(c.wcss <= previous + 1e-12);
            previous = c.wcss;
            CHECK(cluster_heads(c, v).size() == static_cast<std::size_t>(k));
        }
    }
}

TEST_CASE("property: positive affine maps keep partition and heads") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 2 + rng() % 20;
        const int k = 1 + static_cast<int>(rng() % n);
        std::vector<double> v(n);
        for (auto &x : v)
            x = unit(rng); // continuous values: no exact cost ties to flip under rounding
        const double a = std::ldexp(1.0, static_cast<int>(rng() % 9) - 4); // a power of two stays exact
        const double b = std::uniform_real_distribution<double>(-3, 3)(rng);
        std::vector<double> w(n);
        std::transform(v.begin(), v.end(), w.begin(), [&](double x) { return a * x + b; });
        const auto cv = ckmeans(v, k), cw = ckmeans(w, k);
        CHECK(cv.assignment == cw.assignment);
        CHECK(cluster_heads(cv, v) == cluster_heads(cw, w));
        CHECK(cluster_heads(cv, v, HeadMode::NearestCentroid) == cluster_heads(cw, w, HeadMode::NearestCentroid));
    }
}

TEST_CASE("head mode strings") {
    CHECK(parse_head_mode("max") == HeadMode::MaxValue);
    CHECK(parse_head_mode(to_string(HeadMode::NearestCentroid)) == HeadMode::NearestCentroid);
    CHECK_THROWS_AS(parse_head_mode("median"), Error);
}
