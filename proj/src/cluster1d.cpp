#include "ped/cluster1d.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "ped/error.hpp"

namespace ped::cluster1d {

std::string to_string(HeadMode mode) { return mode == HeadMode::MaxValue ? "max" : "centroid"; }

HeadMode parse_head_mode(const std::string &s) {
    if (s == "max")
        return HeadMode::MaxValue;
    if (s == "centroid")
        return HeadMode::NearestCentroid;
    throw Error(ErrorCode::InvalidArgument, "head mode must be \"max\" or \"centroid\", got \"" + s + "\"");
}

namespace {

// Sorted view of the input with prefix sums for O(1) interval costs.
struct SortedValues {
    std::vector<std::size_t> order;
    std::vector<double> s1;
    std::vector<double> s2;

    explicit SortedValues(std::span<const double> values) : order(values.size()) {
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
        s1.assign(values.size() + 1, 0.0);
        s2.assign(values.size() + 1, 0.0);
        for (std::size_t i = 0; i < order.size(); ++i) {
            const double v = values[order[i]];
            s1[i + 1] = s1[i] + v;
            s2[i + 1] = s2[i] + v * v;
        }
    }

    std::size_t size() const { return order.size(); }

    // Sum of squared deviations over sorted positions [lo, hi).
    double cost(std::size_t lo, std::size_t hi) const {
        const double m = static_cast<double>(hi - lo);
        const double sum = s1[hi] - s1[lo];
        const double c = (s2[hi] - s2[lo]) - sum * sum / m;
        return c > 0.0 ? c : 0.0;
    }

    double mean(std::size_t lo, std::size_t hi) const {
        return (s1[hi] - s1[lo]) / static_cast<double>(hi - lo);
    }
};

void check_input(std::span<const double> values, int k) {
    if (k < 1 || static_cast<std::size_t>(k) > values.size())
        throw Error(ErrorCode::BadK, "k = " + std::to_string(k) + " for " + std::to_string(values.size()) + " values");
    for (std::size_t i = 0; i < values.size(); ++i)
        if (!std::isfinite(values[i]))
            throw Error(ErrorCode::NonFiniteInput, "value at index " + std::to_string(i) + " is not finite");
}

Clustering build(const SortedValues &sv, std::vector<std::size_t> boundaries, double wcss) {
    const std::size_t n = sv.size();
    Clustering c;
    c.k = static_cast<int>(boundaries.size()) + 1;
    c.wcss = wcss;
    c.assignment.assign(n, 0);
    std::vector<std::size_t> starts{0};
    starts.insert(starts.end(), boundaries.begin(), boundaries.end());
    starts.push_back(n);
    for (int j = 0; j < c.k; ++j) {
        for (std::size_t pos = starts[static_cast<std::size_t>(j)]; pos < starts[static_cast<std::size_t>(j) + 1]; ++pos)
            c.assignment[sv.order[pos]] = j;
        c.centroids.push_back(sv.mean(starts[static_cast<std::size_t>(j)], starts[static_cast<std::size_t>(j) + 1]));
    }
    c.boundaries = std::move(boundaries);
    return c;
}

} // namespace

Clustering ckmeans(std::span<const double> values, int k) {
    check_input(values, k);
    const SortedValues sv(values);
    const std::size_t n = sv.size();
    const std::size_t kk = static_cast<std::size_t>(k);

    // cost[m][j]: best total for the first j sorted values in m + 1 clusters.
    // start[m][j]: sorted position where the last of those clusters begins.
    std::vector<std::vector<double>> cost(kk, std::vector<double>(n + 1, std::numeric_limits<double>::infinity()));
    std::vector<std::vector<std::size_t>> start(kk, std::vector<std::size_t>(n + 1, 0));
    for (std::size_t j = 1; j <= n; ++j)
        cost[0][j] = sv.cost(0, j);
    for (std::size_t m = 1; m < kk; ++m) {
        for (std::size_t j = m + 1; j <= n; ++j) {
            double best = std::numeric_limits<double>::infinity();
            std::size_t arg = m;
            for (std::size_t s = m; s < j; ++s) {
                const double candidate = cost[m - 1][s] + sv.cost(s, j);
                if (candidate < best) {
                    best = candidate;
                    arg = s;
                }
            }
            cost[m][j] = best;
            start[m][j] = arg;
        }
    }

    std::vector<std::size_t> boundaries(kk - 1);
    std::size_t end = n;
    for (std::size_t m = kk - 1; m >= 1; --m) {
        end = start[m][end];
        boundaries[m - 1] = end;
    }
    return build(sv, std::move(boundaries), cost[kk - 1][n]);
}

Clustering exhaustive_ckmeans(std::span<const double> values, int k) {
    if (values.size() > kExhaustiveLimit)
        throw Error(ErrorCode::TooLarge, std::to_string(values.size()) + " values exceeds the exhaustive limit of " +
                                             std::to_string(kExhaustiveLimit));
    check_input(values, k);
    const SortedValues sv(values);
    const std::size_t n = sv.size();
    const std::size_t cuts = static_cast<std::size_t>(k) - 1;

    std::vector<std::size_t> current(cuts);
    std::vector<std::size_t> best_cuts;
    double best = std::numeric_limits<double>::infinity();

    // Later breakpoints compared first, smallest wins, matching the DP backtrace.
    auto better_tie = [&](const std::vector<std::size_t> &a, const std::vector<std::size_t> &b) {
        return std::lexicographical_compare(a.rbegin(), a.rend(), b.rbegin(), b.rend());
    };
    auto evaluate = [&]() {
        double total = 0.0;
        std::size_t lo = 0;
        for (std::size_t i = 0; i <= cuts; ++i) {
            const std::size_t hi = i < cuts ? current[i] : n;
            total = i == 0 ? sv.cost(lo, hi) : total + sv.cost(lo, hi);
            lo = hi;
        }
        if (total < best || (total == best && better_tie(current, best_cuts))) {
            best = total;
            best_cuts = current;
        }
    };
    auto recurse = [&](auto &&self, std::size_t depth, std::size_t from) -> void {
        if (depth == cuts) {
            evaluate();
            return;
        }
        // Leave room for the remaining cuts, each cluster non-empty.
        for (std::size_t b = from; b + (cuts - depth - 1) < n; ++b) {
            current[depth] = b;
            self(self, depth + 1, b + 1);
        }
    };
    recurse(recurse, 0, 1);
    return build(sv, std::move(best_cuts), best);
}

std::vector<std::size_t> cluster_heads(const Clustering &c, std::span<const double> values, HeadMode mode) {
    if (c.assignment.size() != values.size() || c.k < 1)
        throw Error(ErrorCode::InconsistentClustering, "assignment covers " + std::to_string(c.assignment.size()) +
                                                           " of " + std::to_string(values.size()) + " values");
    const std::size_t k = static_cast<std::size_t>(c.k);
    std::vector<double> sums(k, 0.0);
    std::vector<std::size_t> sizes(k, 0);
    for (std::size_t i = 0; i < values.size(); ++i) {
        const int id = c.assignment[i];
        if (id < 0 || id >= c.k)
            throw Error(ErrorCode::InconsistentClustering, "cluster id " + std::to_string(id) + " outside 0.." +
                                                               std::to_string(c.k - 1));
        sums[static_cast<std::size_t>(id)] += values[i];
        ++sizes[static_cast<std::size_t>(id)];
    }
    for (std::size_t j = 0; j < k; ++j)
        if (sizes[j] == 0)
            throw Error(ErrorCode::InconsistentClustering, "cluster " + std::to_string(j) + " is empty");

    constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
    std::vector<std::size_t> heads(k, kNone);
    for (std::size_t i = 0; i < values.size(); ++i) {
        const auto j = static_cast<std::size_t>(c.assignment[i]);
        std::size_t &h = heads[j];
        if (h == kNone) {
            h = i;
            continue;
        }
        if (mode == HeadMode::MaxValue) {
            if (values[i] > values[h])
                h = i;
        } else {
            // Distances equal in exact arithmetic (two-member clusters) must stay ties after rounding.
            const double mean = sums[j] / static_cast<double>(sizes[j]);
            const double slack = 1e-12 * std::max({std::abs(mean), std::abs(values[i]), std::abs(values[h])});
            if (std::abs(values[i] - mean) < std::abs(values[h] - mean) - slack)
                h = i;
        }
    }
    return heads;
}

double direct_wcss(std::span<const double> values, const std::vector<int> &assignment, int k) {
    double total = 0.0;
    for (int j = 0; j < k; ++j) {
        double sum = 0.0;
        std::size_t m = 0;
        for (std::size_t i = 0; i < values.size(); ++i)
            if (assignment[i] == j) {
                sum += values[i];
                ++m;
            }
        if (m == 0)
            continue;
        const double mean = sum / static_cast<double>(m);
        for (std::size_t i = 0; i < values.size(); ++i)
            if (assignment[i] == j)
                total += (values[i] - mean) * (values[i] - mean);
    }
    return total;
}

} // namespace ped::cluster1d
