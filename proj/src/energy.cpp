#include "ped/energy.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include "ped/io.hpp"

namespace ped::energy {

std::string to_string(Variant v) { return v == Variant::V ? "v" : "u"; }

Variant parse_variant(const std::string &s) {
    if (s == "v" || s == "V")
        return Variant::V;
    if (s == "u" || s == "U")
        return Variant::U;
    throw Error(ErrorCode::InvalidArgument, "variant must be \"v\" or \"u\", got \"" + s + "\"");
}

namespace {

// Upper-triangle pass in row blocks; every unordered pair lands in (label_a, label_b),
// then the result is symmetrised so diagonal entries count both orders.
template <typename DistFn>
MatrixXd grouped_sums(Eigen::Index n, const std::vector<int> &labels0, int p, DistFn &&dist) {
    MatrixXd total = MatrixXd::Zero(p, p);
    MatrixXd block(p, p);
    for (Eigen::Index start = 0; start < n; start += kBlockRows) {
        const Eigen::Index stop = std::min(n, start + kBlockRows);
        block.setZero();
        for (Eigen::Index a = start; a < stop; ++a) {
            const int la = labels0[static_cast<std::size_t>(a)];
            for (Eigen::Index b = a + 1; b < n; ++b)
                block(la, labels0[static_cast<std::size_t>(b)]) += dist(a, b);
        }
        total += block;
    }
    return total + total.transpose();
}

std::vector<std::size_t> class_counts(const std::vector<int> &labels0, int p) {
    std::vector<std::size_t> counts(static_cast<std::size_t>(p), 0);
    for (int l : labels0)
        ++counts[static_cast<std::size_t>(l)];
    return counts;
}

Dependence dependence_from_sums(const MatrixXd &sums, const std::vector<std::size_t> &counts, Variant variant) {
    const int p = static_cast<int>(counts.size());
    if (variant == Variant::U)
        for (int c = 0; c < p; ++c)
            if (counts[static_cast<std::size_t>(c)] < 2)
                throw Error(ErrorCode::TooFewSamples,
                            "class " + std::to_string(c + 1) + " has " +
                                std::to_string(counts[static_cast<std::size_t>(c)]) +
                                " sample(s); U-statistic needs >= 2");
    auto within = [&](int c) {
        const double m = static_cast<double>(counts[static_cast<std::size_t>(c)]);
        return sums(c, c) / (variant == Variant::V ? m * m : m * (m - 1.0));
    };
    Dependence best;
    bool first = true;
    for (int i = 0; i < p; ++i)
        for (int j = i + 1; j < p; ++j) {
            const double cross = sums(i, j) / (static_cast<double>(counts[static_cast<std::size_t>(i)]) *
                                               static_cast<double>(counts[static_cast<std::size_t>(j)]));
            const double value = 2.0 * cross - (within(i) + within(j));
            if (first || value > best.value) {
                best = {value, {i + 1, j + 1}};
                first = false;
            }
        }
    return best;
}

std::vector<int> zero_based(const LabelVector &labels) {
    std::vector<int> out(labels.labels.size());
    std::transform(labels.labels.begin(), labels.labels.end(), out.begin(), [](int l) { return l - 1; });
    return out;
}

MatrixXd select_rows(const MatrixXd &m, const std::vector<std::size_t> &rows) {
    MatrixXd out(static_cast<Eigen::Index>(rows.size()), m.cols());
    for (std::size_t i = 0; i < rows.size(); ++i)
        out.row(static_cast<Eigen::Index>(i)) = m.row(static_cast<Eigen::Index>(rows[i]));
    return out;
}

} // namespace

MatrixXd class_rows(const MatrixXd &features, const LabelVector &labels, int cls) {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < labels.labels.size(); ++i)
        if (labels.labels[i] == cls)
            rows.push_back(i);
    return select_rows(features, rows);
}

MatrixXd class_distance_sums(const MatrixXd &features, const std::vector<int> &labels, int p) {
    const Eigen::Index d = features.cols();
    const double *base = features.data();
    return grouped_sums(features.rows(), labels, p, [&](Eigen::Index a, Eigen::Index b) {
        return detail::row_distance(base + a * d, base + b * d, d);
    });
}

Dependence energy_dependence(const FeatureMatrix &features, const LabelVector &labels, Variant variant) {
    io::validate_pair(features, labels);
    const auto labels0 = zero_based(labels);
    const MatrixXd sums = class_distance_sums(features.data, labels0, labels.p);
    return dependence_from_sums(sums, class_counts(labels0, labels.p), variant);
}

std::vector<std::size_t> stratified_subsample(const LabelVector &labels, std::size_t cap, std::uint64_t seed) {
    const std::size_t n = labels.n();
    const std::size_t p = static_cast<std::size_t>(labels.p);
    if (cap < p)
        throw Error(ErrorCode::InvalidArgument,
                    "subsample cap " + std::to_string(cap) + " cannot keep all " + std::to_string(p) + " classes");
    if (cap >= n) {
        std::vector<std::size_t> all(n);
        std::iota(all.begin(), all.end(), 0);
        return all;
    }
    std::vector<std::vector<std::size_t>> members(p);
    for (std::size_t i = 0; i < n; ++i)
        members[static_cast<std::size_t>(labels.labels[i] - 1)].push_back(i);

    std::vector<double> exact(p);
    std::vector<std::size_t> quota(p);
    std::size_t total = 0;
    for (std::size_t c = 0; c < p; ++c) {
        exact[c] = static_cast<double>(cap) * static_cast<double>(members[c].size()) / static_cast<double>(n);
        quota[c] = std::clamp<std::size_t>(static_cast<std::size_t>(std::llround(exact[c])), 1, members[c].size());
        total += quota[c];
    }
    // Repair rounding drift toward the classes whose quota is furthest from exact.
    while (total > cap) {
        std::size_t pick = p;
        for (std::size_t c = 0; c < p; ++c)
            if (quota[c] > 1 && (pick == p || quota[c] - exact[c] > quota[pick] - exact[pick]))
                pick = c;
        --quota[pick];
        --total;
    }
    while (total < cap) {
        std::size_t pick = p;
        for (std::size_t c = 0; c < p; ++c)
            if (quota[c] < members[c].size() && (pick == p || exact[c] - quota[c] > exact[pick] - quota[pick]))
                pick = c;
        ++quota[pick];
        ++total;
    }

    std::mt19937_64 rng(seed);
    std::vector<std::size_t> chosen;
    chosen.reserve(cap);
    for (std::size_t c = 0; c < p; ++c) {
        auto &m = members[c];
        std::shuffle(m.begin(), m.end(), rng);
        chosen.insert(chosen.end(), m.begin(), m.begin() + static_cast<std::ptrdiff_t>(quota[c]));
    }
    std::sort(chosen.begin(), chosen.end());
    return chosen;
}

DependenceProfile dependence_profile(const std::vector<FeatureMatrix> &units, const LabelVector &labels,
                                     Variant variant, std::optional<std::size_t> subsample_cap, std::uint64_t seed,
                                     std::vector<int> indices, std::optional<int> unit_count) {
    if (units.empty())
        throw Error(ErrorCode::EmptyUnitList, "no feature matrices supplied");
    for (const auto &u : units)
        io::validate_pair(u, labels);
    if (indices.empty()) {
        indices.resize(units.size());
        std::iota(indices.begin(), indices.end(), 0);
    }
    if (indices.size() != units.size())
        throw Error(ErrorCode::InvalidArgument, std::to_string(indices.size()) + " unit indices for " +
                                                    std::to_string(units.size()) + " feature matrices");

    DependenceProfile profile;
    profile.variant = variant;
    profile.seed = seed;
    profile.indices = std::move(indices);
    profile.unit_count = unit_count.value_or(*std::max_element(profile.indices.begin(), profile.indices.end()) + 1);

    const bool subsample = subsample_cap && *subsample_cap < labels.n();
    std::vector<std::size_t> rows;
    LabelVector used = labels;
    if (subsample) {
        rows = stratified_subsample(labels, *subsample_cap, seed);
        used.labels.clear();
        for (std::size_t r : rows)
            used.labels.push_back(labels.labels[r]);
    }
    profile.n_used = used.n();
    for (const auto &u : units) {
        const Dependence dep = subsample ? energy_dependence(FeatureMatrix(select_rows(u.data, rows)), used, variant)
                                         : energy_dependence(u, used, variant);
        profile.values.push_back(dep.value);
        profile.arg_pairs.push_back(dep.arg_pair);
    }
    return profile;
}

double empirical_quantile(std::vector<double> values, double q) {
    if (values.empty())
        throw Error(ErrorCode::InvalidArgument, "quantile of an empty set");
    if (!(q > 0.0 && q < 1.0))
        throw Error(ErrorCode::InvalidArgument, "quantile must lie in (0, 1)");
    std::sort(values.begin(), values.end());
    const double pos = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return values[lo] + frac * (values[hi] - values[lo]);
}

double permutation_threshold(const FeatureMatrix &features, const LabelVector &labels, int n_perm, double quantile,
                             std::uint64_t seed, Variant variant) {
    if (n_perm < 1)
        throw Error(ErrorCode::InvalidArgument, "n_perm must be >= 1");
    if (!(quantile > 0.0 && quantile < 1.0))
        throw Error(ErrorCode::InvalidArgument, "quantile must lie in (0, 1)");
    io::validate_pair(features, labels);

    const Eigen::Index n = features.data.rows();
    const Eigen::Index d = features.data.cols();
    const double *base = features.data.data();
    // Distances are label-independent: cache the upper triangle once when it fits.
    constexpr Eigen::Index kCacheLimit = 4096;
    std::vector<double> cache;
    if (n <= kCacheLimit) {
        cache.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
        for (Eigen::Index a = 0; a < n; ++a)
            for (Eigen::Index b = a + 1; b < n; ++b)
                cache.push_back(detail::row_distance(base + a * d, base + b * d, d));
    }

    std::mt19937_64 rng(seed);
    auto labels0 = zero_based(labels);
    const auto counts = class_counts(labels0, labels.p);
    std::vector<double> null_values;
    null_values.reserve(static_cast<std::size_t>(n_perm));
    for (int t = 0; t < n_perm; ++t) {
        std::shuffle(labels0.begin(), labels0.end(), rng);
        MatrixXd sums;
        if (!cache.empty() || n == 1) {
            std::size_t k = 0;
            sums = grouped_sums(n, labels0, labels.p, [&](Eigen::Index, Eigen::Index) { return cache[k++]; });
        } else {
            sums = class_distance_sums(features.data, labels0, labels.p);
        }
        null_values.push_back(dependence_from_sums(sums, counts, variant).value);
    }
    return empirical_quantile(std::move(null_values), quantile);
}

} // namespace ped::energy
