#ifndef PED_ENERGY_HPP
#define PED_ENERGY_HPP

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "ped/error.hpp"
#include "ped/types.hpp"

namespace ped::energy {

/// V: plug-in estimator with self-pairs and n^2 divisors. U: self-pairs dropped, n(n-1) divisors.
enum class Variant { V, U };

std::string to_string(Variant v);
Variant parse_variant(const std::string &s);

inline constexpr Eigen::Index kBlockRows = 256;

struct EnergyDistanceValue {
    double value = 0.0;
    std::size_t n1 = 0;
    std::size_t n2 = 0;
    Variant variant = Variant::V;
};

/// Class pair (1-based, i < j) whose conditional distributions are furthest apart.
using ClassPair = std::pair<int, int>;

struct Dependence {
    double value = 0.0;
    ClassPair arg_pair{1, 1};
};

struct DependenceProfile {
    std::vector<double> values;
    std::vector<ClassPair> arg_pairs;
    /// Original unit index of each entry.
    std::vector<int> indices;
    /// Units in the model the profile was taken from; indices lie in [0, unit_count).
    int unit_count = 0;
    Variant variant = Variant::V;
    std::size_t n_used = 0;
    std::uint64_t seed = 0;
    int stage = 0;

    std::size_t size() const { return values.size(); }
};

namespace detail {

inline double row_distance(const double *a, const double *b, Eigen::Index d) {
    double s = 0.0;
    for (Eigen::Index k = 0; k < d; ++k) {
        const double t = a[k] - b[k];
        s += t * t;
    }
    return std::sqrt(s);
}

// Sum of ||a_i - b_j|| over all ordered pairs, rows of `a` visited in fixed-size blocks.
inline double distance_sum(const MatrixXd &a, const MatrixXd &b) {
    const Eigen::Index d = a.cols();
    double total = 0.0;
    for (Eigen::Index start = 0; start < a.rows(); start += kBlockRows) {
        const Eigen::Index stop = std::min(a.rows(), start + kBlockRows);
        double block = 0.0;
        for (Eigen::Index i = start; i < stop; ++i) {
            const double *ai = a.data() + i * d;
            double row = 0.0;
            for (Eigen::Index j = 0; j < b.rows(); ++j)
                row += row_distance(ai, b.data() + j * d, d);
            block += row;
        }
        total += block;
    }
    return total;
}

// Lexicographic order on (rows, values); used to fix the cross-term summation order.
inline bool precedes(const MatrixXd &a, const MatrixXd &b) {
    if (a.rows() != b.rows())
        return a.rows() < b.rows();
    for (Eigen::Index k = 0; k < a.size(); ++k)
        if (a.data()[k] != b.data()[k])
            return a.data()[k] < b.data()[k];
    return false;
}

template <typename Derived> MatrixXd as_f64(const Eigen::MatrixBase<Derived> &m) {
    return m.template cast<double>();
}

inline void require_same_width(Eigen::Index da, Eigen::Index db) {
    if (da != db)
        throw Error(ErrorCode::DimensionMismatch,
                    "feature widths " + std::to_string(da) + " and " + std::to_string(db));
}

} // namespace detail

/// (1 / (n_a n_b)) * sum_ij ||a_i - b_j||. With a and b the same set this is the
/// within-group term, zero diagonal included.
template <typename DA, typename DB>
double mean_pairwise_distance(const Eigen::MatrixBase<DA> &a, const Eigen::MatrixBase<DB> &b) {
    detail::require_same_width(a.cols(), b.cols());
    if (a.rows() == 0 || b.rows() == 0)
        throw Error(ErrorCode::TooFewSamples, "empty sample set");
    const MatrixXd af = detail::as_f64(a);
    const MatrixXd bf = detail::as_f64(b);
    const double sum = detail::precedes(bf, af) ? detail::distance_sum(bf, af) : detail::distance_sum(af, bf);
    return sum / (static_cast<double>(a.rows()) * static_cast<double>(b.rows()));
}

/// Two-sample energy distance 2 E||A-B|| - E||A-A'|| - E||B-B'||.
template <typename DA, typename DB>
EnergyDistanceValue energy_distance(const Eigen::MatrixBase<DA> &a, const Eigen::MatrixBase<DB> &b,
                                    Variant variant = Variant::V) {
    detail::require_same_width(a.cols(), b.cols());
    const std::size_t na = static_cast<std::size_t>(a.rows());
    const std::size_t nb = static_cast<std::size_t>(b.rows());
    const std::size_t need = variant == Variant::U ? 2 : 1;
    if (na < need || nb < need)
        throw Error(ErrorCode::TooFewSamples, "group sizes " + std::to_string(na) + " and " + std::to_string(nb) +
                                                  " (" + to_string(variant) + "-statistic needs >= " +
                                                  std::to_string(need) + ")");
    const MatrixXd af = detail::as_f64(a);
    const MatrixXd bf = detail::as_f64(b);
    const bool swap = detail::precedes(bf, af);
    const double cross = (swap ? detail::distance_sum(bf, af) : detail::distance_sum(af, bf)) /
                         (static_cast<double>(na) * static_cast<double>(nb));
    auto within = [variant](const MatrixXd &m) {
        const double n = static_cast<double>(m.rows());
        return detail::distance_sum(m, m) / (variant == Variant::V ? n * n : n * (n - 1.0));
    };
    const double value = 2.0 * cross - (within(af) + within(bf));
    return {value, na, nb, variant};
}

inline double mean_pairwise_distance(const FeatureMatrix &a, const FeatureMatrix &b) {
    return mean_pairwise_distance(a.data, b.data);
}
inline EnergyDistanceValue energy_distance(const FeatureMatrix &a, const FeatureMatrix &b,
                                           Variant variant = Variant::V) {
    return energy_distance(a.data, b.data, variant);
}

/// Rows of `features` whose label equals `cls`, in sample order.
MatrixXd class_rows(const MatrixXd &features, const LabelVector &labels, int cls);

/// Max over class pairs i < j of the energy distance between the class-conditional
/// samples. First maximum in lexicographic pair order wins. With p = 1 the value is 0.
Dependence energy_dependence(const FeatureMatrix &features, const LabelVector &labels,
                             Variant variant = Variant::V);

/// p x p matrix of summed pairwise distances between (and within) label groups.
MatrixXd class_distance_sums(const MatrixXd &features, const std::vector<int> &labels, int p);

/// Class-stratified sample of `cap` row indices, ascending, at least one per class.
std::vector<std::size_t> stratified_subsample(const LabelVector &labels, std::size_t cap, std::uint64_t seed);

/// One dependence value per unit. A cap below n draws one stratified subsample and
/// applies it to every unit. `indices` names the units; empty means 0..L-1.
DependenceProfile dependence_profile(const std::vector<FeatureMatrix> &units, const LabelVector &labels,
                                     Variant variant = Variant::V, std::optional<std::size_t> subsample_cap = {},
                                     std::uint64_t seed = 0, std::vector<int> indices = {},
                                     std::optional<int> unit_count = {});

/// Empirical quantile (linear interpolation between order statistics) of values.
double empirical_quantile(std::vector<double> values, double q);

/// Quantile of the energy dependence under n_perm seeded label shuffles.
double permutation_threshold(const FeatureMatrix &features, const LabelVector &labels, int n_perm,
                             double quantile, std::uint64_t seed, Variant variant = Variant::V);

} // namespace ped::energy

#endif // PED_ENERGY_HPP
