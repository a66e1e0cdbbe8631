// Reference computations used only by the tests. They deliberately avoid the library's
// blocked kernels, grouped sums and prefix-sum costs.
#ifndef PED_TESTS_ORACLES_HPP
#define PED_TESTS_ORACLES_HPP

#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <vector>

#include "ped/types.hpp"

namespace oracle {

using ped::MatrixXd;

/// Energy distance straight from its definition, one pair at a time.
inline double energy_distance(const MatrixXd &a, const MatrixXd &b, bool unbiased = false) {
    auto mean_dist = [](const MatrixXd &x, const MatrixXd &y, bool drop_diag) {
        double s = 0.0;
        for (Eigen::Index i = 0; i < x.rows(); ++i)
            for (Eigen::Index j = 0; j < y.rows(); ++j)
                s += (x.row(i) - y.row(j)).norm();
        const double nx = static_cast<double>(x.rows()), ny = static_cast<double>(y.rows());
        return s / (drop_diag ? nx * (nx - 1.0) : nx * ny);
    };
    return 2.0 * mean_dist(a, b, false) - mean_dist(a, a, unbiased) - mean_dist(b, b, unbiased);
}

/// E|Z| for Z ~ N(mu, sigma^2): the folded-normal mean.
inline double folded_normal_mean(double mu, double sigma) {
    return sigma * std::sqrt(2.0 / std::numbers::pi) * std::exp(-mu * mu / (2.0 * sigma * sigma)) +
           mu * std::erf(mu / (sigma * std::sqrt(2.0)));
}

/// Population energy distance between N(m1, s^2) and N(m2, s^2) in one dimension.
inline double gaussian_energy_distance(double m1, double m2, double s) {
    const double sd = std::sqrt(2.0) * s;
    return 2.0 * folded_normal_mean(m1 - m2, sd) - 2.0 * folded_normal_mean(0.0, sd);
}

/// Minimal k-means cost over every assignment of values to k non-empty labels
/// (not only contiguous ones). Exponential; keep n tiny.
inline double brute_force_kmeans(const std::vector<double> &v, int k) {
    const std::size_t n = v.size();
    std::vector<int> label(n, 0);
    double best = std::numeric_limits<double>::infinity();
    while (true) {
        std::vector<double> sum(static_cast<std::size_t>(k), 0.0);
        std::vector<int> count(static_cast<std::size_t>(k), 0);
        for (std::size_t i = 0; i < n; ++i) {
            sum[static_cast<std::size_t>(label[i])] += v[i];
            ++count[static_cast<std::size_t>(label[i])];
        }
        bool ok = true;
        for (int c : count)
            ok = ok && c > 0;
        if (ok) {
            double cost = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double m = sum[static_cast<std::size_t>(label[i])] / count[static_cast<std::size_t>(label[i])];
                cost += (v[i] - m) * (v[i] - m);
            }
            best = std::min(best, cost);
        }
        std::size_t pos = 0;
        while (pos < n && ++label[pos] == k)
            label[pos++] = 0;
        if (pos == n)
            break;
    }
    return best;
}

inline MatrixXd random_matrix(std::mt19937_64 &rng, Eigen::Index rows, Eigen::Index cols, double scale = 1.0) {
    std::normal_distribution<double> g(0.0, scale);
    MatrixXd m(rows, cols);
    for (Eigen::Index k = 0; k < m.size(); ++k)
        m.data()[k] = g(rng);
    return m;
}

inline double rel_diff(double a, double b) {
    const double scale = std::max({std::abs(a), std::abs(b), 1e-300});
    return std::abs(a - b) / scale;
}

} // namespace oracle

#endif // PED_TESTS_ORACLES_HPP
