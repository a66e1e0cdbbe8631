#ifndef PED_CLUSTER1D_HPP
#define PED_CLUSTER1D_HPP

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace ped::cluster1d {

/// Partition of 1-D values into k contiguous intervals of the sorted order.
/// Cluster ids increase with value.
struct Clustering {
    int k = 0;
    /// Cluster id of each input, in original input order.
    std::vector<int> assignment;
    /// Sorted position where cluster j + 1 starts, j = 0..k-2.
    std::vector<std::size_t> boundaries;
    double wcss = 0.0;
    std::vector<double> centroids;
};

/// How a cluster picks the one member it keeps.
enum class HeadMode { MaxValue, NearestCentroid };

std::string to_string(HeadMode mode);
HeadMode parse_head_mode(const std::string &s);

inline constexpr std::size_t kExhaustiveLimit = 16;

/// Globally optimal k-means in one dimension by dynamic programming over prefix sums.
/// Among equal-cost optima the backtrace takes the smallest start for the last cluster.
Clustering ckmeans(std::span<const double> values, int k);

/// Enumerates every contiguous k-partition of the sorted values; test oracle for ckmeans.
Clustering exhaustive_ckmeans(std::span<const double> values, int k);

/// One index per cluster (ascending cluster id). MaxValue keeps the largest member,
/// NearestCentroid the member closest to the cluster mean; ties go to the smaller index.
std::vector<std::size_t> cluster_heads(const Clustering &c, std::span<const double> values,
                                       HeadMode mode = HeadMode::MaxValue);

/// Sum of squared deviations from the mean, accumulated directly (no prefix sums).
double direct_wcss(std::span<const double> values, const std::vector<int> &assignment, int k);

} // namespace ped::cluster1d

#endif // PED_CLUSTER1D_HPP
