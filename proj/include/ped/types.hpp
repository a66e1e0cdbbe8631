#ifndef PED_TYPES_HPP
#define PED_TYPES_HPP

#include <cstddef>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace ped {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using RowVector = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

using MatrixXd = Matrix<double>;
using VectorXd = Vector<double>;

/// On-disk precision of a feature dump. Arithmetic is always carried out in f64.
enum class StorageType : std::uint8_t { F32 = 0, F64 = 1 };

/// n x d samples of one skip-unit's flattened feature map, one row per observation.
struct FeatureMatrix {
    MatrixXd data;
    StorageType storage = StorageType::F64;

    FeatureMatrix() = default;
    explicit FeatureMatrix(MatrixXd values, StorageType st = StorageType::F64)
        : data(std::move(values)), storage(st) {}

    std::size_t n() const { return static_cast<std::size_t>(data.rows()); }
    std::size_t d() const { return static_cast<std::size_t>(data.cols()); }
};

/// 1-based class labels over the alphabet {1..p}.
struct LabelVector {
    std::vector<int> labels;
    int p = 0;

    std::size_t n() const { return labels.size(); }
};

} // namespace ped

#endif // PED_TYPES_HPP
