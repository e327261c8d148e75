#pragma once

#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "psad/errors.hpp"

namespace psad {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
using VectorX = Eigen::Vector<Scalar, Eigen::Dynamic>;

template <typename Scalar>
using RowMajorMatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Dense row-major float tensor with an explicit shape. The universal
/// carrier for images ([H,W,3]), feature maps and probability maps.
/// Channel-last layout everywhere.
class Tensor {
public:
    Tensor() = default;

    explicit Tensor(std::vector<std::size_t> shape) : shape_(std::move(shape)) {
        data_.assign(checked_size(shape_), 0.0f);
    }

    Tensor(std::vector<std::size_t> shape, std::vector<float> data)
        : shape_(std::move(shape)), data_(std::move(data)) {
        if (checked_size(shape_) != data_.size())
            throw ContractError("tensor shape does not match payload size");
    }

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t ndim() const { return shape_.size(); }
    std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
    std::size_t size() const { return data_.size(); }

    float* data() { return data_.data(); }
    const float* data() const { return data_.data(); }

    float& at(std::size_t i, std::size_t j) { return data_[i * shape_[1] + j]; }
    float at(std::size_t i, std::size_t j) const { return data_[i * shape_[1] + j]; }

    float& at(std::size_t i, std::size_t j, std::size_t k) {
        return data_[(i * shape_[1] + j) * shape_[2] + k];
    }
    float at(std::size_t i, std::size_t j, std::size_t k) const {
        return data_[(i * shape_[1] + j) * shape_[2] + k];
    }

    /// Read-only 2-d Eigen view; rows*cols must equal size().
    Eigen::Map<const RowMajorMatrixX<float>> as_matrix(Eigen::Index rows, Eigen::Index cols) const {
        if (static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols) != data_.size())
            throw ContractError("matrix view does not cover the tensor");
        return {data_.data(), rows, cols};
    }

    static std::size_t checked_size(const std::vector<std::size_t>& shape) {
        if (shape.empty()) throw ContractError("tensor must have at least one dimension");
        std::size_t n = 1;
        for (std::size_t d : shape) {
            if (d < 1) throw ContractError("tensor dimensions must be >= 1");
            if (d > (std::size_t{1} << 32) || n > (std::size_t{1} << 32) / d)
                throw ContractError("tensor too large");
            n *= d;
        }
        return n;
    }

private:
    std::vector<std::size_t> shape_;
    std::vector<float> data_;
};

/// True when shapes match and payloads are identical bit patterns.
bool bitwise_equal(const Tensor& a, const Tensor& b);

/// Per-pixel hard class labels, classes in [0, n_classes).
struct SegMap {
    std::size_t height = 0;
    std::size_t width = 0;
    std::uint16_t n_classes = 0;
    std::vector<std::uint16_t> labels; // row-major H*W

    SegMap() = default;
    SegMap(std::size_t h, std::size_t w, std::uint16_t classes)
        : height(h), width(w), n_classes(classes), labels(h * w, 0) {}

    std::uint16_t& at(std::size_t y, std::size_t x) { return labels[y * width + x]; }
    std::uint16_t at(std::size_t y, std::size_t x) const { return labels[y * width + x]; }
    std::size_t size() const { return labels.size(); }

    /// Throws ContractError when a label is out of range or sizes disagree.
    void validate() const;
};

bool operator==(const SegMap& a, const SegMap& b);

/// Per-pixel class probabilities, one simplex row per pixel.
struct ProbMap {
    std::size_t height = 0;
    std::size_t width = 0;
    MatrixX<double> values; // (H*W) x n_classes

    Eigen::Index n_classes() const { return values.cols(); }
};

/// Rows sum to 1 within tol and all entries lie in [0, 1].
bool is_valid_probmap(const ProbMap& p, double tol = 1e-6);

} // namespace psad
