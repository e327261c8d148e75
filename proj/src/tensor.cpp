#include "psad/tensor.hpp"

#include <cstring>

namespace psad {

bool bitwise_equal(const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape()) return false;
    if (a.size() == 0) return true;
    return std::memcmp(a.data(), b.data(), a.size() * sizeof(float)) == 0;
}

void SegMap::validate() const {
    if (labels.size() != height * width)
        throw ContractError("segmap label count does not match height*width");
    for (std::uint16_t v : labels)
        if (v >= n_classes) throw ContractError("segmap label out of class range");
}

bool operator==(const SegMap& a, const SegMap& b) {
    return a.height == b.height && a.width == b.width && a.n_classes == b.n_classes &&
           a.labels == b.labels;
}

bool is_valid_probmap(const ProbMap& p, double tol) {
    if (p.values.rows() != static_cast<Eigen::Index>(p.height * p.width)) return false;
    for (Eigen::Index i = 0; i < p.values.rows(); ++i) {
        double sum = 0.0;
        for (Eigen::Index c = 0; c < p.values.cols(); ++c) {
            const double v = p.values(i, c);
            if (!(v >= 0.0 && v <= 1.0)) return false;
            sum += v;
        }
        if (std::abs(sum - 1.0) > tol) return false;
    }
    return true;
}

} // namespace psad
