#pragma once

#include <cmath>

#include "psad/tensor.hpp"

namespace psad {

// Training losses over per-pixel class probabilities. Probabilities are
// (N_pixels x N_classes) simplex rows; every loss returns its value together
// with the analytic gradient w.r.t. the pre-softmax logits.

inline constexpr double kProbEpsilon = 1e-12;

template <typename Scalar>
struct LossGrad {
    Scalar value = 0;
    MatrixX<Scalar> grad_logits;
};

/// Numerically stable row-wise softmax.
template <typename Scalar>
MatrixX<Scalar> softmax_rows(const MatrixX<Scalar>& logits) {
    MatrixX<Scalar> p(logits.rows(), logits.cols());
    for (Eigen::Index i = 0; i < logits.rows(); ++i) {
        const Scalar m = logits.row(i).maxCoeff();
        Scalar sum = 0;
        for (Eigen::Index c = 0; c < logits.cols(); ++c) {
            p(i, c) = std::exp(logits(i, c) - m);
            sum += p(i, c);
        }
        p.row(i) /= sum;
    }
    return p;
}

/// Pulls a probability-space gradient back through the softmax:
/// dL/dz_ic = p_ic * (g_ic - sum_k g_ik p_ik).
template <typename Scalar>
MatrixX<Scalar> chain_softmax_gradient(const MatrixX<Scalar>& probs,
                                       const MatrixX<Scalar>& grad_probs) {
    MatrixX<Scalar> g(probs.rows(), probs.cols());
    for (Eigen::Index i = 0; i < probs.rows(); ++i) {
        const Scalar dot = probs.row(i).dot(grad_probs.row(i));
        for (Eigen::Index c = 0; c < probs.cols(); ++c)
            g(i, c) = probs(i, c) * (grad_probs(i, c) - dot);
    }
    return g;
}

namespace detail {

template <typename Scalar>
void check_probs_labels(const MatrixX<Scalar>& probs, const SegMap& labels) {
    if (probs.rows() != static_cast<Eigen::Index>(labels.size()))
        throw ContractError("probability rows do not match label count");
    if (probs.cols() < labels.n_classes)
        throw ContractError("probability columns below the label class count");
}

} // namespace detail

/// Mean pixel-wise cross entropy; gradient (p - onehot(y)) / N.
template <typename Scalar>
LossGrad<Scalar> cross_entropy_loss(const MatrixX<Scalar>& probs, const SegMap& labels) {
    detail::check_probs_labels(probs, labels);
    const auto n = probs.rows();
    const Scalar inv_n = Scalar(1) / static_cast<Scalar>(n);
    LossGrad<Scalar> out;
    out.grad_logits = probs * inv_n;
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto y = labels.labels[static_cast<std::size_t>(i)];
        const Scalar p = std::max(probs(i, y), static_cast<Scalar>(kProbEpsilon));
        out.value -= std::log(p);
        out.grad_logits(i, y) -= inv_n;
    }
    out.value *= inv_n;
    return out;
}

/// Multi-class soft Dice with additive smoothing:
/// 1 - (1/C) sum_c (2 sum p*y + eps) / (sum p + sum y + eps).
template <typename Scalar>
LossGrad<Scalar> dice_loss(const MatrixX<Scalar>& probs, const SegMap& labels,
                           Scalar smooth = Scalar(1)) {
    detail::check_probs_labels(probs, labels);
    const auto n = probs.rows();
    const auto n_classes = probs.cols();
    VectorX<Scalar> overlap = VectorX<Scalar>::Zero(n_classes); // sum_i p_ic * y_ic
    VectorX<Scalar> mass = probs.colwise().sum();               // sum_i p_ic
    VectorX<Scalar> truth = VectorX<Scalar>::Zero(n_classes);   // sum_i y_ic
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto y = labels.labels[static_cast<std::size_t>(i)];
        overlap(y) += probs(i, y);
        truth(y) += Scalar(1);
    }

    LossGrad<Scalar> out;
    out.value = Scalar(1);
    VectorX<Scalar> numer(n_classes), denom(n_classes);
    const Scalar inv_c = Scalar(1) / static_cast<Scalar>(n_classes);
    for (Eigen::Index c = 0; c < n_classes; ++c) {
        numer(c) = Scalar(2) * overlap(c) + smooth;
        denom(c) = mass(c) + truth(c) + smooth;
        out.value -= inv_c * numer(c) / denom(c);
    }

    // d/dp_jc of the class-c term, then back through the softmax.
    MatrixX<Scalar> grad_probs(n, n_classes);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto y = labels.labels[static_cast<std::size_t>(i)];
        for (Eigen::Index c = 0; c < n_classes; ++c) {
            const Scalar is_y = (c == y) ? Scalar(1) : Scalar(0);
            grad_probs(i, c) =
                -inv_c * (Scalar(2) * is_y * denom(c) - numer(c)) / (denom(c) * denom(c));
        }
    }
    out.grad_logits = chain_softmax_gradient(probs, grad_probs);
    return out;
}

/// Mean pixel-wise Shannon entropy, applied to unlabeled predictions.
template <typename Scalar>
LossGrad<Scalar> entropy_loss(const MatrixX<Scalar>& probs) {
    const auto n = probs.rows();
    if (n == 0) throw ContractError("entropy loss needs at least one pixel");
    const Scalar inv_n = Scalar(1) / static_cast<Scalar>(n);
    LossGrad<Scalar> out;
    MatrixX<Scalar> grad_probs(n, probs.cols());
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index c = 0; c < probs.cols(); ++c) {
            const Scalar p = std::max(probs(i, c), static_cast<Scalar>(kProbEpsilon));
            const Scalar logp = std::log(p);
            out.value -= probs(i, c) * logp * inv_n;
            grad_probs(i, c) = -(logp + Scalar(1)) * inv_n;
        }
    out.grad_logits = chain_softmax_gradient(probs, grad_probs);
    return out;
}

/// Per-class pixel fractions of a hard label map (background included).
template <typename Scalar>
VectorX<Scalar> label_fractions(const SegMap& labels, Eigen::Index n_classes) {
    if (n_classes < labels.n_classes)
        throw ContractError("fraction vector smaller than the label class count");
    VectorX<Scalar> f = VectorX<Scalar>::Zero(n_classes);
    for (auto y : labels.labels) f(y) += Scalar(1);
    return f / static_cast<Scalar>(labels.size());
}

/// Histogram matching: (1/C) sum_c | target_c - mean_i p_ic |. The per-class
/// operand is a scalar difference of fractions, so the norm is the absolute
/// value; ties use sign(0) = 0.
template <typename Scalar>
LossGrad<Scalar> histogram_match_loss(const MatrixX<Scalar>& probs,
                                      const VectorX<Scalar>& target_fractions) {
    if (probs.cols() != target_fractions.size())
        throw ContractError("target fraction length does not match class count");
    const auto n = probs.rows();
    if (n == 0) throw ContractError("histogram loss needs at least one pixel");
    const auto n_classes = probs.cols();
    const Scalar inv_c = Scalar(1) / static_cast<Scalar>(n_classes);
    const Scalar inv_n = Scalar(1) / static_cast<Scalar>(n);

    VectorX<Scalar> predicted = probs.colwise().mean();
    LossGrad<Scalar> out;
    VectorX<Scalar> dq(n_classes);
    for (Eigen::Index c = 0; c < n_classes; ++c) {
        const Scalar diff = target_fractions(c) - predicted(c);
        out.value += inv_c * std::abs(diff);
        const Scalar sign = diff > Scalar(0) ? Scalar(1) : (diff < Scalar(0) ? Scalar(-1) : Scalar(0));
        dq(c) = inv_c * sign * Scalar(-1); // d|t - q|/dq = -sign(t - q)
    }
    MatrixX<Scalar> grad_probs(n, n_classes);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index c = 0; c < n_classes; ++c) grad_probs(i, c) = dq(c) * inv_n;
    out.grad_logits = chain_softmax_gradient(probs, grad_probs);
    return out;
}

/// Overload taking a labeled map directly.
template <typename Scalar>
LossGrad<Scalar> histogram_match_loss(const MatrixX<Scalar>& probs, const SegMap& labeled) {
    return histogram_match_loss(probs, label_fractions<Scalar>(labeled, probs.cols()));
}

} // namespace psad
