#include <doctest.h>

#include <cmath>
#include <functional>

#include "psad/losses.hpp"
#include "psad/rng.hpp"

using namespace psad;

namespace {

MatrixX<double> random_logits(Rng& rng, Eigen::Index n, Eigen::Index c, double scale = 2.0) {
    MatrixX<double> z(n, c);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < c; ++j) z(i, j) = rng.uniform(-scale, scale);
    return z;
}

SegMap random_labels(Rng& rng, std::size_t h, std::size_t w, std::uint16_t classes) {
    SegMap y(h, w, classes);
    for (auto& v : y.labels) v = static_cast<std::uint16_t>(rng.uniform_int(0, classes - 1));
    return y;
}

/// Central finite differences of value_fn over the logits, compared entrywise
/// against the analytic gradient. Relative error uses a small floor so that
/// near-zero entries compare absolutely.
double max_gradient_error(const MatrixX<double>& logits,
                          const std::function<double(const MatrixX<double>&)>& value_fn,
                          const MatrixX<double>& analytic, double h = 1e-5) {
    double worst = 0.0;
    for (Eigen::Index i = 0; i < logits.rows(); ++i)
        for (Eigen::Index j = 0; j < logits.cols(); ++j) {
            MatrixX<double> zp = logits, zm = logits;
            zp(i, j) += h;
            zm(i, j) -= h;
            const double fd = (value_fn(zp) - value_fn(zm)) / (2.0 * h);
            const double denom = std::max({std::abs(fd), std::abs(analytic(i, j)), 1e-6});
            worst = std::max(worst, std::abs(fd - analytic(i, j)) / denom);
        }
    return worst;
}

} // namespace

TEST_CASE("softmax rows are a valid simplex") {
    Rng rng(7);
    const MatrixX<double> p = softmax_rows(random_logits(rng, 12, 5, 30.0));
    for (Eigen::Index i = 0; i < p.rows(); ++i) {
        CHECK(p.row(i).sum() == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(p.row(i).minCoeff() >= 0.0);
    }
}

TEST_CASE("cross entropy analytic values") {
    SegMap y(2, 2, 4);
    y.labels = {0, 1, 2, 3};

    SUBCASE("one-hot correct prediction gives zero loss") {
        MatrixX<double> p = MatrixX<double>::Zero(4, 4);
        for (int i = 0; i < 4; ++i) p(i, i) = 1.0;
        CHECK(cross_entropy_loss(p, y).value == doctest::Approx(0.0).epsilon(1e-9));
    }
    SUBCASE("uniform prediction gives ln(n_classes)") {
        const MatrixX<double> p = MatrixX<double>::Constant(4, 4, 0.25);
        CHECK(cross_entropy_loss(p, y).value == doctest::Approx(std::log(4.0)).epsilon(1e-12));
    }
    SUBCASE("zero probability at the true class is clamped, not fatal") {
        MatrixX<double> p = MatrixX<double>::Zero(4, 4);
        for (int i = 0; i < 4; ++i) p(i, (i + 1) % 4) = 1.0;
        CHECK(std::isfinite(cross_entropy_loss(p, y).value));
    }
}

TEST_CASE("dice analytic values") {
    SUBCASE("perfect overlap is epsilon-limited") {
        // 1024 pixels per class across 2 classes.
        SegMap y(32, 64, 2);
        for (std::size_t i = 0; i < y.labels.size(); ++i) y.labels[i] = i % 2;
        MatrixX<double> p = MatrixX<double>::Zero(2048, 2);
        for (Eigen::Index i = 0; i < 2048; ++i) p(i, i % 2) = 1.0;
        CHECK(dice_loss(p, y).value < 1e-3);
        CHECK(dice_loss(p, y).value >= 0.0);
    }
    SUBCASE("fully disjoint prediction approaches one") {
        SegMap y(16, 16, 2);
        MatrixX<double> p = MatrixX<double>::Zero(256, 2);
        for (Eigen::Index i = 0; i < 256; ++i) p(i, 1) = 1.0; // truth is all class 0
        const double v = dice_loss(p, y).value;
        CHECK(v > 0.99);
        CHECK(v <= 1.0);
    }
}

TEST_CASE("entropy analytic values") {
    SUBCASE("one-hot rows have zero entropy") {
        MatrixX<double> p = MatrixX<double>::Zero(6, 3);
        for (Eigen::Index i = 0; i < 6; ++i) p(i, i % 3) = 1.0;
        CHECK(entropy_loss(p).value == doctest::Approx(0.0).epsilon(1e-9));
    }
    SUBCASE("uniform rows have ln(n_classes) entropy") {
        const MatrixX<double> p = MatrixX<double>::Constant(10, 5, 0.2);
        CHECK(entropy_loss(p).value == doctest::Approx(std::log(5.0)).epsilon(1e-12));
    }
}

TEST_CASE("histogram matching analytic values") {
    SUBCASE("matching fractions give zero") {
        SegMap y(2, 2, 2);
        y.labels = {0, 0, 1, 1};
        MatrixX<double> p(4, 2);
        p << 1, 0, 0.5, 0.5, 0.25, 0.75, 0.25, 0.75; // fractions (0.5, 0.5)
        CHECK(histogram_match_loss(p, y).value == doctest::Approx(0.0).epsilon(1e-12));
    }
    SUBCASE("hand-evaluated two-class case") {
        SegMap y(2, 2, 2);
        y.labels = {0, 0, 1, 1}; // fractions (0.5, 0.5)
        const MatrixX<double> p = (MatrixX<double>(4, 2) << 0.25, 0.75, 0.25, 0.75, 0.25, 0.75,
                                   0.25, 0.75)
                                      .finished();
        CHECK(histogram_match_loss(p, y).value == doctest::Approx(0.25).epsilon(1e-12));
    }
    SUBCASE("non-negative, zero only at exact match") {
        Rng rng(3);
        SegMap y = random_labels(rng, 4, 4, 3);
        for (int trial = 0; trial < 50; ++trial) {
            const MatrixX<double> p = softmax_rows(random_logits(rng, 16, 3));
            const double v = histogram_match_loss(p, y).value;
            CHECK(v >= 0.0);
            const VectorX<double> target = label_fractions<double>(y, 3);
            const VectorX<double> predicted = p.colwise().mean();
            if ((target - predicted).cwiseAbs().maxCoeff() > 1e-12) CHECK(v > 0.0);
        }
    }
}

TEST_CASE("analytic gradients match central finite differences") {
    Rng rng(17);
    double worst_ce = 0, worst_dice = 0, worst_entropy = 0, worst_hist = 0;
    for (int trial = 0; trial < 20; ++trial) {
        const auto n_classes = static_cast<Eigen::Index>(rng.uniform_int(2, 5));
        const SegMap y = random_labels(rng, 4, 4, static_cast<std::uint16_t>(n_classes));
        const MatrixX<double> z = random_logits(rng, 16, n_classes);
        const MatrixX<double> p = softmax_rows(z);

        worst_ce = std::max(
            worst_ce, max_gradient_error(
                          z,
                          [&](const MatrixX<double>& zz) {
                              return cross_entropy_loss(softmax_rows(zz), y).value;
                          },
                          cross_entropy_loss(p, y).grad_logits));
        worst_dice = std::max(
            worst_dice,
            max_gradient_error(
                z, [&](const MatrixX<double>& zz) { return dice_loss(softmax_rows(zz), y).value; },
                dice_loss(p, y).grad_logits));
        worst_entropy = std::max(
            worst_entropy,
            max_gradient_error(
                z, [&](const MatrixX<double>& zz) { return entropy_loss(softmax_rows(zz)).value; },
                entropy_loss(p).grad_logits));

        // Keep the per-class fraction differences away from the |.| kinks.
        VectorX<double> target = label_fractions<double>(y, n_classes);
        const VectorX<double> predicted = p.colwise().mean();
        bool near_kink = false;
        for (Eigen::Index c = 0; c < n_classes; ++c)
            if (std::abs(target(c) - predicted(c)) < 1e-3) near_kink = true;
        if (!near_kink)
            worst_hist = std::max(
                worst_hist, max_gradient_error(
                                z,
                                [&](const MatrixX<double>& zz) {
                                    return histogram_match_loss(softmax_rows(zz), target).value;
                                },
                                histogram_match_loss(p, target).grad_logits));
    }
    CHECK(worst_ce < 1e-4);
    CHECK(worst_dice < 1e-4);
    CHECK(worst_entropy < 1e-4);
    CHECK(worst_hist < 1e-4);
}

TEST_CASE("loss contract violations") {
    SegMap y(2, 2, 3);
    const MatrixX<double> p = MatrixX<double>::Constant(3, 3, 1.0 / 3.0);
    CHECK_THROWS_AS(cross_entropy_loss(p, y), ContractError); // 3 rows vs 4 pixels
    const MatrixX<double> q = MatrixX<double>::Constant(4, 2, 0.5);
    CHECK_THROWS_AS(dice_loss(q, y), ContractError); // 2 cols vs 3 classes
    VectorX<double> bad_target(2);
    bad_target << 0.5, 0.5;
    const MatrixX<double> r = MatrixX<double>::Constant(4, 3, 1.0 / 3.0);
    CHECK_THROWS_AS(histogram_match_loss(r, bad_target), ContractError);
}
