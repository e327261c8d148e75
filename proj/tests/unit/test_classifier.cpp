#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "psad/classifier.hpp"
#include "psad/losses.hpp"
#include "psad/synthgen.hpp"

using namespace psad;

namespace {

std::filesystem::path temp_dir() {
    auto dir = std::filesystem::temp_directory_path() / "psad_classifier_tests";
    std::filesystem::create_directories(dir);
    return dir;
}

PixelFeatureMap bench_features(std::uint64_t seed) {
    const auto& bench = product_by_name("bench");
    return pixel_features(generate_scene(bench.subtypes[0], std::nullopt, seed).image);
}

} // namespace

TEST_CASE("zero classifier predicts uniformly and argmax falls to class 0") {
    const PixelFeatureMap feats = bench_features(1);
    const PixelClassifier clf = PixelClassifier::make_linear(kFeatureChannels, 4);
    const auto [probs, seg] = predict(clf, feats);
    CHECK(is_valid_probmap(probs));
    CHECK(probs.values(0, 0) == doctest::Approx(0.25).epsilon(1e-12));
    for (auto v : seg.labels) CHECK(v == 0);
}

TEST_CASE("dominant bias wins everywhere") {
    const PixelFeatureMap feats = bench_features(2);
    PixelClassifier clf = PixelClassifier::make_linear(kFeatureChannels, 4);
    clf.b1(2) = 50.0;
    const SegMap seg = predict(clf, feats).second;
    for (auto v : seg.labels) CHECK(v == 2);
}

TEST_CASE("argmax agrees with a per-pixel oracle and ties go low") {
    Rng rng(5);
    const PixelFeatureMap feats = bench_features(3);
    PixelClassifier clf = PixelClassifier::make_linear(kFeatureChannels, 5);
    for (Eigen::Index i = 0; i < clf.w1.rows(); ++i)
        for (Eigen::Index j = 0; j < clf.w1.cols(); ++j) clf.w1(i, j) = rng.uniform(-1, 1);
    const auto [probs, seg] = predict(clf, feats);
    CHECK(is_valid_probmap(probs));
    for (Eigen::Index i = 0; i < probs.values.rows(); ++i) {
        Eigen::Index best = 0;
        for (Eigen::Index c = 1; c < probs.values.cols(); ++c)
            if (probs.values(i, c) > probs.values(i, best)) best = c;
        CHECK(seg.labels[static_cast<std::size_t>(i)] == best);
    }

    ProbMap tied;
    tied.height = 1;
    tied.width = 2;
    tied.values = MatrixX<double>::Constant(2, 3, 1.0 / 3.0);
    const SegMap t = argmax_labels(tied);
    CHECK(t.labels[0] == 0);
    CHECK(t.labels[1] == 0);
}

TEST_CASE("prediction stays a simplex for arbitrary finite weights") {
    Rng rng(11);
    const PixelFeatureMap feats = bench_features(4);
    for (int trial = 0; trial < 5; ++trial) {
        PixelClassifier clf = PixelClassifier::make_linear(kFeatureChannels, 3);
        for (Eigen::Index i = 0; i < clf.w1.rows(); ++i)
            for (Eigen::Index j = 0; j < clf.w1.cols(); ++j)
                clf.w1(i, j) = rng.uniform(-300.0, 300.0);
        for (Eigen::Index j = 0; j < clf.b1.size(); ++j) clf.b1(j) = rng.uniform(-100.0, 100.0);
        CHECK(is_valid_probmap(predict_probabilities(clf, feats)));
    }
}

TEST_CASE("dimension mismatch raises a contract error") {
    const PixelFeatureMap feats = bench_features(6);
    const PixelClassifier clf = PixelClassifier::make_linear(kFeatureChannels + 3, 4);
    CHECK_THROWS_AS(predict_probabilities(clf, feats), ContractError);
}

TEST_CASE("checkpoint round-trips bit exactly") {
    Rng rng(21);
    const auto dir = temp_dir();

    PixelClassifier linear = PixelClassifier::make_linear(29, 5);
    for (Eigen::Index i = 0; i < linear.w1.rows(); ++i)
        for (Eigen::Index j = 0; j < linear.w1.cols(); ++j)
            linear.w1(i, j) = static_cast<float>(rng.uniform(-2, 2));
    for (Eigen::Index j = 0; j < linear.b1.size(); ++j)
        linear.b1(j) = static_cast<float>(rng.uniform(-2, 2));
    const auto lin_path = dir / "linear.pcl";
    write_classifier(linear, lin_path);
    const PixelClassifier lin2 = read_classifier(lin_path);
    CHECK(lin2.hidden == false);
    CHECK(lin2.w1 == linear.w1);
    CHECK(lin2.b1 == linear.b1);

    // File-level round trip: write(read(file)) must reproduce the bytes.
    const auto lin_path2 = dir / "linear2.pcl";
    write_classifier(lin2, lin_path2);
    std::ifstream a(lin_path, std::ios::binary), b(lin_path2, std::ios::binary);
    const std::string bytes_a((std::istreambuf_iterator<char>(a)),
                              std::istreambuf_iterator<char>());
    const std::string bytes_b((std::istreambuf_iterator<char>(b)),
                              std::istreambuf_iterator<char>());
    CHECK(bytes_a == bytes_b);

    Rng init_rng(3);
    PixelClassifier hidden = PixelClassifier::make_hidden(29, 16, 5, init_rng);
    // Quantize to f32 so the in-memory copy survives the f32 file format.
    for (Eigen::Index i = 0; i < hidden.w1.rows(); ++i)
        for (Eigen::Index j = 0; j < hidden.w1.cols(); ++j)
            hidden.w1(i, j) = static_cast<float>(hidden.w1(i, j));
    const auto hid_path = dir / "hidden.pcl";
    write_classifier(hidden, hid_path);
    const PixelClassifier hid2 = read_classifier(hid_path);
    CHECK(hid2.hidden);
    CHECK(hid2.w1 == hidden.w1);
    CHECK(hid2.w2 == hidden.w2);
}

TEST_CASE("hidden-layer backward matches finite differences") {
    Rng rng(33);
    const Eigen::Index n = 6, dim = 4, hidden_w = 5, classes = 3;
    MatrixX<double> feats(n, dim);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < dim; ++j) feats(i, j) = rng.uniform(-1, 1);
    SegMap y(1, static_cast<std::size_t>(n), static_cast<std::uint16_t>(classes));
    for (auto& v : y.labels) v = static_cast<std::uint16_t>(rng.uniform_int(0, classes - 1));

    PixelClassifier clf = PixelClassifier::make_hidden(dim, hidden_w, classes, rng);
    for (Eigen::Index j = 0; j < clf.w2.rows(); ++j)
        for (Eigen::Index k = 0; k < clf.w2.cols(); ++k) clf.w2(j, k) = rng.uniform(-1, 1);

    const auto loss_at = [&](const PixelClassifier& c) {
        return cross_entropy_loss(softmax_rows(c.logits(feats)), y).value;
    };

    PixelClassifier::Activations cache;
    const MatrixX<double> z = clf.logits(feats, &cache);
    const auto ce = cross_entropy_loss(softmax_rows(z), y);
    const auto grads = clf.backward(feats, cache, ce.grad_logits);

    const double h = 1e-6;
    double worst = 0;
    auto check_block = [&](MatrixX<double>& param, const MatrixX<double>& grad) {
        for (Eigen::Index i = 0; i < param.rows(); ++i)
            for (Eigen::Index j = 0; j < param.cols(); ++j) {
                const double keep = param(i, j);
                param(i, j) = keep + h;
                const double up = loss_at(clf);
                param(i, j) = keep - h;
                const double down = loss_at(clf);
                param(i, j) = keep;
                const double fd = (up - down) / (2 * h);
                worst = std::max(worst,
                                 std::abs(fd - grad(i, j)) /
                                     std::max({std::abs(fd), std::abs(grad(i, j)), 1e-6}));
            }
    };
    check_block(clf.w1, grads.w1);
    check_block(clf.w2, grads.w2);
    CHECK(worst < 1e-4);
}
