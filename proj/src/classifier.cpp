#include "psad/classifier.hpp"

#include <cmath>

#include "psad/losses.hpp"
#include "psad/tensor_io.hpp"

namespace psad {

PixelClassifier PixelClassifier::make_linear(Eigen::Index input_dim, Eigen::Index n_classes) {
    if (input_dim < 1 || n_classes < 1) throw ContractError("classifier dims must be positive");
    PixelClassifier clf;
    clf.w1 = MatrixX<double>::Zero(input_dim, n_classes);
    clf.b1 = VectorX<double>::Zero(n_classes);
    clf.hidden = false;
    return clf;
}

PixelClassifier PixelClassifier::make_hidden(Eigen::Index input_dim, Eigen::Index hidden_width,
                                             Eigen::Index n_classes, Rng& rng) {
    if (input_dim < 1 || hidden_width < 1 || n_classes < 1)
        throw ContractError("classifier dims must be positive");
    PixelClassifier clf;
    clf.hidden = true;
    clf.w1.resize(input_dim, hidden_width);
    const double scale1 = std::sqrt(2.0 / static_cast<double>(input_dim));
    for (Eigen::Index i = 0; i < input_dim; ++i)
        for (Eigen::Index j = 0; j < hidden_width; ++j) clf.w1(i, j) = scale1 * rng.normal();
    clf.b1 = VectorX<double>::Zero(hidden_width);
    clf.w2 = MatrixX<double>::Zero(hidden_width, n_classes);
    clf.b2 = VectorX<double>::Zero(n_classes);
    return clf;
}

MatrixX<double> PixelClassifier::logits(const MatrixX<double>& features,
                                        Activations* cache) const {
    if (features.cols() != input_dim())
        throw ContractError("feature dim " + std::to_string(features.cols()) +
                            " does not match classifier input dim " +
                            std::to_string(input_dim()));
    if (!hidden) {
        MatrixX<double> z = features * w1;
        z.rowwise() += b1.transpose();
        return z;
    }
    MatrixX<double> h = features * w1;
    h.rowwise() += b1.transpose();
    h = h.cwiseMax(0.0);
    if (cache) cache->hidden_out = h;
    MatrixX<double> z = h * w2;
    z.rowwise() += b2.transpose();
    return z;
}

void PixelClassifier::Gradients::setZero(const PixelClassifier& like) {
    w1 = MatrixX<double>::Zero(like.w1.rows(), like.w1.cols());
    b1 = VectorX<double>::Zero(like.b1.size());
    if (like.hidden) {
        w2 = MatrixX<double>::Zero(like.w2.rows(), like.w2.cols());
        b2 = VectorX<double>::Zero(like.b2.size());
    } else {
        w2.resize(0, 0);
        b2.resize(0);
    }
}

void PixelClassifier::Gradients::accumulate(const Gradients& other) {
    w1 += other.w1;
    b1 += other.b1;
    if (w2.size() > 0) {
        w2 += other.w2;
        b2 += other.b2;
    }
}

PixelClassifier::Gradients PixelClassifier::backward(const MatrixX<double>& features,
                                                     const Activations& cache,
                                                     const MatrixX<double>& grad_logits) const {
    Gradients g;
    if (!hidden) {
        g.w1 = features.transpose() * grad_logits;
        g.b1 = grad_logits.colwise().sum();
        return g;
    }
    g.w2 = cache.hidden_out.transpose() * grad_logits;
    g.b2 = grad_logits.colwise().sum();
    MatrixX<double> grad_hidden = grad_logits * w2.transpose();
    // ReLU gate: zero where the activation was clamped.
    grad_hidden = (cache.hidden_out.array() > 0.0).select(grad_hidden, 0.0);
    g.w1 = features.transpose() * grad_hidden;
    g.b1 = grad_hidden.colwise().sum();
    return g;
}

ProbMap predict_probabilities(const PixelClassifier& clf, const PixelFeatureMap& features) {
    ProbMap p;
    p.height = features.height();
    p.width = features.width();
    p.values = softmax_rows<double>(clf.logits(feature_matrix(features)));
    return p;
}

SegMap argmax_labels(const ProbMap& probs) {
    SegMap seg(probs.height, probs.width, static_cast<std::uint16_t>(probs.n_classes()));
    for (Eigen::Index i = 0; i < probs.values.rows(); ++i) {
        Eigen::Index best = 0;
        for (Eigen::Index c = 1; c < probs.values.cols(); ++c)
            if (probs.values(i, c) > probs.values(i, best)) best = c;
        seg.labels[static_cast<std::size_t>(i)] = static_cast<std::uint16_t>(best);
    }
    return seg;
}

std::pair<ProbMap, SegMap> predict(const PixelClassifier& clf, const PixelFeatureMap& features) {
    ProbMap p = predict_probabilities(clf, features);
    SegMap s = argmax_labels(p);
    return {std::move(p), std::move(s)};
}

namespace detail {

namespace {

void append_block(std::string& out, const MatrixX<double>& m) {
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            put_f32(out, static_cast<float>(m(i, j)));
}

void append_block(std::string& out, const VectorX<double>& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) put_f32(out, static_cast<float>(v(i)));
}

void parse_block(ByteReader& in, MatrixX<double>& m) {
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = in.f32();
}

void parse_block(ByteReader& in, VectorX<double>& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = in.f32();
}

} // namespace

void append_classifier(std::string& out, const PixelClassifier& clf) {
    out += "PCL1";
    put_u8(out, clf.hidden ? 1 : 0);
    put_u32(out, static_cast<std::uint32_t>(clf.input_dim()));
    put_u32(out, static_cast<std::uint32_t>(clf.n_classes()));
    put_u32(out, static_cast<std::uint32_t>(clf.hidden_width()));
    append_block(out, clf.w1);
    append_block(out, clf.b1);
    if (clf.hidden) {
        append_block(out, clf.w2);
        append_block(out, clf.b2);
    }
}

PixelClassifier parse_classifier(ByteReader& in) {
    in.expect_magic("PCL1");
    const bool hidden = in.u8() != 0;
    const auto input_dim = static_cast<Eigen::Index>(in.u32());
    const auto n_classes = static_cast<Eigen::Index>(in.u32());
    const auto hidden_width = static_cast<Eigen::Index>(in.u32());
    if (input_dim < 1 || n_classes < 1 || input_dim > (1 << 20) || n_classes > (1 << 16))
        throw FormatError("classifier dims out of range");
    if (hidden && (hidden_width < 1 || hidden_width > (1 << 16)))
        throw FormatError("classifier hidden width out of range");
    PixelClassifier clf;
    clf.hidden = hidden;
    if (hidden) {
        clf.w1.resize(input_dim, hidden_width);
        clf.b1.resize(hidden_width);
        clf.w2.resize(hidden_width, n_classes);
        clf.b2.resize(n_classes);
        parse_block(in, clf.w1);
        parse_block(in, clf.b1);
        parse_block(in, clf.w2);
        parse_block(in, clf.b2);
    } else {
        clf.w1.resize(input_dim, n_classes);
        clf.b1.resize(n_classes);
        parse_block(in, clf.w1);
        parse_block(in, clf.b1);
    }
    return clf;
}

} // namespace detail

void write_classifier(const PixelClassifier& clf, const std::filesystem::path& path) {
    std::string out;
    detail::append_classifier(out, clf);
    detail::write_file(path, out);
}

PixelClassifier read_classifier(const std::filesystem::path& path) {
    const std::string bytes = detail::read_file(path);
    detail::ByteReader in(bytes, path.string());
    PixelClassifier clf = detail::parse_classifier(in);
    in.require_exhausted();
    return clf;
}

} // namespace psad
