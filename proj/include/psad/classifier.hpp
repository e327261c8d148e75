#pragma once

#include <filesystem>
#include <utility>

#include "psad/featex.hpp"
#include "psad/rng.hpp"
#include "psad/tensor.hpp"

namespace psad {

/// Linear-softmax pixel classifier over fixed features plus coordinates,
/// with an optional single rectified hidden layer.
struct PixelClassifier {
    // Linear head: w1 is [input_dim x n_classes], b1 the class bias and
    // w2/b2 stay empty. With a hidden layer: w1 [input_dim x hidden],
    // w2 [hidden x n_classes].
    MatrixX<double> w1, w2;
    VectorX<double> b1, b2;
    bool hidden = false;

    Eigen::Index input_dim() const { return w1.rows(); }
    Eigen::Index hidden_width() const { return hidden ? w1.cols() : 0; }
    Eigen::Index n_classes() const { return hidden ? w2.cols() : w1.cols(); }

    static PixelClassifier make_linear(Eigen::Index input_dim, Eigen::Index n_classes);
    static PixelClassifier make_hidden(Eigen::Index input_dim, Eigen::Index hidden_width,
                                       Eigen::Index n_classes, Rng& rng);

    /// Pre-softmax logits for an [N x input_dim] feature matrix. When cache
    /// is given, the hidden activations are stored for backward().
    struct Activations {
        MatrixX<double> hidden_out; // post-ReLU, empty for the linear head
    };
    MatrixX<double> logits(const MatrixX<double>& features, Activations* cache = nullptr) const;

    struct Gradients {
        MatrixX<double> w1, w2;
        VectorX<double> b1, b2;
        void setZero(const PixelClassifier& like);
        void accumulate(const Gradients& other);
    };
    /// Backprop from dL/dlogits to parameter space.
    Gradients backward(const MatrixX<double>& features, const Activations& cache,
                       const MatrixX<double>& grad_logits) const;
};

/// Softmax probabilities for a feature map. Dim mismatch -> ContractError.
ProbMap predict_probabilities(const PixelClassifier& clf, const PixelFeatureMap& features);

/// Per-pixel argmax; ties resolve to the lowest class index.
SegMap argmax_labels(const ProbMap& probs);

/// Probabilities plus hard labels in one pass.
std::pair<ProbMap, SegMap> predict(const PixelClassifier& clf, const PixelFeatureMap& features);

// Checkpoint file: "PCL1" | u8 has_hidden | u32 input_dim | u32 n_classes |
// u32 hidden_width | f32 parameter blocks (w1 row-major, b1, then w2, b2).
void write_classifier(const PixelClassifier& clf, const std::filesystem::path& path);
PixelClassifier read_classifier(const std::filesystem::path& path);

namespace detail {
void append_classifier(std::string& out, const PixelClassifier& clf);
PixelClassifier parse_classifier(class ByteReader& in);
} // namespace detail

} // namespace psad
