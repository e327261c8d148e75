#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "psad/classifier.hpp"
#include "psad/featex.hpp"
#include "psad/tensor.hpp"

namespace psad {

struct TrainConfig {
    double lambda_ce = 10.0;      // weight on the cross-entropy term
    double lambda_entropy = 10.0; // weight on the entropy term (unlabeled)
    double lambda_hist = 10.0;    // weight on the histogram-matching term (unlabeled)
    double learning_rate = 0.001;
    double weight_decay = 1e-4; // decoupled, weight matrices only
    int batch_size = 5;
    int labeled_per_batch = 2; // labeled slots per main-phase batch
    int warmup_steps = 200;    // supervised-only phase
    int main_steps = 200;      // full-objective phase
    int hidden_width = 0;      // 0 = linear head
    int max_translation = 2;   // augmentation shift in pixels
    std::uint64_t seed = 0;
};

struct LabeledSample {
    PixelFeatureMap features;
    SegMap gt;
    int product_type = 0;
};

struct UnlabeledSample {
    PixelFeatureMap features;
    int product_type = 0; // assigned, not annotated
};

struct Augmentation {
    bool flip = false;
    int dx = 0, dy = 0;
};

/// Spatially transforms the visual channels and the ground truth together
/// (horizontal flip, then a replicate-padded translation). Coordinate
/// channels are regenerated canonically so positions stay truthful.
LabeledSample augment_sample(const LabeledSample& sample, const Augmentation& aug);

/// Product type of the nearest labeled image by global-embedding L2 distance;
/// ties resolve to the lowest labeled index.
int assign_product_type(const VectorX<double>& unlabeled_embedding,
                        const std::vector<VectorX<double>>& labeled_embeddings,
                        const std::vector<int>& labeled_types);

struct TrainStats {
    std::uint64_t unlabeled_accesses = 0; // feature-matrix reads of unlabeled data
    double last_ce = 0, last_dice = 0, last_entropy = 0, last_hist = 0;
    double last_total = 0;
    int steps_run = 0;
};

struct TrainResult {
    PixelClassifier classifier;
    TrainStats stats;
};

/// AdamW training of the pixel classifier: a supervised warm-up phase
/// (Dice + lambda_ce * CE on augmented labeled batches) followed by a main
/// phase whose batches mix labeled and unlabeled samples and add the entropy
/// and histogram-matching terms. Deterministic for a fixed config.
TrainResult train_classifier(const std::vector<LabeledSample>& labeled,
                             const std::vector<UnlabeledSample>& unlabeled,
                             const TrainConfig& cfg);

/// Histogram target for an unlabeled sample: the label fractions of a
/// uniformly drawn labeled image of the same product type.
/// Throws ContractError when the types cannot be matched.
const LabeledSample& draw_histogram_target(const std::vector<LabeledSample>& labeled,
                                           int product_type, Rng& rng);

} // namespace psad
