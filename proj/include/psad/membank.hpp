#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "psad/classifier.hpp"
#include "psad/featex.hpp"
#include "psad/tensor.hpp"

namespace psad {

// Density-estimation side: three memory banks over segmentation-derived
// statistics, nearest-neighbor scoring, leave-one-out train scores and
// adaptive scaling.

using ClassHistogram = VectorX<double>;
using CompositionEmbedding = VectorX<double>;

enum class BankKind : std::uint8_t { hist = 0, comp = 1, patch = 2 };
std::string to_string(BankKind kind);

/// Immutable after build. For the patch kind, elements hold every stored
/// patch row-wise and patches_per_image records the per-image group size
/// used by the leave-one-out pass (transient, not serialized).
struct MemoryBank {
    BankKind kind = BankKind::hist;
    MatrixX<double> elements;
    Eigen::Index patches_per_image = 0;
    VectorX<double> loo_scores; // one per contributing training image
    double scale = 0.0;         // max of loo_scores
};

/// Per-class pixel fractions, background included.
ClassHistogram class_histogram(const SegMap& seg, int n_classes);

/// Concatenation over classes of the mean visual feature of the pixels
/// assigned to that class; absent classes contribute a zero block.
CompositionEmbedding composition_embedding(const MatrixX<double>& visual, const SegMap& seg,
                                           int n_classes);

/// Smallest squared L2 distance from e_test to any bank element.
double nn_score(const MemoryBank& bank, const VectorX<double>& e_test);

/// max over test patches of (min over stored patches of squared L2 distance).
double patch_score(const MemoryBank& bank, const MatrixX<double>& test_patches);

/// Leave-one-out scores for pointwise banks: s_k = min_{j != k} ||e_k - e_j||^2.
/// Exclusion is by index, so duplicate elements score 0.
VectorX<double> loo_scores_pointwise(const MatrixX<double>& elements);

/// Grouped variant for the patch bank: image k's patch group scored against
/// the union of every other image's patches.
VectorX<double> loo_scores_grouped(const MatrixX<double>& all_patches,
                                   Eigen::Index patches_per_image);

/// raw / max(scale, 1e-12); the floor guards all-duplicate training banks.
double normalize_score(double raw, const MemoryBank& bank);

double final_score(double s_hist, double s_comp, double s_patch);

/// Classifier plus the three banks and the feature settings they were built
/// with; the single self-contained artifact the scoring side loads.
struct BankSet {
    PixelClassifier classifier;
    MemoryBank hist;
    MemoryBank comp;
    MemoryBank patch;
    int patch_stride = kDefaultPatchStride;
    int n_classes = 0;
};

/// Per-image bank contributions: predicted-segmentation histogram and
/// composition embeddings plus the patch group.
struct BankInputs {
    std::vector<ClassHistogram> hists;
    std::vector<CompositionEmbedding> comps;
    std::vector<MatrixX<double>> patch_groups;
};

BankInputs compute_bank_inputs(const std::vector<Tensor>& images, const PixelClassifier& clf,
                               int patch_stride = kDefaultPatchStride);

/// Assembles a hist/comp bank (elements, LOO scores, scale) from embeddings.
MemoryBank assemble_pointwise_bank(BankKind kind,
                                   const std::vector<VectorX<double>>& elements);

MemoryBank assemble_patch_bank(const std::vector<MatrixX<double>>& groups);

/// Builds all three banks from normal training images: predicted segmentation
/// feeds the histogram and composition banks, patch embeddings feed the patch
/// bank, then each bank gets its LOO scores and scale. Needs >= 2 images.
BankSet build_banks(const std::vector<Tensor>& train_images, const PixelClassifier& clf,
                    int patch_stride = kDefaultPatchStride);

struct SampleScores {
    double raw_hist = 0, raw_comp = 0, raw_patch = 0;
    double s_hist = 0, s_comp = 0, s_patch = 0; // adaptively scaled
    double s_final = 0;                         // s_hist + s_comp + s_patch
};

/// Full scoring path for one image: features, predicted segmentation,
/// per-bank raw scores and their normalized sum.
SampleScores score_image(const BankSet& banks, const Tensor& image);

// Bank file layout, one record per bank:
//   "PMB1" | u8 kind | u64 element count | u64 element dim |
//   f32 elements (row-major) | u64 count + f64 values (S_train) | f64 scale
// A BankSet file is a PCL1 classifier block, three PMB1 records (hist, comp,
// patch) and a JSON trailer with the feature settings.
void write_bank(const MemoryBank& bank, const std::filesystem::path& path);
MemoryBank read_bank(const std::filesystem::path& path);

void write_bank_set(const BankSet& banks, const std::filesystem::path& path);
BankSet read_bank_set(const std::filesystem::path& path);

} // namespace psad
