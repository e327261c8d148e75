#pragma once

#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "psad/tensor.hpp"

namespace psad {

/// Tie-adjusted probability that an anomalous score exceeds a normal one
/// (Mann-Whitney via sort-and-average-ranks, ties credited 1/2).
/// Both sides must be non-empty and finite.
double auroc(std::span<const double> normal_scores, std::span<const double> anomalous_scores);

/// Micro-averaged per-class intersection-over-union accumulated across
/// image pairs. A class absent from both predictions and ground truth
/// scores 1 (nothing to get wrong).
class IouAccumulator {
public:
    explicit IouAccumulator(int n_classes);
    void add(const SegMap& predicted, const SegMap& ground_truth);
    VectorX<double> per_class() const;
    double mean() const;

private:
    std::vector<std::int64_t> intersection_, union_;
};

/// One scored test sample; carrier for histogram and report rows.
struct ScoredSample {
    std::string id;
    std::string label; // normal | LA | SA
    double s_hist = 0, s_comp = 0, s_patch = 0, s_final = 0;
};

enum class ScoreField { hist, comp, patch, final_sum };
double score_field(const ScoredSample& s, ScoreField field);

/// Equal-width bins over [0, max score]; per-label counts. The top edge
/// falls into the last bin.
struct ScoreHistogram {
    double bin_width = 0;
    int n_bins = 0;
    std::vector<std::string> group_labels;
    std::vector<std::vector<std::int64_t>> counts; // [group][bin]
};

ScoreHistogram score_histogram(const std::vector<ScoredSample>& samples, ScoreField field,
                               int n_bins);

/// CSV: header "label,bin_lo,bin_hi,count", one row per group x bin.
void write_histogram_csv(const ScoreHistogram& h, std::ostream& out);

} // namespace psad
