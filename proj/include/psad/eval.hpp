#pragma once

#include <filesystem>

#include "psad/dataset.hpp"
#include "psad/membank.hpp"
#include "psad/metrics.hpp"

namespace psad {

struct PerBankAuroc {
    double la = 0, sa = 0;
};

struct EvaluationReport {
    double la_auroc = 0, sa_auroc = 0; // final (summed, adaptively scaled) score
    PerBankAuroc hist, comp, patch;
    VectorX<double> per_class_iou; // predicted vs gt on normal test images
    double mean_iou = 0;
    std::vector<ScoredSample> samples; // all test entries, manifest order
};

/// Scores every test entry against the bank set and evaluates LA and SA
/// detection separately against the same normal test pool.
EvaluationReport evaluate_dataset(const LoadedDataset& data, const BankSet& banks);

void write_evaluation_report(const EvaluationReport& report, const std::filesystem::path& path);

/// Per-bank and final score histograms as CSV files, one per score field:
/// <prefix>_hist.csv, <prefix>_comp.csv, <prefix>_patch.csv, <prefix>_final.csv.
void write_score_histograms(const std::vector<ScoredSample>& samples,
                            const std::filesystem::path& prefix, int n_bins = 20);

struct AblationCell {
    bool use_hist = false, use_comp = false, use_patch = false;
    bool adaptive_scaling = false;
    double la_auroc = 0, sa_auroc = 0;
};

struct ReducedDataRow {
    double fraction = 1.0;
    int n_train = 0;
    double la_auroc = 0, sa_auroc = 0;
};

/// Bank-subset x adaptive-scaling grid (7 x 2 cells; scaling off sums raw
/// scores) plus a reduced-data sweep that rebuilds the histogram and
/// composition banks from seeded training subsets at fractions
/// {100%, 50%, 25%, 12.5%}, scoring with adaptive scaling.
struct AblationReport {
    std::vector<AblationCell> cells;
    std::vector<ReducedDataRow> reduced;
};

AblationReport run_ablation(const LoadedDataset& data, const PixelClassifier& clf,
                            int patch_stride, std::uint64_t seed);

void write_ablation_report(const AblationReport& report, const std::filesystem::path& path);

} // namespace psad
