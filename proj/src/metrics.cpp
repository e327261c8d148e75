#include "psad/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace psad {

double auroc(std::span<const double> normal_scores, std::span<const double> anomalous_scores) {
    if (normal_scores.empty() || anomalous_scores.empty())
        throw ContractError("AUROC needs scores on both sides");

    std::vector<std::pair<double, int>> pooled; // (score, is_anomalous)
    pooled.reserve(normal_scores.size() + anomalous_scores.size());
    for (double s : normal_scores) {
        if (!std::isfinite(s)) throw ContractError("non-finite score");
        pooled.emplace_back(s, 0);
    }
    for (double s : anomalous_scores) {
        if (!std::isfinite(s)) throw ContractError("non-finite score");
        pooled.emplace_back(s, 1);
    }
    std::sort(pooled.begin(), pooled.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });

    // Average ranks over tie runs; integer-and-half ranks stay exact in f64.
    double rank_sum_anomalous = 0.0;
    std::size_t i = 0;
    while (i < pooled.size()) {
        std::size_t j = i;
        while (j < pooled.size() && pooled[j].first == pooled[i].first) ++j;
        const double avg_rank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j));
        for (std::size_t k = i; k < j; ++k)
            if (pooled[k].second) rank_sum_anomalous += avg_rank;
        i = j;
    }

    const double m = static_cast<double>(anomalous_scores.size());
    const double n = static_cast<double>(normal_scores.size());
    const double u = rank_sum_anomalous - m * (m + 1.0) / 2.0;
    return u / (m * n);
}

IouAccumulator::IouAccumulator(int n_classes)
    : intersection_(static_cast<std::size_t>(n_classes), 0),
      union_(static_cast<std::size_t>(n_classes), 0) {
    if (n_classes < 1) throw ContractError("IoU needs at least one class");
}

void IouAccumulator::add(const SegMap& predicted, const SegMap& ground_truth) {
    if (predicted.height != ground_truth.height || predicted.width != ground_truth.width)
        throw ContractError("prediction and ground truth sizes differ");
    for (std::size_t i = 0; i < predicted.labels.size(); ++i) {
        const auto p = predicted.labels[i];
        const auto g = ground_truth.labels[i];
        if (p >= intersection_.size() || g >= intersection_.size())
            throw ContractError("label out of the accumulator's class range");
        if (p == g) {
            ++intersection_[p];
            ++union_[p];
        } else {
            ++union_[p];
            ++union_[g];
        }
    }
}

VectorX<double> IouAccumulator::per_class() const {
    VectorX<double> iou(static_cast<Eigen::Index>(union_.size()));
    for (std::size_t c = 0; c < union_.size(); ++c)
        iou(static_cast<Eigen::Index>(c)) =
            union_[c] == 0 ? 1.0
                           : static_cast<double>(intersection_[c]) /
                                 static_cast<double>(union_[c]);
    return iou;
}

double IouAccumulator::mean() const { return per_class().mean(); }

double score_field(const ScoredSample& s, ScoreField field) {
    switch (field) {
        case ScoreField::hist: return s.s_hist;
        case ScoreField::comp: return s.s_comp;
        case ScoreField::patch: return s.s_patch;
        case ScoreField::final_sum: return s.s_final;
    }
    throw ContractError("unknown score field");
}

ScoreHistogram score_histogram(const std::vector<ScoredSample>& samples, ScoreField field,
                               int n_bins) {
    if (n_bins < 1) throw ContractError("histogram needs at least one bin");
    ScoreHistogram h;
    h.n_bins = n_bins;

    double max_score = 0.0;
    for (const auto& s : samples) max_score = std::max(max_score, score_field(s, field));
    h.bin_width = max_score > 0.0 ? max_score / n_bins : 1.0;

    auto group_index = [&](const std::string& label) -> std::size_t {
        for (std::size_t g = 0; g < h.group_labels.size(); ++g)
            if (h.group_labels[g] == label) return g;
        h.group_labels.push_back(label);
        h.counts.emplace_back(static_cast<std::size_t>(n_bins), 0);
        return h.group_labels.size() - 1;
    };

    for (const auto& s : samples) {
        const std::size_t g = group_index(s.label);
        auto bin = static_cast<std::int64_t>(score_field(s, field) / h.bin_width);
        bin = std::clamp<std::int64_t>(bin, 0, n_bins - 1);
        ++h.counts[g][static_cast<std::size_t>(bin)];
    }
    return h;
}

void write_histogram_csv(const ScoreHistogram& h, std::ostream& out) {
    out << "label,bin_lo,bin_hi,count\n";
    for (std::size_t g = 0; g < h.group_labels.size(); ++g)
        for (int b = 0; b < h.n_bins; ++b)
            out << h.group_labels[g] << ',' << h.bin_width * b << ',' << h.bin_width * (b + 1)
                << ',' << h.counts[g][static_cast<std::size_t>(b)] << '\n';
}

} // namespace psad
