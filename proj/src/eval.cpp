#include "psad/eval.hpp"

#include <algorithm>
#include <fstream>

#include <json.hpp>

#include "psad/parallel.hpp"
#include "psad/rng.hpp"

namespace psad {

namespace {

using nlohmann::json;

std::vector<double> collect(const std::vector<ScoredSample>& samples, const std::string& label,
                            ScoreField field) {
    std::vector<double> out;
    for (const auto& s : samples)
        if (s.label == label) out.push_back(score_field(s, field));
    return out;
}

double label_auroc(const std::vector<ScoredSample>& samples, const std::string& anomaly_label,
                   ScoreField field) {
    const auto normal = collect(samples, "normal", field);
    const auto anomalous = collect(samples, anomaly_label, field);
    return auroc(normal, anomalous);
}

} // namespace

EvaluationReport evaluate_dataset(const LoadedDataset& data, const BankSet& banks) {
    const auto test_entries = data.entries_with_role("test");
    if (test_entries.empty()) throw ContractError("dataset has no test entries");

    EvaluationReport report;
    report.samples.resize(test_entries.size());
    parallel_for(test_entries.size(), [&](std::size_t i) {
        const ManifestEntry& e = *test_entries[i];
        const SampleScores s = score_image(banks, data.image(e));
        report.samples[i] = ScoredSample{e.id, e.label, s.s_hist, s.s_comp, s.s_patch, s.s_final};
    });

    report.la_auroc = label_auroc(report.samples, "LA", ScoreField::final_sum);
    report.sa_auroc = label_auroc(report.samples, "SA", ScoreField::final_sum);
    report.hist = {label_auroc(report.samples, "LA", ScoreField::hist),
                   label_auroc(report.samples, "SA", ScoreField::hist)};
    report.comp = {label_auroc(report.samples, "LA", ScoreField::comp),
                   label_auroc(report.samples, "SA", ScoreField::comp)};
    report.patch = {label_auroc(report.samples, "LA", ScoreField::patch),
                    label_auroc(report.samples, "SA", ScoreField::patch)};

    const auto normals = data.test_entries_with_label("normal");
    IouAccumulator iou(banks.n_classes);
    std::vector<SegMap> predictions(normals.size());
    parallel_for(normals.size(), [&](std::size_t i) {
        predictions[i] = predict(banks.classifier, pixel_features(data.image(*normals[i]))).second;
    });
    for (std::size_t i = 0; i < normals.size(); ++i)
        iou.add(predictions[i], data.ground_truth(*normals[i]));
    report.per_class_iou = iou.per_class();
    report.mean_iou = iou.mean();
    return report;
}

void write_evaluation_report(const EvaluationReport& report,
                             const std::filesystem::path& path) {
    json j;
    j["la_auroc"] = report.la_auroc;
    j["sa_auroc"] = report.sa_auroc;
    j["per_bank"] = {
        {"hist", {{"la_auroc", report.hist.la}, {"sa_auroc", report.hist.sa}}},
        {"comp", {{"la_auroc", report.comp.la}, {"sa_auroc", report.comp.sa}}},
        {"patch", {{"la_auroc", report.patch.la}, {"sa_auroc", report.patch.sa}}},
    };
    j["mean_iou"] = report.mean_iou;
    json iou = json::array();
    for (Eigen::Index c = 0; c < report.per_class_iou.size(); ++c)
        iou.push_back(report.per_class_iou(c));
    j["per_class_iou"] = std::move(iou);
    json samples = json::array();
    for (const auto& s : report.samples)
        samples.push_back({{"id", s.id},
                           {"label", s.label},
                           {"s_hist", s.s_hist},
                           {"s_comp", s.s_comp},
                           {"s_patch", s.s_patch},
                           {"s_final", s.s_final}});
    j["samples"] = std::move(samples);

    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << j.dump(2) << "\n";
    if (!out) throw IoError("write failed for " + path.string());
}

void write_score_histograms(const std::vector<ScoredSample>& samples,
                            const std::filesystem::path& prefix, int n_bins) {
    const std::pair<ScoreField, const char*> fields[] = {
        {ScoreField::hist, "hist"},
        {ScoreField::comp, "comp"},
        {ScoreField::patch, "patch"},
        {ScoreField::final_sum, "final"},
    };
    for (const auto& [field, name] : fields) {
        const ScoreHistogram h = score_histogram(samples, field, n_bins);
        const std::filesystem::path path = prefix.string() + "_" + name + ".csv";
        std::ofstream out(path, std::ios::trunc);
        if (!out) throw IoError("cannot open " + path.string() + " for writing");
        write_histogram_csv(h, out);
        if (!out) throw IoError("write failed for " + path.string());
    }
}

namespace {

struct TestPoint {
    std::string label;
    SampleScores scores;
    ClassHistogram hist;
    CompositionEmbedding comp;
};

double subset_auroc(const std::vector<TestPoint>& points, const std::string& anomaly_label,
                    bool use_hist, bool use_comp, bool use_patch, bool scaled) {
    std::vector<double> normal, anomalous;
    for (const auto& p : points) {
        double s = 0.0;
        if (use_hist) s += scaled ? p.scores.s_hist : p.scores.raw_hist;
        if (use_comp) s += scaled ? p.scores.s_comp : p.scores.raw_comp;
        if (use_patch) s += scaled ? p.scores.s_patch : p.scores.raw_patch;
        if (p.label == "normal")
            normal.push_back(s);
        else if (p.label == anomaly_label)
            anomalous.push_back(s);
    }
    return auroc(normal, anomalous);
}

} // namespace

AblationReport run_ablation(const LoadedDataset& data, const PixelClassifier& clf,
                            int patch_stride, std::uint64_t seed) {
    const std::vector<Tensor> train = data.train_images();
    const BankInputs inputs = compute_bank_inputs(train, clf, patch_stride);
    BankSet banks;
    banks.classifier = clf;
    banks.patch_stride = patch_stride;
    banks.n_classes = static_cast<int>(clf.n_classes());
    banks.hist = assemble_pointwise_bank(BankKind::hist, inputs.hists);
    banks.comp = assemble_pointwise_bank(BankKind::comp, inputs.comps);
    banks.patch = assemble_patch_bank(inputs.patch_groups);

    const auto test_entries = data.entries_with_role("test");
    if (test_entries.empty()) throw ContractError("dataset has no test entries");
    std::vector<TestPoint> points(test_entries.size());
    parallel_for(test_entries.size(), [&](std::size_t i) {
        const ManifestEntry& e = *test_entries[i];
        const Tensor image = data.image(e);
        const PixelFeatureMap feats = pixel_features(image);
        const SegMap seg = predict(clf, feats).second;
        TestPoint p;
        p.label = e.label;
        p.hist = class_histogram(seg, banks.n_classes);
        p.comp = composition_embedding(visual_matrix(feats), seg, banks.n_classes);
        const MatrixX<double> patches = patch_matrix(patch_embeddings(image, patch_stride));
        p.scores.raw_hist = nn_score(banks.hist, p.hist);
        p.scores.raw_comp = nn_score(banks.comp, p.comp);
        p.scores.raw_patch = patch_score(banks.patch, patches);
        p.scores.s_hist = normalize_score(p.scores.raw_hist, banks.hist);
        p.scores.s_comp = normalize_score(p.scores.raw_comp, banks.comp);
        p.scores.s_patch = normalize_score(p.scores.raw_patch, banks.patch);
        points[i] = std::move(p);
    });

    AblationReport report;
    for (int mask = 1; mask < 8; ++mask) {
        for (const bool scaled : {false, true}) {
            AblationCell cell;
            cell.use_hist = mask & 1;
            cell.use_comp = mask & 2;
            cell.use_patch = mask & 4;
            cell.adaptive_scaling = scaled;
            cell.la_auroc = subset_auroc(points, "LA", cell.use_hist, cell.use_comp,
                                         cell.use_patch, scaled);
            cell.sa_auroc = subset_auroc(points, "SA", cell.use_hist, cell.use_comp,
                                         cell.use_patch, scaled);
            report.cells.push_back(cell);
        }
    }

    // Reduced-data sweep over the histogram + composition combination.
    const auto n_train = static_cast<std::int64_t>(train.size());
    Rng rng(Rng::derive(seed, streams::kAblation));
    std::vector<std::size_t> order(train.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    for (std::size_t i = order.size(); i > 1; --i)
        std::swap(order[i - 1],
                  order[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i) - 1))]);

    for (const double fraction : {1.0, 0.5, 0.25, 0.125}) {
        const auto keep = std::max<std::int64_t>(
            2, static_cast<std::int64_t>(std::lround(fraction * static_cast<double>(n_train))));
        std::vector<VectorX<double>> hists, comps;
        for (std::int64_t i = 0; i < keep; ++i) {
            hists.push_back(inputs.hists[order[static_cast<std::size_t>(i)]]);
            comps.push_back(inputs.comps[order[static_cast<std::size_t>(i)]]);
        }
        const MemoryBank hist_bank = assemble_pointwise_bank(BankKind::hist, hists);
        const MemoryBank comp_bank = assemble_pointwise_bank(BankKind::comp, comps);

        std::vector<double> normal_la, anomalous_la, normal_sa, anomalous_sa;
        for (const auto& p : points) {
            const double s = normalize_score(nn_score(hist_bank, p.hist), hist_bank) +
                             normalize_score(nn_score(comp_bank, p.comp), comp_bank);
            if (p.label == "normal") {
                normal_la.push_back(s);
                normal_sa.push_back(s);
            } else if (p.label == "LA") {
                anomalous_la.push_back(s);
            } else if (p.label == "SA") {
                anomalous_sa.push_back(s);
            }
        }
        ReducedDataRow row;
        row.fraction = fraction;
        row.n_train = static_cast<int>(keep);
        row.la_auroc = auroc(normal_la, anomalous_la);
        row.sa_auroc = auroc(normal_sa, anomalous_sa);
        report.reduced.push_back(row);
    }
    return report;
}

void write_ablation_report(const AblationReport& report, const std::filesystem::path& path) {
    json j;
    json cells = json::array();
    for (const auto& c : report.cells) {
        json banks = json::array();
        if (c.use_hist) banks.push_back("hist");
        if (c.use_comp) banks.push_back("comp");
        if (c.use_patch) banks.push_back("patch");
        cells.push_back({{"banks", std::move(banks)},
                         {"adaptive_scaling", c.adaptive_scaling},
                         {"la_auroc", c.la_auroc},
                         {"sa_auroc", c.sa_auroc}});
    }
    j["cells"] = std::move(cells);
    json reduced = json::array();
    for (const auto& r : report.reduced)
        reduced.push_back({{"fraction", r.fraction},
                           {"n_train", r.n_train},
                           {"la_auroc", r.la_auroc},
                           {"sa_auroc", r.sa_auroc}});
    j["reduced_data"] = std::move(reduced);

    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << j.dump(2) << "\n";
    if (!out) throw IoError("write failed for " + path.string());
}

} // namespace psad
