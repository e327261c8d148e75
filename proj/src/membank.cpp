#include "psad/membank.hpp"

#include <algorithm>
#include <limits>

#include <json.hpp>

#include "psad/parallel.hpp"
#include "psad/tensor_io.hpp"

namespace psad {

namespace {

/// Sequential squared L2 distance. Deliberately a plain loop: scores must
/// reproduce an exhaustive-scan oracle bit for bit, so the summation order
/// is part of the contract.
double squared_distance(const double* a, const double* b, Eigen::Index dim) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < dim; ++i) {
        const double d = a[i] - b[i];
        acc += d * d;
    }
    return acc;
}

/// Row-major copy so rows are contiguous for the distance kernel.
using RowMatrix = RowMajorMatrixX<double>;

double min_distance(const RowMatrix& rows, const double* probe, Eigen::Index skip_begin = -1,
                    Eigen::Index skip_end = -1) {
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index k = 0; k < rows.rows(); ++k) {
        if (k >= skip_begin && k < skip_end) continue;
        const double d = squared_distance(rows.row(k).data(), probe, rows.cols());
        if (d < best) best = d;
    }
    return best;
}

} // namespace

std::string to_string(BankKind kind) {
    switch (kind) {
        case BankKind::hist: return "hist";
        case BankKind::comp: return "comp";
        case BankKind::patch: return "patch";
    }
    throw ContractError("unknown bank kind");
}

ClassHistogram class_histogram(const SegMap& seg, int n_classes) {
    if (n_classes < 1 || seg.n_classes > n_classes)
        throw ContractError("histogram class count below the segmap's");
    if (seg.size() == 0) throw ContractError("empty segmap");
    ClassHistogram h = ClassHistogram::Zero(n_classes);
    for (auto v : seg.labels) {
        if (v >= n_classes) throw ContractError("segmap label out of range");
        h(v) += 1.0;
    }
    return h / static_cast<double>(seg.size());
}

CompositionEmbedding composition_embedding(const MatrixX<double>& visual, const SegMap& seg,
                                           int n_classes) {
    if (visual.rows() != static_cast<Eigen::Index>(seg.size()))
        throw ContractError("visual feature rows do not match the segmap");
    const Eigen::Index dim = visual.cols();
    CompositionEmbedding e = CompositionEmbedding::Zero(n_classes * dim);
    VectorX<double> counts = VectorX<double>::Zero(n_classes);
    for (Eigen::Index i = 0; i < visual.rows(); ++i) {
        const auto c = seg.labels[static_cast<std::size_t>(i)];
        if (c >= n_classes) throw ContractError("segmap label out of range");
        counts(c) += 1.0;
        e.segment(c * dim, dim) += visual.row(i).transpose();
    }
    for (int c = 0; c < n_classes; ++c)
        if (counts(c) > 0.0) e.segment(c * dim, dim) /= counts(c);
    return e;
}

double nn_score(const MemoryBank& bank, const VectorX<double>& e_test) {
    if (bank.elements.rows() == 0) throw ContractError("nearest-neighbor score on an empty bank");
    if (bank.elements.cols() != e_test.size())
        throw ContractError("test embedding dim does not match the bank");
    const RowMatrix rows = bank.elements;
    return min_distance(rows, e_test.data());
}

double patch_score(const MemoryBank& bank, const MatrixX<double>& test_patches) {
    if (bank.elements.rows() == 0) throw ContractError("patch score on an empty bank");
    if (test_patches.rows() == 0) throw ContractError("patch score needs test patches");
    if (bank.elements.cols() != test_patches.cols())
        throw ContractError("patch dim does not match the bank");
    const RowMatrix stored = bank.elements;
    const RowMatrix probes = test_patches;
    double worst = 0.0;
    for (Eigen::Index i = 0; i < probes.rows(); ++i) {
        const double d = min_distance(stored, probes.row(i).data());
        if (i == 0 || d > worst) worst = d;
    }
    return worst;
}

VectorX<double> loo_scores_pointwise(const MatrixX<double>& elements) {
    const Eigen::Index n = elements.rows();
    if (n < 2) throw ContractError("leave-one-out needs at least two training images");
    const RowMatrix rows = elements;
    VectorX<double> scores(n);
    parallel_for(static_cast<std::size_t>(n), [&](std::size_t k) {
        const auto kk = static_cast<Eigen::Index>(k);
        scores(kk) = min_distance(rows, rows.row(kk).data(), kk, kk + 1);
    });
    return scores;
}

VectorX<double> loo_scores_grouped(const MatrixX<double>& all_patches,
                                   Eigen::Index patches_per_image) {
    if (patches_per_image < 1) throw ContractError("patch group size must be >= 1");
    if (all_patches.rows() % patches_per_image != 0)
        throw ContractError("patch rows are not a whole number of groups");
    const Eigen::Index n_groups = all_patches.rows() / patches_per_image;
    if (n_groups < 2) throw ContractError("leave-one-out needs at least two training images");
    const RowMatrix rows = all_patches;
    VectorX<double> scores(n_groups);
    parallel_for(static_cast<std::size_t>(n_groups), [&](std::size_t k) {
        const auto kk = static_cast<Eigen::Index>(k);
        const Eigen::Index lo = kk * patches_per_image;
        const Eigen::Index hi = lo + patches_per_image;
        double worst = 0.0;
        for (Eigen::Index i = lo; i < hi; ++i) {
            const double d = min_distance(rows, rows.row(i).data(), lo, hi);
            if (i == lo || d > worst) worst = d;
        }
        scores(kk) = worst;
    });
    return scores;
}

double normalize_score(double raw, const MemoryBank& bank) {
    return raw / std::max(bank.scale, 1e-12);
}

double final_score(double s_hist, double s_comp, double s_patch) {
    return s_hist + s_comp + s_patch;
}

BankInputs compute_bank_inputs(const std::vector<Tensor>& images, const PixelClassifier& clf,
                               int patch_stride) {
    const auto n = images.size();
    const int n_classes = static_cast<int>(clf.n_classes());
    BankInputs inputs;
    inputs.hists.resize(n);
    inputs.comps.resize(n);
    inputs.patch_groups.resize(n);
    parallel_for(n, [&](std::size_t i) {
        const PixelFeatureMap feats = pixel_features(images[i]);
        const SegMap seg = predict(clf, feats).second;
        inputs.hists[i] = class_histogram(seg, n_classes);
        inputs.comps[i] = composition_embedding(visual_matrix(feats), seg, n_classes);
        inputs.patch_groups[i] = patch_matrix(patch_embeddings(images[i], patch_stride));
    });
    return inputs;
}

MemoryBank assemble_pointwise_bank(BankKind kind,
                                   const std::vector<VectorX<double>>& elements) {
    if (kind == BankKind::patch)
        throw ContractError("pointwise assembly is for hist/comp banks");
    if (elements.size() < 2)
        throw ContractError("bank construction needs at least two training images");
    MemoryBank bank;
    bank.kind = kind;
    bank.elements.resize(static_cast<Eigen::Index>(elements.size()), elements[0].size());
    for (std::size_t i = 0; i < elements.size(); ++i) {
        if (elements[i].size() != bank.elements.cols())
            throw ContractError("bank elements disagree on dimension");
        bank.elements.row(static_cast<Eigen::Index>(i)) = elements[i].transpose();
    }
    bank.loo_scores = loo_scores_pointwise(bank.elements);
    bank.scale = bank.loo_scores.maxCoeff();
    return bank;
}

MemoryBank assemble_patch_bank(const std::vector<MatrixX<double>>& groups) {
    if (groups.size() < 2)
        throw ContractError("bank construction needs at least two training images");
    const Eigen::Index n_patches = groups[0].rows();
    for (const auto& g : groups)
        if (g.rows() != n_patches || g.cols() != groups[0].cols())
            throw ContractError("training images disagree on patch layout");
    MemoryBank bank;
    bank.kind = BankKind::patch;
    bank.patches_per_image = n_patches;
    bank.elements.resize(static_cast<Eigen::Index>(groups.size()) * n_patches, groups[0].cols());
    for (std::size_t i = 0; i < groups.size(); ++i)
        bank.elements.middleRows(static_cast<Eigen::Index>(i) * n_patches, n_patches) =
            groups[i];
    bank.loo_scores = loo_scores_grouped(bank.elements, n_patches);
    bank.scale = bank.loo_scores.maxCoeff();
    return bank;
}

BankSet build_banks(const std::vector<Tensor>& train_images, const PixelClassifier& clf,
                    int patch_stride) {
    if (train_images.size() < 2)
        throw ContractError("bank construction needs at least two training images");
    const BankInputs inputs = compute_bank_inputs(train_images, clf, patch_stride);
    BankSet banks;
    banks.classifier = clf;
    banks.patch_stride = patch_stride;
    banks.n_classes = static_cast<int>(clf.n_classes());
    banks.hist = assemble_pointwise_bank(BankKind::hist, inputs.hists);
    banks.comp = assemble_pointwise_bank(BankKind::comp, inputs.comps);
    banks.patch = assemble_patch_bank(inputs.patch_groups);
    return banks;
}

SampleScores score_image(const BankSet& banks, const Tensor& image) {
    const PixelFeatureMap feats = pixel_features(image);
    const SegMap seg = predict(banks.classifier, feats).second;
    const ClassHistogram hist = class_histogram(seg, banks.n_classes);
    const CompositionEmbedding comp =
        composition_embedding(visual_matrix(feats), seg, banks.n_classes);
    const MatrixX<double> patches =
        patch_matrix(patch_embeddings(image, banks.patch_stride));

    SampleScores s;
    s.raw_hist = nn_score(banks.hist, hist);
    s.raw_comp = nn_score(banks.comp, comp);
    s.raw_patch = patch_score(banks.patch, patches);
    s.s_hist = normalize_score(s.raw_hist, banks.hist);
    s.s_comp = normalize_score(s.raw_comp, banks.comp);
    s.s_patch = normalize_score(s.raw_patch, banks.patch);
    s.s_final = final_score(s.s_hist, s.s_comp, s.s_patch);
    return s;
}

namespace {

void append_bank(std::string& out, const MemoryBank& bank) {
    using namespace detail;
    out += "PMB1";
    put_u8(out, static_cast<std::uint8_t>(bank.kind));
    put_u64(out, static_cast<std::uint64_t>(bank.elements.rows()));
    put_u64(out, static_cast<std::uint64_t>(bank.elements.cols()));
    for (Eigen::Index i = 0; i < bank.elements.rows(); ++i)
        for (Eigen::Index j = 0; j < bank.elements.cols(); ++j)
            put_f32(out, static_cast<float>(bank.elements(i, j)));
    put_u64(out, static_cast<std::uint64_t>(bank.loo_scores.size()));
    for (Eigen::Index i = 0; i < bank.loo_scores.size(); ++i)
        put_f64(out, bank.loo_scores(i));
    put_f64(out, bank.scale);
}

MemoryBank parse_bank(detail::ByteReader& in) {
    in.expect_magic("PMB1");
    MemoryBank bank;
    const std::uint8_t kind = in.u8();
    if (kind > 2) throw FormatError("unknown bank kind byte");
    bank.kind = static_cast<BankKind>(kind);
    const std::uint64_t rows = in.u64();
    const std::uint64_t cols = in.u64();
    if (rows > (1u << 24) || cols > (1u << 20) || (rows > 0 && cols == 0))
        throw FormatError("bank dimensions out of range");
    bank.elements.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (Eigen::Index i = 0; i < bank.elements.rows(); ++i)
        for (Eigen::Index j = 0; j < bank.elements.cols(); ++j) bank.elements(i, j) = in.f32();
    const std::uint64_t n_scores = in.u64();
    if (n_scores > rows && !(bank.kind == BankKind::patch))
        throw FormatError("more LOO scores than bank elements");
    bank.loo_scores.resize(static_cast<Eigen::Index>(n_scores));
    for (Eigen::Index i = 0; i < bank.loo_scores.size(); ++i) bank.loo_scores(i) = in.f64();
    bank.scale = in.f64();
    if (bank.kind == BankKind::patch && n_scores > 0 && rows % n_scores == 0)
        bank.patches_per_image = static_cast<Eigen::Index>(rows / n_scores);
    return bank;
}

} // namespace

void write_bank(const MemoryBank& bank, const std::filesystem::path& path) {
    std::string out;
    append_bank(out, bank);
    detail::write_file(path, out);
}

MemoryBank read_bank(const std::filesystem::path& path) {
    const std::string bytes = detail::read_file(path);
    detail::ByteReader in(bytes, path.string());
    MemoryBank bank = parse_bank(in);
    in.require_exhausted();
    return bank;
}

void write_bank_set(const BankSet& banks, const std::filesystem::path& path) {
    std::string out;
    detail::append_classifier(out, banks.classifier);
    append_bank(out, banks.hist);
    append_bank(out, banks.comp);
    append_bank(out, banks.patch);
    nlohmann::json meta;
    meta["patch_stride"] = banks.patch_stride;
    meta["n_classes"] = banks.n_classes;
    const std::string meta_str = meta.dump();
    detail::put_u64(out, meta_str.size());
    out += meta_str;
    detail::write_file(path, out);
}

BankSet read_bank_set(const std::filesystem::path& path) {
    const std::string bytes = detail::read_file(path);
    detail::ByteReader in(bytes, path.string());
    BankSet banks;
    banks.classifier = detail::parse_classifier(in);
    banks.hist = parse_bank(in);
    banks.comp = parse_bank(in);
    banks.patch = parse_bank(in);
    const std::uint64_t meta_len = in.u64();
    if (meta_len > (1u << 20)) throw FormatError(path.string() + ": oversized metadata");
    std::string meta_str(meta_len, '\0');
    in.raw(meta_str.data(), meta_len);
    in.require_exhausted();
    try {
        const auto meta = nlohmann::json::parse(meta_str);
        banks.patch_stride = meta.at("patch_stride").get<int>();
        banks.n_classes = meta.at("n_classes").get<int>();
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(path.string() + ": bad bank metadata: " + e.what());
    }
    if (banks.hist.kind != BankKind::hist || banks.comp.kind != BankKind::comp ||
        banks.patch.kind != BankKind::patch)
        throw FormatError(path.string() + ": bank records out of order");
    return banks;
}

} // namespace psad
