#include "psad/trainer.hpp"

#include <algorithm>
#include <cmath>

#include "psad/losses.hpp"

namespace psad {

namespace {

/// out(y, x) = in(clamp(y - dy), clamp(x - dx)), optionally after mirroring x.
template <typename Copy>
void transform_plane(std::size_t height, std::size_t width, bool flip, int dx, int dy,
                     const Copy& copy) {
    const int h = static_cast<int>(height), w = static_cast<int>(width);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const int sy = std::clamp(y - dy, 0, h - 1);
            int sx = std::clamp(x - dx, 0, w - 1);
            if (flip) sx = w - 1 - sx;
            copy(static_cast<std::size_t>(y), static_cast<std::size_t>(x),
                 static_cast<std::size_t>(sy), static_cast<std::size_t>(sx));
        }
}

struct AdamW {
    double lr = 1e-3, beta1 = 0.9, beta2 = 0.999, eps = 1e-8, weight_decay = 0.0;
    long step = 0;

    struct Moments {
        MatrixX<double> m, v;
        void init(Eigen::Index rows, Eigen::Index cols) {
            m = MatrixX<double>::Zero(rows, cols);
            v = MatrixX<double>::Zero(rows, cols);
        }
    };
    Moments mw1, mb1, mw2, mb2;

    void init(const PixelClassifier& clf) {
        mw1.init(clf.w1.rows(), clf.w1.cols());
        mb1.init(clf.b1.size(), 1);
        if (clf.hidden) {
            mw2.init(clf.w2.rows(), clf.w2.cols());
            mb2.init(clf.b2.size(), 1);
        }
    }

    void apply(MatrixX<double>& param, const MatrixX<double>& grad, Moments& mom, bool decay,
               double bc1, double bc2) {
        mom.m = beta1 * mom.m + (1.0 - beta1) * grad;
        mom.v = beta2 * mom.v + (1.0 - beta2) * grad.cwiseProduct(grad);
        const MatrixX<double> mhat = mom.m / bc1;
        const MatrixX<double> vhat = mom.v / bc2;
        param -= lr * (mhat.array() / (vhat.array().sqrt() + eps)).matrix();
        if (decay) param -= lr * weight_decay * param;
    }

    void update(PixelClassifier& clf, const PixelClassifier::Gradients& g) {
        ++step;
        const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step));
        const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step));
        apply(clf.w1, g.w1, mw1, true, bc1, bc2);
        MatrixX<double> b1m = clf.b1, gb1 = g.b1;
        apply(b1m, gb1, mb1, false, bc1, bc2);
        clf.b1 = b1m;
        if (clf.hidden) {
            apply(clf.w2, g.w2, mw2, true, bc1, bc2);
            MatrixX<double> b2m = clf.b2, gb2 = g.b2;
            apply(b2m, gb2, mb2, false, bc1, bc2);
            clf.b2 = b2m;
        }
    }
};

void check_finite(double value, const char* term, int step) {
    if (!std::isfinite(value))
        throw TrainError(std::string(term) + " loss became non-finite at step " +
                         std::to_string(step));
}

} // namespace

LabeledSample augment_sample(const LabeledSample& sample, const Augmentation& aug) {
    const std::size_t h = sample.features.height();
    const std::size_t w = sample.features.width();
    LabeledSample out;
    out.product_type = sample.product_type;
    out.features.visual = Tensor({h, w, static_cast<std::size_t>(kVisualChannels)});
    out.features.coords = coordinate_channels(h, w);
    out.gt = SegMap(h, w, sample.gt.n_classes);

    transform_plane(
        h, w, aug.flip, aug.dx, aug.dy,
        [&](std::size_t y, std::size_t x, std::size_t sy, std::size_t sx) {
            for (std::size_t c = 0; c < static_cast<std::size_t>(kVisualChannels); ++c)
                out.features.visual.at(y, x, c) = sample.features.visual.at(sy, sx, c);
            out.gt.at(y, x) = sample.gt.at(sy, sx);
        });
    return out;
}

int assign_product_type(const VectorX<double>& unlabeled_embedding,
                        const std::vector<VectorX<double>>& labeled_embeddings,
                        const std::vector<int>& labeled_types) {
    if (labeled_embeddings.empty() || labeled_embeddings.size() != labeled_types.size())
        throw ContractError("type assignment needs at least one labeled embedding");
    std::size_t best = 0;
    double best_d = (labeled_embeddings[0] - unlabeled_embedding).squaredNorm();
    for (std::size_t i = 1; i < labeled_embeddings.size(); ++i) {
        const double d = (labeled_embeddings[i] - unlabeled_embedding).squaredNorm();
        if (d < best_d) {
            best_d = d;
            best = i;
        }
    }
    return labeled_types[best];
}

const LabeledSample& draw_histogram_target(const std::vector<LabeledSample>& labeled,
                                           int product_type, Rng& rng) {
    std::vector<std::size_t> matching;
    for (std::size_t i = 0; i < labeled.size(); ++i)
        if (labeled[i].product_type == product_type) matching.push_back(i);
    if (matching.empty())
        throw ContractError("no labeled image of product type " + std::to_string(product_type));
    const auto pick = static_cast<std::size_t>(
        rng.uniform_int(0, static_cast<std::int64_t>(matching.size()) - 1));
    return labeled[matching[pick]];
}

TrainResult train_classifier(const std::vector<LabeledSample>& labeled,
                             const std::vector<UnlabeledSample>& unlabeled,
                             const TrainConfig& cfg) {
    if (labeled.empty()) throw ContractError("training needs at least one labeled sample");
    if (cfg.batch_size < 1) throw ContractError("batch size must be >= 1");
    if (cfg.lambda_ce <= 0 || cfg.lambda_entropy <= 0 || cfg.lambda_hist <= 0)
        throw ContractError("loss weights must be positive");
    if (cfg.warmup_steps < 0 || cfg.main_steps < 0)
        throw ContractError("step counts must be >= 0");

    const std::uint16_t n_classes = labeled.front().gt.n_classes;
    for (const auto& s : labeled) {
        s.gt.validate();
        if (s.gt.n_classes != n_classes)
            throw ContractError("labeled samples disagree on the class count");
    }

    Rng rng(cfg.seed);
    PixelClassifier clf =
        cfg.hidden_width > 0
            ? PixelClassifier::make_hidden(kFeatureChannels, cfg.hidden_width, n_classes, rng)
            : PixelClassifier::make_linear(kFeatureChannels, n_classes);

    AdamW opt;
    opt.lr = cfg.learning_rate;
    opt.weight_decay = cfg.weight_decay;
    opt.init(clf);

    TrainStats stats;
    // Unlabeled feature matrices are materialized on first access only, so the
    // access counter observes exactly what the objective touches.
    std::vector<MatrixX<double>> unlabeled_cache(unlabeled.size());
    auto unlabeled_features = [&](std::size_t i) -> const MatrixX<double>& {
        ++stats.unlabeled_accesses;
        if (unlabeled_cache[i].size() == 0)
            unlabeled_cache[i] = feature_matrix(unlabeled[i].features);
        return unlabeled_cache[i];
    };

    const int total_steps = cfg.warmup_steps + cfg.main_steps;
    const int labeled_slots_main =
        unlabeled.empty() ? cfg.batch_size : std::min(cfg.labeled_per_batch, cfg.batch_size);

    for (int step = 0; step < total_steps; ++step) {
        const bool warmup = step < cfg.warmup_steps;
        const int n_lab = warmup ? cfg.batch_size : labeled_slots_main;
        const int n_unl = warmup ? 0 : cfg.batch_size - n_lab;

        PixelClassifier::Gradients grads;
        grads.setZero(clf);
        double ce_sum = 0, dice_sum = 0, entropy_sum = 0, hist_sum = 0;

        for (int b = 0; b < n_lab; ++b) {
            const auto idx = static_cast<std::size_t>(
                rng.uniform_int(0, static_cast<std::int64_t>(labeled.size()) - 1));
            Augmentation aug;
            aug.flip = rng.bernoulli();
            aug.dx = static_cast<int>(rng.uniform_int(-cfg.max_translation, cfg.max_translation));
            aug.dy = static_cast<int>(rng.uniform_int(-cfg.max_translation, cfg.max_translation));
            const LabeledSample sample = augment_sample(labeled[idx], aug);
            const MatrixX<double> feats = feature_matrix(sample.features);

            PixelClassifier::Activations cache;
            const MatrixX<double> z = clf.logits(feats, &cache);
            const MatrixX<double> p = softmax_rows(z);
            const auto ce = cross_entropy_loss(p, sample.gt);
            const auto dice = dice_loss(p, sample.gt);
            ce_sum += ce.value;
            dice_sum += dice.value;
            const MatrixX<double> gz =
                (dice.grad_logits + cfg.lambda_ce * ce.grad_logits) / static_cast<double>(n_lab);
            grads.accumulate(clf.backward(feats, cache, gz));
        }

        for (int b = 0; b < n_unl; ++b) {
            const auto idx = static_cast<std::size_t>(
                rng.uniform_int(0, static_cast<std::int64_t>(unlabeled.size()) - 1));
            const MatrixX<double>& feats = unlabeled_features(idx);
            const LabeledSample& target =
                draw_histogram_target(labeled, unlabeled[idx].product_type, rng);

            PixelClassifier::Activations cache;
            const MatrixX<double> z = clf.logits(feats, &cache);
            const MatrixX<double> p = softmax_rows(z);
            const auto ent = entropy_loss(p);
            const auto hist = histogram_match_loss(p, target.gt);
            entropy_sum += ent.value;
            hist_sum += hist.value;
            const MatrixX<double> gz =
                (cfg.lambda_entropy * ent.grad_logits + cfg.lambda_hist * hist.grad_logits) /
                static_cast<double>(n_unl);
            grads.accumulate(clf.backward(feats, cache, gz));
        }

        const double ce_mean = n_lab > 0 ? ce_sum / n_lab : 0.0;
        const double dice_mean = n_lab > 0 ? dice_sum / n_lab : 0.0;
        const double ent_mean = n_unl > 0 ? entropy_sum / n_unl : 0.0;
        const double hist_mean = n_unl > 0 ? hist_sum / n_unl : 0.0;
        check_finite(ce_mean, "cross-entropy", step);
        check_finite(dice_mean, "dice", step);
        check_finite(ent_mean, "entropy", step);
        check_finite(hist_mean, "histogram-matching", step);

        opt.update(clf, grads);

        stats.last_ce = ce_mean;
        stats.last_dice = dice_mean;
        stats.last_entropy = ent_mean;
        stats.last_hist = hist_mean;
        stats.last_total = dice_mean + cfg.lambda_ce * ce_mean + cfg.lambda_entropy * ent_mean +
                           cfg.lambda_hist * hist_mean;
        ++stats.steps_run;
    }

    return TrainResult{std::move(clf), stats};
}

} // namespace psad
