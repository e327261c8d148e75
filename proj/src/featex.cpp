#include "psad/featex.hpp"

#include <cmath>
#include <vector>

namespace psad {

namespace {

/// Summed-area table over one replicate-padded channel. Values are offset
/// by the channel's first pixel before accumulation, so a constant channel
/// produces exactly-zero tables (and exactly-zero gradients and stds).
class BoxFilter {
public:
    BoxFilter(const Tensor& image, std::size_t channel, int pad)
        : h_(static_cast<int>(image.dim(0))), w_(static_cast<int>(image.dim(1))), pad_(pad),
          offset_(image.at(0, 0, channel)) {
        const int ph = h_ + 2 * pad_;
        const int pw = w_ + 2 * pad_;
        sum_.assign(static_cast<std::size_t>(ph + 1) * static_cast<std::size_t>(pw + 1), 0.0);
        sumsq_.assign(sum_.size(), 0.0);
        for (int y = 0; y < ph; ++y) {
            const int sy = std::clamp(y - pad_, 0, h_ - 1);
            for (int x = 0; x < pw; ++x) {
                const int sx = std::clamp(x - pad_, 0, w_ - 1);
                const double v = static_cast<double>(image.at(static_cast<std::size_t>(sy),
                                                              static_cast<std::size_t>(sx),
                                                              channel)) -
                                 offset_;
                const std::size_t i = idx(y + 1, x + 1);
                sum_[i] = v + sum_[idx(y, x + 1)] + sum_[idx(y + 1, x)] - sum_[idx(y, x)];
                sumsq_[i] =
                    v * v + sumsq_[idx(y, x + 1)] + sumsq_[idx(y + 1, x)] - sumsq_[idx(y, x)];
            }
        }
    }

    /// Box mean at image coords (y, x); y/x may extend one pixel outside the
    /// image (the gradient apron), radius r <= pad - 1.
    double mean(int y, int x, int r) const { return window(sum_, y, x, r) + offset_; }

    /// Offset-free mean; differences of these are exact for flat regions.
    double centered_mean(int y, int x, int r) const { return window(sum_, y, x, r); }

    /// Variance of the window via the centered second moment.
    double variance(int y, int x, int r) const {
        const double m = window(sum_, y, x, r);
        return window(sumsq_, y, x, r) - m * m;
    }

private:
    std::size_t idx(int y, int x) const {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(w_ + 2 * pad_ + 1) +
               static_cast<std::size_t>(x);
    }

    double window(const std::vector<double>& table, int y, int x, int r) const {
        const int y0 = y - r + pad_, y1 = y + r + pad_ + 1;
        const int x0 = x - r + pad_, x1 = x + r + pad_ + 1;
        const double s = table[idx(y1, x1)] - table[idx(y0, x1)] - table[idx(y1, x0)] +
                         table[idx(y0, x0)];
        const double area = static_cast<double>(2 * r + 1) * static_cast<double>(2 * r + 1);
        return s / area;
    }

    int h_, w_, pad_;
    double offset_;
    std::vector<double> sum_, sumsq_;
};

} // namespace

Tensor coordinate_channels(std::size_t height, std::size_t width) {
    Tensor coords({height, width, 2});
    const double dx = width > 1 ? 1.0 / static_cast<double>(width - 1) : 0.0;
    const double dy = height > 1 ? 1.0 / static_cast<double>(height - 1) : 0.0;
    for (std::size_t y = 0; y < height; ++y)
        for (std::size_t x = 0; x < width; ++x) {
            coords.at(y, x, 0) = static_cast<float>(static_cast<double>(x) * dx);
            coords.at(y, x, 1) = static_cast<float>(static_cast<double>(y) * dy);
        }
    return coords;
}

PixelFeatureMap pixel_features(const Tensor& image) {
    if (image.ndim() != 3 || image.dim(2) != 3)
        throw ContractError("pixel_features expects an [H,W,3] image");
    const auto h = image.dim(0);
    const auto w = image.dim(1);
    if (h < static_cast<std::size_t>(kMinImageSide) || w < static_cast<std::size_t>(kMinImageSide))
        throw SizeError("image smaller than the largest feature window (" +
                        std::to_string(kMinImageSide) + " px)");

    const int pad = kFeatureRadii[2] + 1; // +1 apron for the gradient stencil
    Tensor visual({h, w, static_cast<std::size_t>(kVisualChannels)});

    for (std::size_t ch = 0; ch < 3; ++ch) {
        const BoxFilter box(image, ch, pad);
        for (int s = 0; s < 3; ++s) {
            const int r = kFeatureRadii[s];
            const std::size_t base = static_cast<std::size_t>(9 * s);
            for (int y = 0; y < static_cast<int>(h); ++y)
                for (int x = 0; x < static_cast<int>(w); ++x) {
                    const double m = box.mean(y, x, r);
                    const double gx =
                        (box.centered_mean(y, x + 1, r) - box.centered_mean(y, x - 1, r)) * 0.5;
                    const double gy =
                        (box.centered_mean(y + 1, x, r) - box.centered_mean(y - 1, x, r)) * 0.5;
                    const double var = box.variance(y, x, r);
                    const auto yy = static_cast<std::size_t>(y);
                    const auto xx = static_cast<std::size_t>(x);
                    visual.at(yy, xx, base + ch) = static_cast<float>(m);
                    visual.at(yy, xx, base + 3 + ch) =
                        static_cast<float>(std::sqrt(gx * gx + gy * gy));
                    visual.at(yy, xx, base + 6 + ch) =
                        static_cast<float>(std::sqrt(std::max(0.0, var)));
                }
        }
    }

    return PixelFeatureMap{std::move(visual), coordinate_channels(h, w)};
}

PatchGrid patch_embeddings(const Tensor& image, int stride) {
    if (stride < 1) throw ContractError("patch stride must be >= 1");
    const auto h = image.dim(0);
    const auto w = image.dim(1);
    if (static_cast<std::size_t>(stride) > std::min(h, w))
        throw SizeError("patch stride exceeds the image size");

    const PixelFeatureMap feats = pixel_features(image);
    const std::size_t hp = h / static_cast<std::size_t>(stride);
    const std::size_t wp = w / static_cast<std::size_t>(stride);
    PatchGrid grid;
    grid.stride = stride;
    grid.embeddings = Tensor({hp, wp, static_cast<std::size_t>(kVisualChannels)});

    const int hi = static_cast<int>(h), wi = static_cast<int>(w);
    for (std::size_t i = 0; i < hp; ++i)
        for (std::size_t j = 0; j < wp; ++j) {
            const int cy = static_cast<int>(i) * stride + stride / 2;
            const int cx = static_cast<int>(j) * stride + stride / 2;
            for (std::size_t c = 0; c < static_cast<std::size_t>(kVisualChannels); ++c) {
                double acc = 0.0;
                for (int dy = -1; dy <= 1; ++dy)
                    for (int dx = -1; dx <= 1; ++dx) {
                        const int y = std::clamp(cy + dy, 0, hi - 1);
                        const int x = std::clamp(cx + dx, 0, wi - 1);
                        acc += feats.visual.at(static_cast<std::size_t>(y),
                                               static_cast<std::size_t>(x), c);
                    }
                grid.embeddings.at(i, j, c) = static_cast<float>(acc / 9.0);
            }
        }
    return grid;
}

VectorX<double> global_embedding(const Tensor& image) {
    const PixelFeatureMap feats = pixel_features(image);
    const auto n = feats.height() * feats.width();
    VectorX<double> mean = VectorX<double>::Zero(kVisualChannels);
    for (std::size_t i = 0; i < n; ++i)
        for (int c = 0; c < kVisualChannels; ++c)
            mean(c) += feats.visual.data()[i * kVisualChannels + static_cast<std::size_t>(c)];
    return mean / static_cast<double>(n);
}

MatrixX<double> feature_matrix(const PixelFeatureMap& f) {
    const auto n = static_cast<Eigen::Index>(f.height() * f.width());
    MatrixX<double> m(n, kFeatureChannels);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto u = static_cast<std::size_t>(i);
        for (int c = 0; c < kVisualChannels; ++c)
            m(i, c) = f.visual.data()[u * kVisualChannels + static_cast<std::size_t>(c)];
        m(i, kVisualChannels) = f.coords.data()[u * 2];
        m(i, kVisualChannels + 1) = f.coords.data()[u * 2 + 1];
    }
    return m;
}

MatrixX<double> visual_matrix(const PixelFeatureMap& f) {
    const auto n = static_cast<Eigen::Index>(f.height() * f.width());
    return f.visual.as_matrix(n, kVisualChannels).cast<double>();
}

MatrixX<double> patch_matrix(const PatchGrid& g) {
    const auto n = static_cast<Eigen::Index>(g.count());
    return g.embeddings.as_matrix(n, kVisualChannels).cast<double>();
}

} // namespace psad
