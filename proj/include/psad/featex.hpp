#pragma once

#include "psad/tensor.hpp"

namespace psad {

// Deterministic, training-free per-pixel features. Each color channel
// contributes, at window radii {1, 4, 16}: a box mean, the gradient magnitude
// of the box-smoothed channel (central differences) and the local standard
// deviation. Channel order per scale: mean RGB, gradient RGB, std RGB.
inline constexpr int kFeatureRadii[3] = {1, 4, 16};
inline constexpr int kVisualChannels = 27; // 3 scales x (3 mean + 3 grad + 3 std)
inline constexpr int kCoordChannels = 2;
inline constexpr int kFeatureChannels = kVisualChannels + kCoordChannels;
inline constexpr int kDefaultPatchStride = 8;
inline constexpr int kMinImageSide = 2 * kFeatureRadii[2] + 1;

struct PixelFeatureMap {
    Tensor visual; // [H, W, kVisualChannels]
    Tensor coords; // [H, W, 2], (x/(W-1), y/(H-1))

    std::size_t height() const { return visual.dim(0); }
    std::size_t width() const { return visual.dim(1); }
};

/// All window ops use replicate padding so outputs keep the input size.
/// Throws SizeError when either side is below kMinImageSide.
PixelFeatureMap pixel_features(const Tensor& image);

/// Canonical coordinate channels for an H x W canvas.
Tensor coordinate_channels(std::size_t height, std::size_t width);

struct PatchGrid {
    Tensor embeddings; // [H_p, W_p, kVisualChannels]
    int stride = kDefaultPatchStride;

    std::size_t rows() const { return embeddings.dim(0); }
    std::size_t cols() const { return embeddings.dim(1); }
    std::size_t count() const { return rows() * cols(); }
};

/// Visual features pooled over 3x3 pixel neighborhoods, sampled at
/// (i*stride + stride/2, j*stride + stride/2). No coordinate channels:
/// the patch bank is position-agnostic.
PatchGrid patch_embeddings(const Tensor& image, int stride = kDefaultPatchStride);

/// Spatial mean of the visual channels; used for product-type assignment.
VectorX<double> global_embedding(const Tensor& image);

/// [H*W, 29] double matrix: visual channels then coordinates. Classifier input.
MatrixX<double> feature_matrix(const PixelFeatureMap& f);

/// [H*W, 27] double matrix of the visual channels only.
MatrixX<double> visual_matrix(const PixelFeatureMap& f);

/// [N_P, 27] double matrix view of a patch grid, row-major over grid cells.
MatrixX<double> patch_matrix(const PatchGrid& g);

} // namespace psad
