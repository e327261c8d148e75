#include <doctest.h>

#include "psad/featex.hpp"
#include "psad/rng.hpp"
#include "psad/synthgen.hpp"

using namespace psad;

namespace {

Tensor constant_image(std::size_t h, std::size_t w, float r, float g, float b) {
    Tensor img({h, w, 3});
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x) {
            img.at(y, x, 0) = r;
            img.at(y, x, 1) = g;
            img.at(y, x, 2) = b;
        }
    return img;
}

Tensor noise_image(std::size_t h, std::size_t w, std::uint64_t seed) {
    Rng rng(seed);
    Tensor img({h, w, 3});
    for (std::size_t i = 0; i < img.size(); ++i)
        img.data()[i] = static_cast<float>(rng.uniform());
    return img;
}

Tensor mirrored(const Tensor& img) {
    const auto h = img.dim(0), w = img.dim(1);
    Tensor out({h, w, 3});
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x)
            for (std::size_t c = 0; c < 3; ++c) out.at(y, x, c) = img.at(y, w - 1 - x, c);
    return out;
}

} // namespace

TEST_CASE("constant image has flat means and zero gradients/stds") {
    const Tensor img = constant_image(40, 40, 0.3f, 0.5f, 0.7f);
    const PixelFeatureMap f = pixel_features(img);
    for (std::size_t y = 0; y < 40; y += 7)
        for (std::size_t x = 0; x < 40; x += 7)
            for (int s = 0; s < 3; ++s) {
                const auto base = static_cast<std::size_t>(9 * s);
                CHECK(f.visual.at(y, x, base + 0) == doctest::Approx(0.3).epsilon(1e-6));
                CHECK(f.visual.at(y, x, base + 1) == doctest::Approx(0.5).epsilon(1e-6));
                CHECK(f.visual.at(y, x, base + 2) == doctest::Approx(0.7).epsilon(1e-6));
                for (std::size_t k = 3; k < 9; ++k)
                    CHECK(f.visual.at(y, x, base + k) == doctest::Approx(0.0).epsilon(1e-9));
            }
}

TEST_CASE("coordinate channels hit the unit corners") {
    const Tensor img = noise_image(33, 48, 5);
    const PixelFeatureMap f = pixel_features(img);
    CHECK(f.coords.at(0, 0, 0) == 0.0f);
    CHECK(f.coords.at(0, 0, 1) == 0.0f);
    CHECK(f.coords.at(32, 47, 0) == 1.0f);
    CHECK(f.coords.at(32, 47, 1) == 1.0f);
}

TEST_CASE("features are bit-identical across runs") {
    const Tensor img = noise_image(64, 64, 123);
    const PixelFeatureMap a = pixel_features(img);
    const PixelFeatureMap b = pixel_features(img);
    CHECK(bitwise_equal(a.visual, b.visual));
    CHECK(bitwise_equal(a.coords, b.coords));
}

TEST_CASE("small images are rejected") {
    CHECK_THROWS_AS(pixel_features(constant_image(32, 64, 0, 0, 0)), SizeError);
    CHECK_THROWS_AS(pixel_features(constant_image(64, 20, 0, 0, 0)), SizeError);
    CHECK_NOTHROW(pixel_features(constant_image(33, 33, 0, 0, 0)));
}

TEST_CASE("uniform image gives identical patch embeddings") {
    const Tensor img = constant_image(64, 64, 0.2f, 0.4f, 0.6f);
    const PatchGrid grid = patch_embeddings(img, 8);
    CHECK(grid.rows() == 8);
    CHECK(grid.cols() == 8);
    for (std::size_t i = 0; i < grid.rows(); ++i)
        for (std::size_t j = 0; j < grid.cols(); ++j)
            for (std::size_t c = 0; c < static_cast<std::size_t>(kVisualChannels); ++c)
                CHECK(grid.embeddings.at(i, j, c) ==
                      doctest::Approx(grid.embeddings.at(0, 0, c)).epsilon(1e-9));
}

TEST_CASE("patch grid shape follows floor arithmetic and strides are bounded") {
    const Tensor img = noise_image(64, 64, 9);
    const PatchGrid grid = patch_embeddings(img, 8);
    CHECK(grid.count() == 64);
    CHECK_THROWS_AS(patch_embeddings(img, 65), SizeError);
    CHECK_THROWS_AS(patch_embeddings(img, 0), ContractError);
}

TEST_CASE("patch pooling matches a brute-force 3x3 mean oracle") {
    const Tensor img = noise_image(40, 36, 77);
    const PixelFeatureMap feats = pixel_features(img);
    for (const int stride : {5, 8}) {
        const PatchGrid grid = patch_embeddings(img, stride);
        for (std::size_t i = 0; i < grid.rows(); ++i)
            for (std::size_t j = 0; j < grid.cols(); ++j) {
                const int cy = static_cast<int>(i) * stride + stride / 2;
                const int cx = static_cast<int>(j) * stride + stride / 2;
                for (std::size_t c = 0; c < 27; c += 5) {
                    double acc = 0;
                    for (int dy = -1; dy <= 1; ++dy)
                        for (int dx = -1; dx <= 1; ++dx) {
                            const int y = std::clamp(cy + dy, 0, 39);
                            const int x = std::clamp(cx + dx, 0, 35);
                            acc += feats.visual.at(static_cast<std::size_t>(y),
                                                   static_cast<std::size_t>(x), c);
                        }
                    CHECK(grid.embeddings.at(i, j, c) ==
                          doctest::Approx(acc / 9.0).epsilon(1e-6));
                }
            }
    }
}

TEST_CASE("brightest patch sits on a bright disc") {
    Tensor img = constant_image(64, 64, 0.05f, 0.05f, 0.05f);
    const int cy = 35, cx = 22, r = 6;
    for (int y = cy - r; y <= cy + r; ++y)
        for (int x = cx - r; x <= cx + r; ++x)
            if ((x - cx) * (x - cx) + (y - cy) * (y - cy) <= r * r)
                for (std::size_t c = 0; c < 3; ++c)
                    img.at(static_cast<std::size_t>(y), static_cast<std::size_t>(x), c) = 0.95f;

    const PatchGrid grid = patch_embeddings(img, 8);
    const MatrixX<double> m = patch_matrix(grid);
    Eigen::Index best = 0;
    for (Eigen::Index i = 1; i < m.rows(); ++i)
        if (m.row(i).norm() > m.row(best).norm()) best = i;
    const auto bi = static_cast<int>(best) / static_cast<int>(grid.cols());
    const auto bj = static_cast<int>(best) % static_cast<int>(grid.cols());
    const int py = bi * 8 + 4, px = bj * 8 + 4;
    CHECK((px - cx) * (px - cx) + (py - cy) * (py - cy) <= r * r);
}

TEST_CASE("global embedding of a constant image is the color") {
    const VectorX<double> e = global_embedding(constant_image(48, 48, 0.1f, 0.6f, 0.9f));
    REQUIRE(e.size() == kVisualChannels);
    for (int s = 0; s < 3; ++s) {
        CHECK(e(9 * s + 0) == doctest::Approx(0.1).epsilon(1e-6));
        CHECK(e(9 * s + 1) == doctest::Approx(0.6).epsilon(1e-6));
        CHECK(e(9 * s + 2) == doctest::Approx(0.9).epsilon(1e-6));
        for (int k = 3; k < 9; ++k) CHECK(e(9 * s + k) == doctest::Approx(0.0).epsilon(1e-9));
    }
}

TEST_CASE("global embedding is mirror invariant") {
    const Tensor img = noise_image(64, 64, 321);
    const VectorX<double> a = global_embedding(img);
    const VectorX<double> b = global_embedding(mirrored(img));
    CHECK((a - b).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("duo subtypes separate in embedding space") {
    const auto& duo = product_by_name("duo");
    const VectorX<double> t0_a =
        global_embedding(generate_scene(duo.subtypes[0], std::nullopt, 1).image);
    const VectorX<double> t0_b =
        global_embedding(generate_scene(duo.subtypes[0], std::nullopt, 2).image);
    const VectorX<double> t1 =
        global_embedding(generate_scene(duo.subtypes[1], std::nullopt, 3).image);
    CHECK((t0_a - t1).norm() > (t0_a - t0_b).norm());
}

TEST_CASE("shape contract over random sizes") {
    Rng rng(2024);
    for (int trial = 0; trial < 6; ++trial) {
        const auto h = static_cast<std::size_t>(rng.uniform_int(33, 128));
        const auto w = static_cast<std::size_t>(rng.uniform_int(33, 128));
        const Tensor img = noise_image(h, w, rng.next_u64());
        const PixelFeatureMap f = pixel_features(img);
        CHECK(f.visual.shape() ==
              std::vector<std::size_t>{h, w, static_cast<std::size_t>(kVisualChannels)});
        CHECK(f.coords.shape() == std::vector<std::size_t>{h, w, 2});
        const int stride = static_cast<int>(rng.uniform_int(4, 12));
        const PatchGrid grid = patch_embeddings(img, stride);
        CHECK(grid.rows() == h / static_cast<std::size_t>(stride));
        CHECK(grid.cols() == w / static_cast<std::size_t>(stride));
    }
}
