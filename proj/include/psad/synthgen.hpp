#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "psad/tensor.hpp"

namespace psad {

enum class ShapeKind { rect, disc };

/// One rendered component. Rects span [cx - w/2, cx - w/2 + w) x [cy - h/2, ...);
/// discs cover integer pixels with (x-cx)^2 + (y-cy)^2 <= r^2. Integer centers
/// plus integer jitter keep every component's pixel count constant across scenes.
struct ComponentSpec {
    int class_id = 0;
    ShapeKind shape = ShapeKind::rect;
    int cx = 0, cy = 0;
    int width = 0, height = 0; // rect extents
    int radius = 0;            // disc radius
    std::array<float, 3> color{0.5f, 0.5f, 0.5f};
    float noise_amp = 0.05f;
};

/// A single product subtype: canvas, components and background.
/// Component regions must stay disjoint and unclipped under jitter.
struct SceneBlueprint {
    int height = 64, width = 64;
    int product_type = 0;
    int n_classes = 0; // including background class 0
    std::vector<ComponentSpec> components;
    std::array<float, 3> background_color{0.10f, 0.12f, 0.15f};
    float background_noise = 0.05f;
    int jitter = 3;
};

enum class AnomalyKind {
    missing_component,
    extra_component,
    swapped_position,
    wrong_size,
    scratch,
    stain,
};

/// First four kinds are logical (they alter the ground-truth histogram or the
/// component composition); scratch/stain are structural and leave the
/// ground-truth segmentation untouched.
struct AnomalySpec {
    AnomalyKind kind = AnomalyKind::missing_component;
    int target_class = 0;
    double magnitude = 1.35; // size factor for wrong_size, length/size scale otherwise
};

bool is_logical(AnomalyKind kind);
std::string to_string(AnomalyKind kind);
AnomalyKind anomaly_kind_from_string(const std::string& name);

enum class SceneLabel { normal, logical_anomaly, structural_anomaly };
std::string to_string(SceneLabel label);

struct Scene {
    Tensor image; // [H, W, 3]
    SegMap gt;
    SceneLabel label = SceneLabel::normal;
};

/// Renders one scene. Deterministic in (blueprint, anomaly, seed); layout jitter,
/// pixel noise and anomaly placement draw from independent sub-streams so a
/// structural variant shares the normal variant's layout and noise exactly.
Scene generate_scene(const SceneBlueprint& bp, const std::optional<AnomalySpec>& anomaly,
                     std::uint64_t seed);

/// A product family: one or more subtypes sharing a class space, plus the
/// anomaly menus a generated dataset cycles through.
struct ProductBlueprint {
    std::string name;
    std::vector<SceneBlueprint> subtypes;
    std::vector<AnomalySpec> logical_menu;
    std::vector<AnomalySpec> structural_menu;
};

/// Built-in product families: "bench" (default benchmark product, one type,
/// includes a geometry-matched twin pair for swap anomalies), "duo" (two
/// subtypes for product-type assignment) and "rings" (minimal disc product).
const std::vector<ProductBlueprint>& default_suite();
const ProductBlueprint& product_by_name(const std::string& name);

struct DatasetCounts {
    int n_labeled = 5;
    int n_unlabeled = 40;
    int n_test_normal = 20;
    int n_test_la = 20;
    int n_test_sa = 20;
};

struct ManifestEntry {
    std::string id;
    std::string role;  // labeled | unlabeled | test
    std::string label; // normal | LA | SA
    int product_type = 0;
    std::uint64_t seed = 0;
    std::string image_path; // relative to the dataset root
    std::string gt_path;    // relative; present for every entry, evaluation only
    std::string anomaly;    // empty for normal scenes
};

struct DatasetManifest {
    std::string product;
    int n_classes = 0;
    int height = 0, width = 0;
    std::uint64_t seed = 0;
    std::vector<ManifestEntry> entries;
};

void write_manifest(const DatasetManifest& m, const std::filesystem::path& path);
DatasetManifest read_manifest(const std::filesystem::path& path);

/// Generates images/<id>.pft and gt/<id>.psm plus manifest.json under out_dir.
/// Labeled entries cover every subtype; test anomalies cycle the product menus.
DatasetManifest generate_dataset(const ProductBlueprint& product, const DatasetCounts& counts,
                                 std::uint64_t seed, const std::filesystem::path& out_dir);

} // namespace psad
