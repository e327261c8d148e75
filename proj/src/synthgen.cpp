#include "psad/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "psad/rng.hpp"
#include "psad/tensor_io.hpp"

namespace psad {

namespace {

using nlohmann::json;

struct Box {
    int x0, y0, x1, y1; // inclusive pixel bounds
};

Box bounds(const ComponentSpec& c) {
    if (c.shape == ShapeKind::rect) {
        const int x0 = c.cx - c.width / 2;
        const int y0 = c.cy - c.height / 2;
        return {x0, y0, x0 + c.width - 1, y0 + c.height - 1};
    }
    return {c.cx - c.radius, c.cy - c.radius, c.cx + c.radius, c.cy + c.radius};
}

Box inflate(Box b, int m) { return {b.x0 - m, b.y0 - m, b.x1 + m, b.y1 + m}; }

bool disjoint(const Box& a, const Box& b, int gap) {
    return a.x1 + gap < b.x0 || b.x1 + gap < a.x0 || a.y1 + gap < b.y0 || b.y1 + gap < a.y0;
}

bool in_canvas(const Box& b, int height, int width) {
    return b.x0 >= 0 && b.y0 >= 0 && b.x1 < width && b.y1 < height;
}

bool covers(const ComponentSpec& c, int x, int y) {
    if (c.shape == ShapeKind::rect) {
        const Box b = bounds(c);
        return x >= b.x0 && x <= b.x1 && y >= b.y0 && y <= b.y1;
    }
    const int dx = x - c.cx;
    const int dy = y - c.cy;
    return dx * dx + dy * dy <= c.radius * c.radius;
}

void validate_blueprint(const SceneBlueprint& bp) {
    if (bp.height < 8 || bp.width < 8) throw SpecError("canvas too small");
    if (bp.n_classes < 1) throw SpecError("blueprint needs at least the background class");
    for (const auto& c : bp.components) {
        if (c.class_id < 1 || c.class_id >= bp.n_classes)
            throw SpecError("component class id out of range");
        if (c.shape == ShapeKind::rect && (c.width < 1 || c.height < 1))
            throw SpecError("rect component needs positive extents");
        if (c.shape == ShapeKind::disc && c.radius < 1)
            throw SpecError("disc component needs positive radius");
        if (!in_canvas(inflate(bounds(c), bp.jitter), bp.height, bp.width))
            throw SpecError("component can leave the canvas under jitter");
    }
    for (std::size_t i = 0; i < bp.components.size(); ++i)
        for (std::size_t j = i + 1; j < bp.components.size(); ++j)
            if (!disjoint(inflate(bounds(bp.components[i]), bp.jitter),
                          inflate(bounds(bp.components[j]), bp.jitter), 1))
                throw SpecError("components can overlap under jitter");
}

void validate_layout(const std::vector<ComponentSpec>& placed, int height, int width) {
    for (const auto& c : placed)
        if (!in_canvas(bounds(c), height, width))
            throw SpecError("anomalous layout leaves the canvas");
    for (std::size_t i = 0; i < placed.size(); ++i)
        for (std::size_t j = i + 1; j < placed.size(); ++j)
            if (!disjoint(bounds(placed[i]), bounds(placed[j]), 1))
                throw SpecError("anomalous layout overlaps components");
}

std::size_t require_instance(const std::vector<ComponentSpec>& comps, int class_id) {
    for (std::size_t i = 0; i < comps.size(); ++i)
        if (comps[i].class_id == class_id) return i;
    throw SpecError("anomaly target class " + std::to_string(class_id) +
                    " absent from blueprint");
}

/// First component of a different class, preferring identical geometry so
/// position swaps never create new overlaps.
std::size_t swap_partner(const std::vector<ComponentSpec>& comps, std::size_t target) {
    const ComponentSpec& t = comps[target];
    for (std::size_t i = 0; i < comps.size(); ++i) {
        const ComponentSpec& c = comps[i];
        if (c.class_id == t.class_id) continue;
        if (c.shape == t.shape && c.width == t.width && c.height == t.height &&
            c.radius == t.radius)
            return i;
    }
    for (std::size_t i = 0; i < comps.size(); ++i)
        if (comps[i].class_id != t.class_id) return i;
    throw SpecError("swap needs two components of different classes");
}

/// Deterministic free spot for an extra component: first grid center whose
/// bounds keep a 1 px gap to every placed component and the border.
std::pair<int, int> free_position(const std::vector<ComponentSpec>& placed,
                                  const ComponentSpec& shape, int height, int width) {
    for (int cy = 2; cy < height - 2; cy += 2) {
        for (int cx = 2; cx < width - 2; cx += 2) {
            ComponentSpec probe = shape;
            probe.cx = cx;
            probe.cy = cy;
            const Box b = bounds(probe);
            if (!in_canvas(inflate(b, 1), height, width)) continue;
            bool ok = true;
            for (const auto& c : placed)
                if (!disjoint(b, bounds(c), 1)) { ok = false; break; }
            if (ok) return {cx, cy};
        }
    }
    throw SpecError("no free position for an extra component");
}

void draw_scratch(Tensor& image, Rng& rng) {
    const int h = static_cast<int>(image.dim(0));
    const int w = static_cast<int>(image.dim(1));
    const double cx = static_cast<double>(rng.uniform_int(10, w - 11));
    const double cy = static_cast<double>(rng.uniform_int(10, h - 11));
    const double angle = rng.uniform() * 3.14159265358979323846;
    const double len = 18.0;
    const double dx = std::cos(angle), dy = std::sin(angle);
    const std::array<float, 3> color{0.93f, 0.91f, 0.88f};
    for (double t = -len / 2; t <= len / 2; t += 0.4) {
        for (double o : {-0.5, 0.0, 0.5}) {
            const int px = static_cast<int>(std::lround(cx + t * dx - o * dy));
            const int py = static_cast<int>(std::lround(cy + t * dy + o * dx));
            if (px < 0 || px >= w || py < 0 || py >= h) continue;
            for (int c = 0; c < 3; ++c)
                image.at(static_cast<std::size_t>(py), static_cast<std::size_t>(px),
                         static_cast<std::size_t>(c)) = color[static_cast<std::size_t>(c)];
        }
    }
}

void draw_stain(Tensor& image, Rng& rng) {
    const int h = static_cast<int>(image.dim(0));
    const int w = static_cast<int>(image.dim(1));
    const int cx = static_cast<int>(rng.uniform_int(10, w - 11));
    const int cy = static_cast<int>(rng.uniform_int(10, h - 11));
    const int r = 4;
    const std::array<float, 3> color{0.05f, 0.06f, 0.45f};
    for (int y = cy - r; y <= cy + r; ++y)
        for (int x = cx - r; x <= cx + r; ++x) {
            if (x < 0 || x >= w || y < 0 || y >= h) continue;
            if ((x - cx) * (x - cx) + (y - cy) * (y - cy) > r * r) continue;
            for (int c = 0; c < 3; ++c)
                image.at(static_cast<std::size_t>(y), static_cast<std::size_t>(x),
                         static_cast<std::size_t>(c)) = color[static_cast<std::size_t>(c)];
        }
}

} // namespace

bool is_logical(AnomalyKind kind) {
    switch (kind) {
        case AnomalyKind::missing_component:
        case AnomalyKind::extra_component:
        case AnomalyKind::swapped_position:
        case AnomalyKind::wrong_size:
            return true;
        case AnomalyKind::scratch:
        case AnomalyKind::stain:
            return false;
    }
    throw ContractError("unknown anomaly kind");
}

std::string to_string(AnomalyKind kind) {
    switch (kind) {
        case AnomalyKind::missing_component: return "missing_component";
        case AnomalyKind::extra_component: return "extra_component";
        case AnomalyKind::swapped_position: return "swapped_position";
        case AnomalyKind::wrong_size: return "wrong_size";
        case AnomalyKind::scratch: return "scratch";
        case AnomalyKind::stain: return "stain";
    }
    throw ContractError("unknown anomaly kind");
}

AnomalyKind anomaly_kind_from_string(const std::string& name) {
    if (name == "missing_component") return AnomalyKind::missing_component;
    if (name == "extra_component") return AnomalyKind::extra_component;
    if (name == "swapped_position") return AnomalyKind::swapped_position;
    if (name == "wrong_size") return AnomalyKind::wrong_size;
    if (name == "scratch") return AnomalyKind::scratch;
    if (name == "stain") return AnomalyKind::stain;
    throw ContractError("unknown anomaly kind: " + name);
}

std::string to_string(SceneLabel label) {
    switch (label) {
        case SceneLabel::normal: return "normal";
        case SceneLabel::logical_anomaly: return "LA";
        case SceneLabel::structural_anomaly: return "SA";
    }
    throw ContractError("unknown scene label");
}

Scene generate_scene(const SceneBlueprint& bp, const std::optional<AnomalySpec>& anomaly,
                     std::uint64_t seed) {
    validate_blueprint(bp);
    if (anomaly && is_logical(anomaly->kind) &&
        (anomaly->target_class < 1 || anomaly->target_class >= bp.n_classes))
        throw SpecError("anomaly target class " + std::to_string(anomaly->target_class) +
                        " absent from blueprint");

    // Layout: jitter every nominal component, then edit per the anomaly.
    Rng jitter_rng(Rng::derive(seed, streams::kJitter));
    std::vector<ComponentSpec> placed = bp.components;
    for (auto& c : placed) {
        c.cx += static_cast<int>(jitter_rng.uniform_int(-bp.jitter, bp.jitter));
        c.cy += static_cast<int>(jitter_rng.uniform_int(-bp.jitter, bp.jitter));
    }

    Rng anomaly_rng(Rng::derive(seed, streams::kAnomaly));
    SceneLabel label = SceneLabel::normal;
    if (anomaly && is_logical(anomaly->kind)) {
        label = SceneLabel::logical_anomaly;
        switch (anomaly->kind) {
            case AnomalyKind::missing_component: {
                std::vector<std::size_t> instances;
                for (std::size_t i = 0; i < placed.size(); ++i)
                    if (placed[i].class_id == anomaly->target_class) instances.push_back(i);
                if (instances.empty()) throw SpecError("anomaly target class absent");
                const std::size_t pick = instances[static_cast<std::size_t>(
                    anomaly_rng.uniform_int(0, static_cast<std::int64_t>(instances.size()) - 1))];
                placed.erase(placed.begin() + static_cast<std::ptrdiff_t>(pick));
                break;
            }
            case AnomalyKind::extra_component: {
                ComponentSpec extra = placed[require_instance(placed, anomaly->target_class)];
                const auto [cx, cy] = free_position(placed, extra, bp.height, bp.width);
                extra.cx = cx;
                extra.cy = cy;
                placed.push_back(extra);
                break;
            }
            case AnomalyKind::swapped_position: {
                const std::size_t a = require_instance(placed, anomaly->target_class);
                const std::size_t b = swap_partner(placed, a);
                std::swap(placed[a].cx, placed[b].cx);
                std::swap(placed[a].cy, placed[b].cy);
                break;
            }
            case AnomalyKind::wrong_size: {
                ComponentSpec& c = placed[require_instance(placed, anomaly->target_class)];
                const double f = anomaly->magnitude;
                if (c.shape == ShapeKind::rect) {
                    c.width = std::max(1, static_cast<int>(std::lround(c.width * f)));
                    c.height = std::max(1, static_cast<int>(std::lround(c.height * f)));
                } else {
                    c.radius = std::max(1, static_cast<int>(std::lround(c.radius * f)));
                }
                break;
            }
            default: break;
        }
        validate_layout(placed, bp.height, bp.width);
    }

    // Ground truth follows the rendered regions exactly.
    const auto h = static_cast<std::size_t>(bp.height);
    const auto w = static_cast<std::size_t>(bp.width);
    SegMap gt(h, w, static_cast<std::uint16_t>(bp.n_classes));
    std::vector<const ComponentSpec*> owner(h * w, nullptr);
    for (const auto& c : placed) {
        const Box b = bounds(c);
        for (int y = b.y0; y <= b.y1; ++y)
            for (int x = b.x0; x <= b.x1; ++x)
                if (covers(c, x, y)) {
                    gt.at(static_cast<std::size_t>(y), static_cast<std::size_t>(x)) =
                        static_cast<std::uint16_t>(c.class_id);
                    owner[static_cast<std::size_t>(y) * w + static_cast<std::size_t>(x)] = &c;
                }
    }

    // Pixel noise is drawn row-major regardless of layout, so structural
    // variants of the same seed share the base image bit for bit.
    Rng noise_rng(Rng::derive(seed, streams::kNoise));
    Tensor image({h, w, 3});
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x) {
            const ComponentSpec* c = owner[y * w + x];
            const auto& base = c ? c->color : bp.background_color;
            const float amp = c ? c->noise_amp : bp.background_noise;
            for (std::size_t ch = 0; ch < 3; ++ch) {
                const float n = amp * static_cast<float>(2.0 * noise_rng.uniform() - 1.0);
                image.at(y, x, ch) = std::clamp(base[ch] + n, 0.0f, 1.0f);
            }
        }

    if (anomaly && !is_logical(anomaly->kind)) {
        label = SceneLabel::structural_anomaly;
        if (anomaly->kind == AnomalyKind::scratch)
            draw_scratch(image, anomaly_rng);
        else
            draw_stain(image, anomaly_rng);
    }

    return Scene{std::move(image), std::move(gt), label};
}

namespace {

std::vector<ProductBlueprint> build_suite() {
    std::vector<ProductBlueprint> suite;

    // "bench": single type, five classes. The two 14x14 slots share their
    // geometry and nearly their appearance; they sit in disjoint vertical
    // bands so horizontal flips during training keep them separable by the
    // y coordinate, which is what lets a position swap stay
    // histogram-preserving yet composition-visible.
    {
        SceneBlueprint bp;
        bp.n_classes = 5;
        bp.components = {
            {1, ShapeKind::rect, 44, 12, 18, 8, 0, {0.85f, 0.62f, 0.20f}, 0.05f},
            {2, ShapeKind::rect, 16, 12, 14, 14, 0, {0.66f, 0.26f, 0.30f}, 0.030f},
            {3, ShapeKind::rect, 16, 51, 14, 14, 0, {0.64f, 0.28f, 0.32f}, 0.058f},
            {4, ShapeKind::disc, 44, 32, 0, 0, 7, {0.22f, 0.68f, 0.35f}, 0.05f},
        };
        ProductBlueprint product;
        product.name = "bench";
        product.subtypes = {bp};
        product.logical_menu = {
            {AnomalyKind::missing_component, 1}, {AnomalyKind::extra_component, 4},
            {AnomalyKind::swapped_position, 2},  {AnomalyKind::wrong_size, 1},
            {AnomalyKind::missing_component, 4}, {AnomalyKind::extra_component, 2},
            {AnomalyKind::swapped_position, 3},  {AnomalyKind::wrong_size, 4},
        };
        product.structural_menu = {{AnomalyKind::scratch, 0}, {AnomalyKind::stain, 0}};
        suite.push_back(std::move(product));
    }

    // "duo": two subtypes with different component counts, exercising
    // product-type assignment and per-type histogram targets.
    {
        SceneBlueprint t0;
        t0.n_classes = 4;
        t0.product_type = 0;
        t0.components = {
            {1, ShapeKind::disc, 16, 16, 0, 0, 6, {0.80f, 0.30f, 0.22f}, 0.05f},
            {2, ShapeKind::disc, 48, 16, 0, 0, 6, {0.25f, 0.35f, 0.80f}, 0.05f},
            {3, ShapeKind::rect, 32, 48, 16, 10, 0, {0.80f, 0.78f, 0.30f}, 0.05f},
        };
        SceneBlueprint t1;
        t1.n_classes = 4;
        t1.product_type = 1;
        t1.components = {
            {1, ShapeKind::disc, 12, 44, 0, 0, 6, {0.80f, 0.30f, 0.22f}, 0.05f},
            {1, ShapeKind::disc, 32, 44, 0, 0, 6, {0.80f, 0.30f, 0.22f}, 0.05f},
            {1, ShapeKind::disc, 52, 44, 0, 0, 6, {0.80f, 0.30f, 0.22f}, 0.05f},
            {3, ShapeKind::rect, 32, 14, 16, 10, 0, {0.80f, 0.78f, 0.30f}, 0.05f},
        };
        ProductBlueprint product;
        product.name = "duo";
        product.subtypes = {t0, t1};
        product.logical_menu = {
            {AnomalyKind::missing_component, 1},
            {AnomalyKind::extra_component, 1},
            {AnomalyKind::wrong_size, 3},
            {AnomalyKind::missing_component, 3},
        };
        product.structural_menu = {{AnomalyKind::scratch, 0}, {AnomalyKind::stain, 0}};
        suite.push_back(std::move(product));
    }

    // "rings": minimal product, two small discs of one class plus one larger disc.
    {
        SceneBlueprint bp;
        bp.n_classes = 3;
        bp.components = {
            {1, ShapeKind::disc, 16, 16, 0, 0, 5, {0.78f, 0.32f, 0.24f}, 0.05f},
            {1, ShapeKind::disc, 48, 16, 0, 0, 5, {0.78f, 0.32f, 0.24f}, 0.05f},
            {2, ShapeKind::disc, 32, 46, 0, 0, 7, {0.30f, 0.44f, 0.80f}, 0.05f},
        };
        ProductBlueprint product;
        product.name = "rings";
        product.subtypes = {bp};
        product.logical_menu = {
            {AnomalyKind::missing_component, 1},
            {AnomalyKind::extra_component, 1},
            {AnomalyKind::wrong_size, 2},
            {AnomalyKind::missing_component, 2},
        };
        product.structural_menu = {{AnomalyKind::scratch, 0}, {AnomalyKind::stain, 0}};
        suite.push_back(std::move(product));
    }

    return suite;
}

} // namespace

const std::vector<ProductBlueprint>& default_suite() {
    static const std::vector<ProductBlueprint> suite = build_suite();
    return suite;
}

const ProductBlueprint& product_by_name(const std::string& name) {
    for (const auto& p : default_suite())
        if (p.name == name) return p;
    throw SpecError("unknown product: " + name);
}

void write_manifest(const DatasetManifest& m, const std::filesystem::path& path) {
    json j;
    j["product"] = m.product;
    j["n_classes"] = m.n_classes;
    j["height"] = m.height;
    j["width"] = m.width;
    j["seed"] = m.seed;
    json entries = json::array();
    for (const auto& e : m.entries) {
        json je;
        je["id"] = e.id;
        je["role"] = e.role;
        je["label"] = e.label;
        je["product_type"] = e.product_type;
        je["seed"] = e.seed;
        je["image"] = e.image_path;
        je["gt"] = e.gt_path;
        je["anomaly"] = e.anomaly.empty() ? json() : json(e.anomaly);
        entries.push_back(std::move(je));
    }
    j["entries"] = std::move(entries);
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << j.dump(2) << "\n";
    if (!out) throw IoError("write failed for " + path.string());
}

DatasetManifest read_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw FormatError(path.string() + ": invalid manifest JSON: " + e.what());
    }
    DatasetManifest m;
    try {
        m.product = j.at("product").get<std::string>();
        m.n_classes = j.at("n_classes").get<int>();
        m.height = j.at("height").get<int>();
        m.width = j.at("width").get<int>();
        m.seed = j.at("seed").get<std::uint64_t>();
        for (const auto& je : j.at("entries")) {
            ManifestEntry e;
            e.id = je.at("id").get<std::string>();
            e.role = je.at("role").get<std::string>();
            e.label = je.at("label").get<std::string>();
            e.product_type = je.at("product_type").get<int>();
            e.seed = je.at("seed").get<std::uint64_t>();
            e.image_path = je.at("image").get<std::string>();
            e.gt_path = je.at("gt").get<std::string>();
            if (!je.at("anomaly").is_null()) e.anomaly = je.at("anomaly").get<std::string>();
            m.entries.push_back(std::move(e));
        }
    } catch (const json::exception& e) {
        throw FormatError(path.string() + ": manifest missing field: " + e.what());
    }
    return m;
}

DatasetManifest generate_dataset(const ProductBlueprint& product, const DatasetCounts& counts,
                                 std::uint64_t seed, const std::filesystem::path& out_dir) {
    if (product.subtypes.empty()) throw SpecError("product has no subtypes");
    if (counts.n_labeled < 1) throw SpecError("need at least one labeled image");
    if (counts.n_unlabeled < 0 || counts.n_test_normal < 0 || counts.n_test_la < 0 ||
        counts.n_test_sa < 0)
        throw SpecError("dataset counts must be non-negative");
    const int n_types = static_cast<int>(product.subtypes.size());
    if (counts.n_labeled < n_types)
        throw SpecError("multi-type products need one labeled image per subtype");
    if (counts.n_test_la > 0 && product.logical_menu.empty())
        throw SpecError("product has no logical anomaly menu");
    if (counts.n_test_sa > 0 && product.structural_menu.empty())
        throw SpecError("product has no structural anomaly menu");

    std::error_code ec;
    std::filesystem::create_directories(out_dir / "images", ec);
    std::filesystem::create_directories(out_dir / "gt", ec);
    if (!std::filesystem::is_directory(out_dir / "images") ||
        !std::filesystem::is_directory(out_dir / "gt"))
        throw IoError("cannot create dataset directories under " + out_dir.string());

    const SceneBlueprint& first = product.subtypes.front();
    DatasetManifest manifest;
    manifest.product = product.name;
    manifest.n_classes = first.n_classes;
    manifest.height = first.height;
    manifest.width = first.width;
    manifest.seed = seed;

    std::uint64_t index = 0;
    auto emit = [&](const std::string& id, const std::string& role, int subtype,
                    const std::optional<AnomalySpec>& anomaly) {
        const std::uint64_t scene_seed = Rng::derive(seed, 0x5CE4E000ull + index);
        ++index;
        const Scene scene = generate_scene(product.subtypes[static_cast<std::size_t>(subtype)],
                                           anomaly, scene_seed);
        ManifestEntry e;
        e.id = id;
        e.role = role;
        e.label = to_string(scene.label);
        e.product_type = subtype;
        e.seed = scene_seed;
        e.image_path = "images/" + id + ".pft";
        e.gt_path = "gt/" + id + ".psm";
        if (anomaly) e.anomaly = to_string(anomaly->kind);
        write_tensor(scene.image, out_dir / e.image_path);
        write_segmap(scene.gt, out_dir / e.gt_path);
        manifest.entries.push_back(std::move(e));
    };

    char buf[32];
    for (int i = 0; i < counts.n_labeled; ++i) {
        std::snprintf(buf, sizeof buf, "lab_%03d", i);
        emit(buf, "labeled", i % n_types, std::nullopt);
    }
    for (int i = 0; i < counts.n_unlabeled; ++i) {
        std::snprintf(buf, sizeof buf, "unl_%03d", i);
        emit(buf, "unlabeled", i % n_types, std::nullopt);
    }
    for (int i = 0; i < counts.n_test_normal; ++i) {
        std::snprintf(buf, sizeof buf, "tst_nrm_%03d", i);
        emit(buf, "test", i % n_types, std::nullopt);
    }
    for (int i = 0; i < counts.n_test_la; ++i) {
        std::snprintf(buf, sizeof buf, "tst_la_%03d", i);
        const auto& spec = product.logical_menu[static_cast<std::size_t>(i) %
                                                product.logical_menu.size()];
        emit(buf, "test", i % n_types, spec);
    }
    for (int i = 0; i < counts.n_test_sa; ++i) {
        std::snprintf(buf, sizeof buf, "tst_sa_%03d", i);
        const auto& spec = product.structural_menu[static_cast<std::size_t>(i) %
                                                   product.structural_menu.size()];
        emit(buf, "test", i % n_types, spec);
    }

    write_manifest(manifest, out_dir / "manifest.json");
    return manifest;
}

} // namespace psad
