#include <doctest.h>

#include <filesystem>

#include "psad/eval.hpp"
#include "psad/pipeline.hpp"

using namespace psad;

namespace {

/// Small end-to-end fixture on the rings product, shared across cases.
struct RingsPipeline {
    LoadedDataset data;
    PixelClassifier classifier;

    RingsPipeline() {
        const auto dir = std::filesystem::temp_directory_path() / "psad_eval_fixture";
        std::filesystem::remove_all(dir);
        generate_dataset(product_by_name("rings"), DatasetCounts{2, 8, 6, 6, 6}, 21, dir);
        data = open_dataset(dir);
        TrainConfig cfg;
        cfg.warmup_steps = 120;
        cfg.main_steps = 40;
        cfg.seed = 5;
        classifier = train_on_dataset(data, cfg).classifier;
    }
};

const RingsPipeline& fixture() {
    static RingsPipeline p;
    return p;
}

} // namespace

TEST_CASE("ablation grid has the full subset layout") {
    const auto& p = fixture();
    const AblationReport report = run_ablation(p.data, p.classifier, 8, 21);
    CHECK(report.cells.size() == 14);
    CHECK(report.reduced.size() == 4);
    for (const auto& cell : report.cells) {
        CHECK((cell.use_hist || cell.use_comp || cell.use_patch));
        CHECK(cell.la_auroc >= 0.0);
        CHECK(cell.la_auroc <= 1.0);
        CHECK(cell.sa_auroc >= 0.0);
        CHECK(cell.sa_auroc <= 1.0);
    }
    CHECK(report.reduced.front().fraction == 1.0);
    CHECK(report.reduced.back().fraction == 0.125);
    for (const auto& row : report.reduced) CHECK(row.n_train >= 2);

    SUBCASE("single-bank cells are insensitive to adaptive scaling") {
        for (std::size_t i = 0; i + 1 < report.cells.size(); i += 2) {
            const auto& raw = report.cells[i];
            const auto& scaled = report.cells[i + 1];
            const int used = raw.use_hist + raw.use_comp + raw.use_patch;
            if (used != 1) continue;
            CHECK(raw.la_auroc == doctest::Approx(scaled.la_auroc).epsilon(1e-12));
            CHECK(raw.sa_auroc == doctest::Approx(scaled.sa_auroc).epsilon(1e-12));
        }
    }

    SUBCASE("ablation is deterministic under the seed") {
        const AblationReport again = run_ablation(p.data, p.classifier, 8, 21);
        REQUIRE(again.cells.size() == report.cells.size());
        for (std::size_t i = 0; i < report.cells.size(); ++i) {
            CHECK(again.cells[i].la_auroc == report.cells[i].la_auroc);
            CHECK(again.cells[i].sa_auroc == report.cells[i].sa_auroc);
        }
        for (std::size_t i = 0; i < report.reduced.size(); ++i)
            CHECK(again.reduced[i].la_auroc == report.reduced[i].la_auroc);
    }
}

TEST_CASE("evaluation report covers every test sample and stays finite") {
    const auto& p = fixture();
    const BankSet banks = build_banks(p.data.train_images(), p.classifier, 8);
    const EvaluationReport report = evaluate_dataset(p.data, banks);
    CHECK(report.samples.size() == 18);
    for (const auto& s : report.samples) {
        CHECK(std::isfinite(s.s_final));
        CHECK(s.s_final >= 0.0);
        CHECK(s.s_final ==
              doctest::Approx(s.s_hist + s.s_comp + s.s_patch).epsilon(1e-12));
    }
    CHECK(report.per_class_iou.size() == 3);
    CHECK(report.mean_iou > 0.0);

    const auto dir = std::filesystem::temp_directory_path() / "psad_eval_fixture";
    write_evaluation_report(report, dir / "report.json");
    CHECK(std::filesystem::exists(dir / "report.json"));
    const AblationReport ab = run_ablation(p.data, p.classifier, 8, 21);
    write_ablation_report(ab, dir / "ablation.json");
    CHECK(std::filesystem::exists(dir / "ablation.json"));
}
