// psad: part-segmentation anomaly detection pipeline.
//
// Subcommands: generate, train-seg, build-banks, score, evaluate, ablate.
// Machine-readable JSON goes to stdout (score, evaluate); progress to stderr.

#include <cstdio>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "psad/config.hpp"
#include "psad/dataset.hpp"
#include "psad/eval.hpp"
#include "psad/membank.hpp"
#include "psad/pipeline.hpp"
#include "psad/synthgen.hpp"
#include "psad/tensor_io.hpp"

namespace {

using nlohmann::json;

struct GlobalOpts {
    std::string config_path;
    std::uint64_t seed = 0;
    bool seed_set = false;
};

psad::PipelineConfig effective_config(const GlobalOpts& opts) {
    psad::PipelineConfig cfg;
    if (!opts.config_path.empty()) cfg = psad::load_config(opts.config_path);
    if (opts.seed_set) cfg.seed = opts.seed;
    return cfg;
}

void write_checkpoint_sidecar(const psad::PipelineConfig& cfg,
                              const std::filesystem::path& ckpt) {
    json j;
    j["train"] = {{"lambda_ce", cfg.train.lambda_ce},
                  {"lambda_entropy", cfg.train.lambda_entropy},
                  {"lambda_hist", cfg.train.lambda_hist},
                  {"learning_rate", cfg.train.learning_rate},
                  {"weight_decay", cfg.train.weight_decay},
                  {"batch_size", cfg.train.batch_size},
                  {"labeled_per_batch", cfg.train.labeled_per_batch},
                  {"warmup_steps", cfg.train.warmup_steps},
                  {"main_steps", cfg.train.main_steps},
                  {"hidden_width", cfg.train.hidden_width},
                  {"max_translation", cfg.train.max_translation},
                  {"seed", cfg.train_seed()}};
    std::ofstream out(ckpt.string() + ".json", std::ios::trunc);
    if (!out) throw psad::IoError("cannot write checkpoint sidecar for " + ckpt.string());
    out << j.dump(2) << "\n";
}

int run(int argc, char** argv) {
    CLI::App app{"Part-segmentation anomaly detection pipeline"};
    app.require_subcommand(1);
    app.fallthrough(); // lets --config/--seed appear after the subcommand too

    GlobalOpts opts;
    app.add_option("--config", opts.config_path, "Pipeline configuration JSON")
        ->expected(1);
    app.add_option("--seed", opts.seed, "Root seed overriding the config")
        ->expected(1)
        ->each([&](const std::string&) { opts.seed_set = true; });

    std::string out_dir, data_dir, ckpt_path, banks_path, image_path, report_path;

    auto* generate = app.add_subcommand("generate", "Write a synthetic dataset");
    generate->add_option("--out", out_dir, "Output directory")->required();

    auto* train = app.add_subcommand("train-seg", "Train the part segmentation classifier");
    train->add_option("--data", data_dir, "Dataset directory")->required();
    train->add_option("--out", ckpt_path, "Checkpoint path")->required();

    auto* build = app.add_subcommand("build-banks", "Build the memory banks");
    build->add_option("--data", data_dir, "Dataset directory")->required();
    build->add_option("--ckpt", ckpt_path, "Classifier checkpoint")->required();
    build->add_option("--out", banks_path, "Bank set output path")->required();

    auto* score = app.add_subcommand("score", "Score one image against the banks");
    score->add_option("--banks", banks_path, "Bank set file")->required();
    score->add_option("--image", image_path, "PFT1 image")->required();

    std::string histogram_prefix;
    auto* evaluate = app.add_subcommand("evaluate", "Evaluate the test split");
    evaluate->add_option("--banks", banks_path, "Bank set file")->required();
    evaluate->add_option("--data", data_dir, "Dataset directory")->required();
    evaluate->add_option("--report", report_path, "Report JSON output")->required();
    evaluate->add_option("--histograms", histogram_prefix,
                         "Prefix for per-bank score histogram CSVs");

    auto* ablate = app.add_subcommand("ablate", "Bank-subset and reduced-data sweeps");
    ablate->add_option("--data", data_dir, "Dataset directory")->required();
    ablate->add_option("--ckpt", ckpt_path, "Classifier checkpoint")->required();
    ablate->add_option("--report", report_path, "Report JSON output")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    const psad::PipelineConfig cfg = effective_config(opts);

    if (generate->parsed()) {
        const auto& product = psad::product_by_name(cfg.product);
        const auto manifest =
            psad::generate_dataset(product, cfg.counts, cfg.scene_seed(), out_dir);
        std::fprintf(stderr, "generated %zu images under %s\n", manifest.entries.size(),
                     out_dir.c_str());
        return 0;
    }

    if (train->parsed()) {
        const auto data = psad::open_dataset(data_dir);
        psad::TrainConfig tc = cfg.train;
        tc.seed = cfg.train_seed();
        std::fprintf(stderr, "training on %s (%d + %d steps)\n", data_dir.c_str(),
                     tc.warmup_steps, tc.main_steps);
        const auto result = psad::train_on_dataset(data, tc);
        psad::write_classifier(result.classifier, ckpt_path);
        write_checkpoint_sidecar(cfg, ckpt_path);
        std::fprintf(stderr,
                     "trained %d steps; last losses: ce=%.4f dice=%.4f entropy=%.4f hist=%.4f\n",
                     result.stats.steps_run, result.stats.last_ce, result.stats.last_dice,
                     result.stats.last_entropy, result.stats.last_hist);
        return 0;
    }

    if (build->parsed()) {
        const auto data = psad::open_dataset(data_dir);
        const auto clf = psad::read_classifier(ckpt_path);
        const auto banks = psad::build_banks(data.train_images(), clf, cfg.patch_stride);
        psad::write_bank_set(banks, banks_path);
        std::fprintf(stderr, "banks built: hist=%td comp=%td patch=%td elements\n",
                     banks.hist.elements.rows(), banks.comp.elements.rows(),
                     banks.patch.elements.rows());
        return 0;
    }

    if (score->parsed()) {
        const auto banks = psad::read_bank_set(banks_path);
        const auto image = psad::read_tensor(image_path);
        const auto s = psad::score_image(banks, image);
        json j;
        j["s_hist"] = s.s_hist;
        j["s_comp"] = s.s_comp;
        j["s_patch"] = s.s_patch;
        j["s_final"] = s.s_final;
        std::cout << j.dump() << "\n";
        return 0;
    }

    if (evaluate->parsed()) {
        const auto banks = psad::read_bank_set(banks_path);
        const auto data = psad::open_dataset(data_dir);
        const auto report = psad::evaluate_dataset(data, banks);
        psad::write_evaluation_report(report, report_path);
        if (!histogram_prefix.empty())
            psad::write_score_histograms(report.samples, histogram_prefix);
        json j;
        j["la_auroc"] = report.la_auroc;
        j["sa_auroc"] = report.sa_auroc;
        j["mean_iou"] = report.mean_iou;
        std::cout << j.dump() << "\n";
        std::fprintf(stderr, "report written to %s\n", report_path.c_str());
        return 0;
    }

    if (ablate->parsed()) {
        const auto data = psad::open_dataset(data_dir);
        const auto clf = psad::read_classifier(ckpt_path);
        const auto report =
            psad::run_ablation(data, clf, cfg.patch_stride, cfg.ablation_seed());
        psad::write_ablation_report(report, report_path);
        std::fprintf(stderr, "ablation report written to %s (%zu cells, %zu reduced rows)\n",
                     report_path.c_str(), report.cells.size(), report.reduced.size());
        return 0;
    }

    return 2;
}

} // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const std::exception& e) {
        json err;
        err["error"] = e.what();
        std::cerr << err.dump() << "\n";
        return 1;
    }
}
