#include "psad/config.hpp"

#include <fstream>

#include <json.hpp>

#include "psad/rng.hpp"

namespace psad {

namespace {

using nlohmann::json;

void reject_unknown(const json& obj, std::initializer_list<const char*> allowed,
                    const std::string& where) {
    for (const auto& [key, value] : obj.items()) {
        bool known = false;
        for (const char* k : allowed)
            if (key == k) { known = true; break; }
        if (!known) throw ConfigError(where + ": unknown key \"" + key + "\"");
    }
}

template <typename T>
void read_field(const json& obj, const char* key, T& out, const std::string& where) {
    if (!obj.contains(key)) return;
    try {
        out = obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(where + ": bad value for \"" + key + "\"");
    }
}

} // namespace

std::uint64_t PipelineConfig::train_seed() const {
    return train_seed_set ? train.seed : Rng::derive(seed, streams::kTrain);
}

PipelineConfig parse_config(const std::string& json_text, const std::string& context) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ConfigError(context + ": invalid JSON: " + e.what());
    }
    if (!j.is_object()) throw ConfigError(context + ": config must be a JSON object");

    PipelineConfig cfg;
    reject_unknown(j, {"product", "counts", "train", "features", "seed"}, context);
    read_field(j, "product", cfg.product, context);
    read_field(j, "seed", cfg.seed, context);

    if (j.contains("counts")) {
        const json& c = j.at("counts");
        if (!c.is_object()) throw ConfigError(context + ": counts must be an object");
        reject_unknown(c, {"n_labeled", "n_unlabeled", "n_test_normal", "n_test_la", "n_test_sa"},
                       context + ".counts");
        read_field(c, "n_labeled", cfg.counts.n_labeled, context);
        read_field(c, "n_unlabeled", cfg.counts.n_unlabeled, context);
        read_field(c, "n_test_normal", cfg.counts.n_test_normal, context);
        read_field(c, "n_test_la", cfg.counts.n_test_la, context);
        read_field(c, "n_test_sa", cfg.counts.n_test_sa, context);
    }

    if (j.contains("train")) {
        const json& t = j.at("train");
        if (!t.is_object()) throw ConfigError(context + ": train must be an object");
        reject_unknown(t,
                       {"lambda_ce", "lambda_entropy", "lambda_hist", "learning_rate",
                        "weight_decay", "batch_size", "labeled_per_batch", "warmup_steps",
                        "main_steps", "hidden_width", "max_translation", "seed"},
                       context + ".train");
        read_field(t, "lambda_ce", cfg.train.lambda_ce, context);
        read_field(t, "lambda_entropy", cfg.train.lambda_entropy, context);
        read_field(t, "lambda_hist", cfg.train.lambda_hist, context);
        read_field(t, "learning_rate", cfg.train.learning_rate, context);
        read_field(t, "weight_decay", cfg.train.weight_decay, context);
        read_field(t, "batch_size", cfg.train.batch_size, context);
        read_field(t, "labeled_per_batch", cfg.train.labeled_per_batch, context);
        read_field(t, "warmup_steps", cfg.train.warmup_steps, context);
        read_field(t, "main_steps", cfg.train.main_steps, context);
        read_field(t, "hidden_width", cfg.train.hidden_width, context);
        read_field(t, "max_translation", cfg.train.max_translation, context);
        if (t.contains("seed")) {
            read_field(t, "seed", cfg.train.seed, context);
            cfg.train_seed_set = true;
        }
    }

    if (j.contains("features")) {
        const json& f = j.at("features");
        if (!f.is_object()) throw ConfigError(context + ": features must be an object");
        reject_unknown(f, {"patch_stride"}, context + ".features");
        read_field(f, "patch_stride", cfg.patch_stride, context);
    }

    if (cfg.patch_stride < 1) throw ConfigError(context + ": patch_stride must be >= 1");
    if (cfg.train.batch_size < 1) throw ConfigError(context + ": batch_size must be >= 1");
    if (cfg.train.lambda_ce <= 0 || cfg.train.lambda_entropy <= 0 || cfg.train.lambda_hist <= 0)
        throw ConfigError(context + ": loss weights must be positive");
    if (cfg.train.warmup_steps < 0 || cfg.train.main_steps < 0)
        throw ConfigError(context + ": step counts must be >= 0");
    return cfg;
}

PipelineConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config " + path.string());
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_config(text, path.string());
}

} // namespace psad
