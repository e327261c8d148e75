#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "psad/synthgen.hpp"
#include "psad/trainer.hpp"

namespace psad {

/// Pipeline-wide configuration. Every field has a default; the JSON loader
/// rejects unknown keys at every level. All stage randomness derives from
/// the single root seed unless train.seed is set explicitly.
struct PipelineConfig {
    std::string product = "bench";
    DatasetCounts counts;
    TrainConfig train;
    bool train_seed_set = false; // train.seed came from the file
    int patch_stride = 8;
    std::uint64_t seed = 1;

    std::uint64_t train_seed() const;
    std::uint64_t scene_seed() const { return seed; }
    std::uint64_t ablation_seed() const { return seed; }
};

PipelineConfig load_config(const std::filesystem::path& path);
PipelineConfig parse_config(const std::string& json_text, const std::string& context);

} // namespace psad
