#pragma once

#include "psad/dataset.hpp"
#include "psad/trainer.hpp"

namespace psad {

struct PreparedTraining {
    std::vector<LabeledSample> labeled;
    std::vector<UnlabeledSample> unlabeled;
    std::vector<int> unlabeled_manifest_types; // generator truth, diagnostics only
};

/// Loads labeled samples (features, ground truth, manifest type) and
/// unlabeled samples whose product types are assigned by nearest labeled
/// global embedding. Unlabeled ground truth is never read here.
PreparedTraining prepare_training(const LoadedDataset& data);

TrainResult train_on_dataset(const LoadedDataset& data, const TrainConfig& cfg);

} // namespace psad
