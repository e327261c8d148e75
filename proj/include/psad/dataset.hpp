#pragma once

#include <filesystem>
#include <vector>

#include "psad/synthgen.hpp"
#include "psad/tensor.hpp"

namespace psad {

/// A dataset directory opened through its manifest. Ground-truth maps exist
/// for every entry but the training path only ever reads labeled ones.
struct LoadedDataset {
    std::filesystem::path root;
    DatasetManifest manifest;

    Tensor image(const ManifestEntry& e) const;
    SegMap ground_truth(const ManifestEntry& e) const;

    std::vector<const ManifestEntry*> entries_with_role(const std::string& role) const;
    std::vector<const ManifestEntry*> test_entries_with_label(const std::string& label) const;

    /// All normal training images (roles labeled + unlabeled), manifest order.
    std::vector<Tensor> train_images() const;
};

LoadedDataset open_dataset(const std::filesystem::path& root);

} // namespace psad
