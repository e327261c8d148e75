#include "psad/dataset.hpp"

#include "psad/tensor_io.hpp"

namespace psad {

Tensor LoadedDataset::image(const ManifestEntry& e) const {
    return read_tensor(root / e.image_path);
}

SegMap LoadedDataset::ground_truth(const ManifestEntry& e) const {
    return read_segmap(root / e.gt_path);
}

std::vector<const ManifestEntry*> LoadedDataset::entries_with_role(
    const std::string& role) const {
    std::vector<const ManifestEntry*> out;
    for (const auto& e : manifest.entries)
        if (e.role == role) out.push_back(&e);
    return out;
}

std::vector<const ManifestEntry*> LoadedDataset::test_entries_with_label(
    const std::string& label) const {
    std::vector<const ManifestEntry*> out;
    for (const auto& e : manifest.entries)
        if (e.role == "test" && e.label == label) out.push_back(&e);
    return out;
}

std::vector<Tensor> LoadedDataset::train_images() const {
    std::vector<Tensor> images;
    for (const auto& e : manifest.entries)
        if (e.role == "labeled" || e.role == "unlabeled") images.push_back(image(e));
    return images;
}

LoadedDataset open_dataset(const std::filesystem::path& root) {
    LoadedDataset data;
    data.root = root;
    data.manifest = read_manifest(root / "manifest.json");
    return data;
}

} // namespace psad
