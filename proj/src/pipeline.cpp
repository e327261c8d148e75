#include "psad/pipeline.hpp"

#include "psad/parallel.hpp"

namespace psad {

PreparedTraining prepare_training(const LoadedDataset& data) {
    const auto labeled_entries = data.entries_with_role("labeled");
    const auto unlabeled_entries = data.entries_with_role("unlabeled");
    if (labeled_entries.empty()) throw ContractError("dataset has no labeled images");

    PreparedTraining prep;
    prep.labeled.resize(labeled_entries.size());
    std::vector<VectorX<double>> labeled_embeddings(labeled_entries.size());
    std::vector<int> labeled_types(labeled_entries.size());
    parallel_for(labeled_entries.size(), [&](std::size_t i) {
        const ManifestEntry& e = *labeled_entries[i];
        const Tensor image = data.image(e);
        prep.labeled[i] = LabeledSample{pixel_features(image), data.ground_truth(e),
                                        e.product_type};
        labeled_embeddings[i] = global_embedding(image);
        labeled_types[i] = e.product_type;
    });

    prep.unlabeled.resize(unlabeled_entries.size());
    prep.unlabeled_manifest_types.resize(unlabeled_entries.size());
    parallel_for(unlabeled_entries.size(), [&](std::size_t i) {
        const ManifestEntry& e = *unlabeled_entries[i];
        const Tensor image = data.image(e);
        const int type =
            assign_product_type(global_embedding(image), labeled_embeddings, labeled_types);
        prep.unlabeled[i] = UnlabeledSample{pixel_features(image), type};
        prep.unlabeled_manifest_types[i] = e.product_type;
    });
    return prep;
}

TrainResult train_on_dataset(const LoadedDataset& data, const TrainConfig& cfg) {
    const PreparedTraining prep = prepare_training(data);
    return train_classifier(prep.labeled, prep.unlabeled, cfg);
}

} // namespace psad
