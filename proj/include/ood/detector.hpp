#pragma once

#include <optional>
#include <span>
#include <vector>

#include "ood/tensor.hpp"

namespace ood {

// One mean embedding per in-distribution class. Immutable after construction.
struct ClassCentroids {
    std::vector<int> class_ids;  // sorted ascending
    Tensor centers;              // C x d

    std::size_t count() const { return class_ids.size(); }
    std::size_t dim() const { return centers.rank() == 2 ? centers.dim(1) : 0; }
};

// Arithmetic mean of each class's embeddings; classes taken from the labels.
ClassCentroids compute_centroids(const Tensor& embeddings, const std::vector<int>& labels);

// As above but for an explicit class list; a listed class with no samples is a
// configuration error.
ClassCentroids compute_centroids(const Tensor& embeddings, const std::vector<int>& labels,
                                 const std::vector<int>& class_ids);

// -min_c ||e - center_c||: 0 at a center, more negative further out.
double ood_score(std::span<const double> embedding, const ClassCentroids& centroids);

// Nearest-centroid class; ties broken by lowest class id.
int classify(std::span<const double> embedding, const ClassCentroids& centroids);

// Max softmax probability, numerically stabilized. Needs >= 2 logits.
double max_softmax_score(std::span<const double> logits);

// Per-sample detection score plus ground truth for the metrics module.
struct ScoreRecord {
    double score = 0.0;
    bool is_in_distribution = false;
    std::optional<int> predicted_class;
    std::optional<int> true_class;
};

}  // namespace ood
