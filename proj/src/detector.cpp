#include "ood/detector.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "ood/error.hpp"

namespace ood {

namespace {

ClassCentroids centroids_impl(const Tensor& embeddings, const std::vector<int>& labels,
                              const std::vector<int>& class_ids) {
    const std::size_t n = embeddings.dim(0);
    const std::size_t d = embeddings.dim(1);

    ClassCentroids out;
    out.class_ids = class_ids;
    out.centers = Tensor({class_ids.size(), d});

    std::map<int, std::size_t> row_of;
    for (std::size_t i = 0; i < class_ids.size(); ++i) row_of[class_ids[i]] = i;

    std::vector<std::size_t> counts(class_ids.size(), 0);
    for (std::size_t i = 0; i < n; ++i) {
        auto it = row_of.find(labels[i]);
        if (it == row_of.end()) continue;
        const std::size_t r = it->second;
        ++counts[r];
        for (std::size_t j = 0; j < d; ++j) out.centers.at(r, j) += embeddings.at(i, j);
    }
    for (std::size_t r = 0; r < class_ids.size(); ++r) {
        if (counts[r] == 0)
            throw config_error("class " + std::to_string(class_ids[r]) + " has no samples for its centroid");
        for (std::size_t j = 0; j < d; ++j) out.centers.at(r, j) /= static_cast<double>(counts[r]);
    }
    out.centers.require_finite("compute_centroids");
    return out;
}

}  // namespace

ClassCentroids compute_centroids(const Tensor& embeddings, const std::vector<int>& labels) {
    if (embeddings.rank() != 2) throw usage_error("centroids: embeddings must be N x d");
    if (labels.size() != embeddings.dim(0)) throw usage_error("centroids: label count mismatch");

    std::vector<int> ids(labels);
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    if (ids.empty()) throw config_error("centroids: no labeled samples");
    return centroids_impl(embeddings, labels, ids);
}

ClassCentroids compute_centroids(const Tensor& embeddings, const std::vector<int>& labels,
                                 const std::vector<int>& class_ids) {
    if (embeddings.rank() != 2) throw usage_error("centroids: embeddings must be N x d");
    if (labels.size() != embeddings.dim(0)) throw usage_error("centroids: label count mismatch");
    if (class_ids.empty()) throw config_error("centroids: class list is empty");

    std::vector<int> ids(class_ids);
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    return centroids_impl(embeddings, labels, ids);
}

namespace {

// returns (best distance, best row); ties keep the lowest row = lowest class id
std::pair<double, std::size_t> nearest_center(std::span<const double> e, const ClassCentroids& c) {
    if (c.count() == 0) throw usage_error("detector: centroid set is empty");
    if (e.size() != c.dim())
        throw usage_error("detector: embedding dim " + std::to_string(e.size()) +
                          " does not match centroids dim " + std::to_string(c.dim()));
    double best = 0.0;
    std::size_t best_row = 0;
    for (std::size_t r = 0; r < c.count(); ++r) {
        double d2 = 0.0;
        for (std::size_t j = 0; j < e.size(); ++j) {
            const double diff = e[j] - c.centers.at(r, j);
            d2 += diff * diff;
        }
        if (r == 0 || d2 < best) {
            best = d2;
            best_row = r;
        }
    }
    return {std::sqrt(best), best_row};
}

}  // namespace

double ood_score(std::span<const double> embedding, const ClassCentroids& centroids) {
    return -nearest_center(embedding, centroids).first;
}

int classify(std::span<const double> embedding, const ClassCentroids& centroids) {
    return centroids.class_ids[nearest_center(embedding, centroids).second];
}

double max_softmax_score(std::span<const double> logits) {
    if (logits.size() < 2) throw usage_error("max_softmax_score needs at least 2 logits");
    const double mx = *std::max_element(logits.begin(), logits.end());
    double denom = 0.0;
    for (double v : logits) denom += std::exp(v - mx);
    return 1.0 / denom;  // exp(mx - mx) / sum
}

}  // namespace ood
