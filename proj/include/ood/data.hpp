#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ood/tensor.hpp"

namespace ood {

constexpr int kOodLabel = -1;  // label carried by unlabeled out-of-distribution samples

enum class Origin : std::uint8_t { In, SeenOut, UnseenNovelty, Anomaly };

std::string origin_tag(Origin origin, const std::string& anomaly_source);

// Images with class labels and origin tags. Pixels live in [0, 1], stored
// N x H x W x C. Anomaly sets carry the OOD label, never a class id.
struct LabeledImageSet {
    Tensor images;
    std::vector<int> labels;
    std::vector<Origin> origins;
    std::string anomaly_source;  // non-empty only for anomaly sets

    std::size_t count() const { return labels.size(); }
    std::size_t height() const { return images.dim(1); }
    std::size_t width() const { return images.dim(2); }
    std::size_t channels() const { return images.dim(3); }

    LabeledImageSet subset(const std::vector<std::size_t>& indices) const;
    void check_pixels() const;  // verifies the [0,1] invariant
};

enum class AnomalyKind { GaussianNoise, Cifar10, None };

struct AnomalySource {
    AnomalyKind kind = AnomalyKind::None;
    bool seen = false;  // used as out-distribution during training
};

AnomalyKind anomaly_kind_from_string(const std::string& name);
std::string to_string(AnomalyKind kind);

// Disjoint class partitions of the experiment protocol.
struct SplitConfig {
    std::vector<int> in_classes;
    std::vector<int> seen_out_classes;
    std::vector<int> unseen_out_classes;
    std::vector<AnomalySource> anomaly_sources;

    void validate() const;  // pairwise disjoint, >= 2 in-distribution classes
};

struct SplitResult {
    LabeledImageSet train_in;
    LabeledImageSet seen_out;
    LabeledImageSet test_in;
    LabeledImageSet unseen_out;
};

// IDX ingestion (big-endian, magic 0x00000803 images / 0x00000801 labels).
// Pixels are scaled to [0,1] by /255.
LabeledImageSet load_idx(const std::string& images_path, const std::string& labels_path);

// CIFAR-10 binary batches: 3073-byte records, label byte then planar RGB.
// Converted to 32x32x3 interleaved in [0,1]. Empty files contribute 0 records.
LabeledImageSet load_cifar10_binary(const std::vector<std::string>& paths);

// Grayscale conversion (luminance 0.299R + 0.587G + 0.114B) when C goes 3 -> 1,
// then bilinear resize to the target geometry. Identity dims copy bit-exactly.
LabeledImageSet adapt_anomaly(const LabeledImageSet& set, std::size_t target_h, std::size_t target_w,
                              std::size_t target_c);

// I.i.d. Normal(mean, stddev) pixels clipped to [0,1]; deterministic per seed.
LabeledImageSet gaussian_noise_set(std::size_t n, std::size_t h, std::size_t w, std::size_t c,
                                   double mean, double stddev, std::uint64_t seed);

// Isotropic Gaussian clusters at mutually distant corner centers inside [0,1]^dims.
// `separation` is the ratio of the minimum center distance to the cluster stddev.
// Emitted as dims x 1 x 1 images so the vectors feed dense networks directly.
LabeledImageSet synthetic_blobs(std::size_t n_per_class, std::size_t n_classes, std::size_t dims,
                                double separation, std::uint64_t seed);

// Partition native train/test files by the configured class sets. Train/test
// of in-classes follow the native files; seen-out comes from the training file
// only, unseen-out from the test file only.
SplitResult apply_split(const LabeledImageSet& train_set, const LabeledImageSet& test_set,
                        const SplitConfig& config);

// Seeded holdout of `fraction` of a set (validation monitoring).
std::pair<LabeledImageSet, LabeledImageSet> holdout_split(const LabeledImageSet& set, double fraction,
                                                          std::uint64_t seed);

// Samples at `indices` as a batch in the network's N x C x H x W layout.
Tensor make_network_batch(const LabeledImageSet& set, const std::vector<std::size_t>& indices);

}  // namespace ood
