#pragma once

#include <span>
#include <vector>

#include "ood/pairs.hpp"
#include "ood/tensor.hpp"

namespace ood {

// Loss and exact gradients for one embedding pair.
struct PairLossResult {
    double value = 0.0;
    std::vector<double> grad_e1;
    std::vector<double> grad_e2;
};

// Batch-level loss: mean over pairs; gradients accumulated per minibatch member,
// zero for members that participate in no pair.
struct LossOutput {
    double value = 0.0;
    Tensor embedding_gradients;  // N x d
    bool empty_batch = false;    // set when the PairBatch had no pairs
};

enum class MetricLossKind { Contrastive, Odm };

// loss = 1/2 (1-y) D^2 + 1/2 y max(0, m - D)^2 with D = ||e1 - e2||_2.
// Gradient convention: 0 at the non-differentiable points D = 0 (y=1) and D = m.
PairLossResult contrastive_pair_loss(std::span<const double> e1, std::span<const double> e2, int y,
                                     double margin);

// z = 0 (both members out-of-distribution): loss and gradients are exactly zero.
// z = 1: identical to contrastive_pair_loss, bit for bit.
PairLossResult odm_pair_loss(std::span<const double> e1, std::span<const double> e2, int y, int z,
                             double margin);

// Mean of per-pair losses over the batch; per-member gradients scaled by 1/|pairs|.
LossOutput batch_metric_loss(const Tensor& embeddings, const PairBatch& pairs, double margin,
                             MetricLossKind kind);

// Softmax cross entropy, mean over rows; gradient = (softmax - onehot)/N.
struct CrossEntropyResult {
    double value = 0.0;
    Tensor logit_gradients;  // N x C
};
CrossEntropyResult cross_entropy_loss(const Tensor& logits, const std::vector<int>& labels);

}  // namespace ood
