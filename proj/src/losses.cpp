#include "ood/losses.hpp"

#include <algorithm>
#include <cmath>

#include "ood/error.hpp"

namespace ood {

PairLossResult contrastive_pair_loss(std::span<const double> e1, std::span<const double> e2, int y,
                                     double margin) {
    if (e1.size() != e2.size())
        throw usage_error("pair loss: embedding dimensions differ (" + std::to_string(e1.size()) + " vs " +
                          std::to_string(e2.size()) + ")");
    if (margin <= 0.0) throw usage_error("pair loss: margin must be positive");
    if (y != 0 && y != 1) throw usage_error("pair loss: y must be 0 or 1");

    const std::size_t d = e1.size();
    PairLossResult r;
    r.grad_e1.assign(d, 0.0);
    r.grad_e2.assign(d, 0.0);

    double dist2 = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
        const double diff = e1[i] - e2[i];
        dist2 += diff * diff;
    }
    const double dist = std::sqrt(dist2);

    if (y == 0) {
        // attract: 1/2 D^2, grad_e1 = (e1 - e2)
        r.value = 0.5 * dist2;
        for (std::size_t i = 0; i < d; ++i) {
            r.grad_e1[i] = e1[i] - e2[i];
            r.grad_e2[i] = -(e1[i] - e2[i]);
        }
        return r;
    }

    // repel: 1/2 max(0, m - D)^2
    const double hinge = margin - dist;
    if (hinge <= 0.0 || dist == 0.0) {
        // hinge inactive, or coincident points where the subgradient is taken as 0
        r.value = hinge > 0.0 ? 0.5 * hinge * hinge : 0.0;
        return r;
    }
    r.value = 0.5 * hinge * hinge;
    const double scale = -hinge / dist;  // d(1/2 (m-D)^2)/dD * dD/de1 direction
    for (std::size_t i = 0; i < d; ++i) {
        r.grad_e1[i] = scale * (e1[i] - e2[i]);
        r.grad_e2[i] = -scale * (e1[i] - e2[i]);
    }
    return r;
}

PairLossResult odm_pair_loss(std::span<const double> e1, std::span<const double> e2, int y, int z,
                             double margin) {
    if (z != 0 && z != 1) throw usage_error("pair loss: z must be 0 or 1");
    if (z == 0) {
        PairLossResult r;
        r.grad_e1.assign(e1.size(), 0.0);
        r.grad_e2.assign(e2.size(), 0.0);
        return r;
    }
    return contrastive_pair_loss(e1, e2, y, margin);
}

LossOutput batch_metric_loss(const Tensor& embeddings, const PairBatch& pairs, double margin,
                             MetricLossKind kind) {
    if (embeddings.rank() != 2) throw usage_error("batch loss: embeddings must be N x d");
    const std::size_t n = embeddings.dim(0);
    const std::size_t d = embeddings.dim(1);

    LossOutput out;
    out.embedding_gradients = Tensor({n, d});
    if (pairs.size() == 0) {
        out.empty_batch = true;
        return out;
    }

    const double inv = 1.0 / static_cast<double>(pairs.size());
    double total = 0.0;
    for (std::size_t p = 0; p < pairs.size(); ++p) {
        const auto [a, b] = pairs.pairs[p];
        if (a >= n || b >= n) throw usage_error("batch loss: pair index out of range");
        std::span<const double> ea(embeddings.data() + a * d, d);
        std::span<const double> eb(embeddings.data() + b * d, d);
        const PairLossResult r = kind == MetricLossKind::Contrastive
                                     ? contrastive_pair_loss(ea, eb, pairs.y[p], margin)
                                     : odm_pair_loss(ea, eb, pairs.y[p], pairs.z[p], margin);
        total += r.value;
        double* ga = out.embedding_gradients.data() + a * d;
        double* gb = out.embedding_gradients.data() + b * d;
        for (std::size_t i = 0; i < d; ++i) {
            ga[i] += inv * r.grad_e1[i];
            gb[i] += inv * r.grad_e2[i];
        }
    }
    out.value = total * inv;
    out.embedding_gradients.require_finite("batch_metric_loss");
    return out;
}

CrossEntropyResult cross_entropy_loss(const Tensor& logits, const std::vector<int>& labels) {
    if (logits.rank() != 2) throw usage_error("cross entropy: logits must be N x C");
    const std::size_t n = logits.dim(0);
    const std::size_t c = logits.dim(1);
    if (labels.size() != n) throw usage_error("cross entropy: label count does not match batch");

    CrossEntropyResult out;
    out.logit_gradients = Tensor({n, c});
    const double inv = 1.0 / static_cast<double>(n);
    double total = 0.0;

    std::vector<double> probs(c);
    for (std::size_t i = 0; i < n; ++i) {
        const int label = labels[i];
        if (label < 0 || static_cast<std::size_t>(label) >= c)
            throw usage_error("cross entropy: label " + std::to_string(label) + " out of range [0, " +
                              std::to_string(c) + ")");
        const double* row = logits.data() + i * c;
        const double mx = *std::max_element(row, row + c);
        double denom = 0.0;
        for (std::size_t j = 0; j < c; ++j) {
            probs[j] = std::exp(row[j] - mx);
            denom += probs[j];
        }
        total += -(row[label] - mx - std::log(denom));
        double* grad = out.logit_gradients.data() + i * c;
        for (std::size_t j = 0; j < c; ++j) {
            grad[j] = (probs[j] / denom - (static_cast<std::size_t>(label) == j ? 1.0 : 0.0)) * inv;
        }
    }
    out.value = total * inv;
    out.logit_gradients.require_finite("cross_entropy_loss");
    return out;
}

}  // namespace ood
