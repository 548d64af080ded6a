#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ood/tensor.hpp"

namespace ood {

enum class OptimizerKind { Sgd, Adam };

OptimizerKind optimizer_kind_from_string(const std::string& name);
std::string to_string(OptimizerKind kind);

// First-order optimizer state. Adam moment arrays mirror the parameter shapes
// and are created lazily on the first step.
class Optimizer {
public:
    Optimizer(OptimizerKind kind, double learning_rate, double beta1 = 0.9, double beta2 = 0.999,
              double epsilon = 1e-8);

    // In-place update of every parameter tensor; grads align one-to-one with params.
    // sgd: p -= lr*g.  adam: bias-corrected moment update, step counter +1.
    void step(const std::vector<Tensor*>& params, const std::vector<const Tensor*>& grads);

    OptimizerKind kind() const { return kind_; }
    double learning_rate() const { return lr_; }
    std::uint64_t step_count() const { return step_count_; }

private:
    OptimizerKind kind_;
    double lr_;
    double beta1_, beta2_, epsilon_;
    std::uint64_t step_count_ = 0;
    std::vector<Tensor> m_, v_;  // adam first/second moments
};

}  // namespace ood
