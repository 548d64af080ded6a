#pragma once

#include <functional>

#include "ood/network.hpp"

namespace ood {

// Scalar loss evaluated on a frozen network; used as the target of the
// finite-difference probe. Implementations typically run forward() and fold
// the embeddings into one number.
using LossClosure = std::function<double(const Network&)>;

// Central-difference gradient estimate (L(p+h) - L(p-h)) / 2h for every
// parameter coordinate. Independent of backward(); relies only on forward
// evaluation through the closure.
Gradients finite_difference_gradient(const Network& net, const LossClosure& loss, double step);

// max over coordinates of |a - b| / (|a| + |b| + 1e-8)
double max_relative_gradient_error(const Gradients& a, const Gradients& b);

}  // namespace ood
