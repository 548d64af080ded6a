#include "ood/gradcheck.hpp"

#include <cmath>

#include "ood/error.hpp"

namespace ood {

Gradients finite_difference_gradient(const Network& net, const LossClosure& loss, double step) {
    if (step <= 0.0) throw usage_error("finite difference step must be positive");

    Network probe = net;  // perturbed copy; the caller's network stays untouched
    Gradients grads = net.zero_gradients();

    for (std::size_t layer = 0; layer < net.layers().size(); ++layer) {
        if (!net.layers()[layer].has_params()) continue;
        for (int which = 0; which < 2; ++which) {
            Tensor& p = which == 0 ? probe.weight(layer) : probe.bias(layer);
            Tensor& g = which == 0 ? grads.weight[layer] : grads.bias[layer];
            for (std::size_t j = 0; j < p.size(); ++j) {
                const double saved = p[j];
                p[j] = saved + step;
                probe.bump_version();
                const double up = loss(probe);
                p[j] = saved - step;
                probe.bump_version();
                const double down = loss(probe);
                p[j] = saved;
                probe.bump_version();
                g[j] = (up - down) / (2.0 * step);
            }
        }
    }
    return grads;
}

double max_relative_gradient_error(const Gradients& a, const Gradients& b) {
    double worst = 0.0;
    auto scan = [&](const Tensor& x, const Tensor& y) {
        for (std::size_t j = 0; j < x.size(); ++j) {
            const double err = std::abs(x[j] - y[j]) / (std::abs(x[j]) + std::abs(y[j]) + 1e-8);
            if (err > worst) worst = err;
        }
    };
    for (std::size_t i = 0; i < a.weight.size(); ++i) {
        scan(a.weight[i], b.weight[i]);
        scan(a.bias[i], b.bias[i]);
    }
    return worst;
}

}  // namespace ood
