#include "ood/optimizer.hpp"

#include <cmath>

#include "ood/error.hpp"

namespace ood {

OptimizerKind optimizer_kind_from_string(const std::string& name) {
    if (name == "sgd") return OptimizerKind::Sgd;
    if (name == "adam") return OptimizerKind::Adam;
    throw config_error("unknown optimizer '" + name + "' (expected sgd or adam)");
}

std::string to_string(OptimizerKind kind) { return kind == OptimizerKind::Sgd ? "sgd" : "adam"; }

Optimizer::Optimizer(OptimizerKind kind, double learning_rate, double beta1, double beta2, double epsilon)
    : kind_(kind), lr_(learning_rate), beta1_(beta1), beta2_(beta2), epsilon_(epsilon) {
    if (learning_rate <= 0.0) throw config_error("learning rate must be positive");
}

void Optimizer::step(const std::vector<Tensor*>& params, const std::vector<const Tensor*>& grads) {
    if (params.size() != grads.size())
        throw usage_error("optimizer: parameter and gradient counts differ");
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (!params[i]->same_shape(*grads[i]))
            throw usage_error("optimizer: gradient shape " + grads[i]->shape_string() +
                              " does not match parameter shape " + params[i]->shape_string());
    }

    if (kind_ == OptimizerKind::Sgd) {
        for (std::size_t i = 0; i < params.size(); ++i) {
            Tensor& p = *params[i];
            const Tensor& g = *grads[i];
            for (std::size_t j = 0; j < p.size(); ++j) p[j] -= lr_ * g[j];
        }
        ++step_count_;
        return;
    }

    if (m_.empty()) {
        for (const Tensor* p : params) {
            m_.emplace_back(p->shape());
            v_.emplace_back(p->shape());
        }
    } else if (m_.size() != params.size()) {
        throw usage_error("optimizer: parameter set changed between steps");
    }

    ++step_count_;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(step_count_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(step_count_));
    for (std::size_t i = 0; i < params.size(); ++i) {
        Tensor& p = *params[i];
        const Tensor& g = *grads[i];
        Tensor& m = m_[i];
        Tensor& v = v_[i];
        if (!m.same_shape(p))
            throw usage_error("optimizer: moment shape " + m.shape_string() +
                              " does not match parameter shape " + p.shape_string());
        for (std::size_t j = 0; j < p.size(); ++j) {
            m[j] = beta1_ * m[j] + (1.0 - beta1_) * g[j];
            v[j] = beta2_ * v[j] + (1.0 - beta2_) * g[j] * g[j];
            const double mhat = m[j] / bc1;
            const double vhat = v[j] / bc2;
            p[j] -= lr_ * mhat / (std::sqrt(vhat) + epsilon_);
        }
    }
}

}  // namespace ood
