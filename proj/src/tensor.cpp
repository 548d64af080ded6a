#include "ood/tensor.hpp"

#include <cmath>
#include <sstream>

#include "ood/error.hpp"

namespace ood {

std::size_t Tensor::element_count(const std::vector<std::size_t>& shape) {
    // a zero dim is legal only as an empty leading (sample-count) axis
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    return n;
}

Tensor::Tensor(std::vector<std::size_t> shape)
    : shape_(std::move(shape)), values_(element_count(shape_), 0.0) {}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> values)
    : shape_(std::move(shape)), values_(std::move(values)) {
    if (values_.size() != element_count(shape_)) {
        throw usage_error("tensor value count " + std::to_string(values_.size()) +
                          " does not match shape " + shape_to_string(shape_));
    }
}

Tensor::Tensor(std::vector<std::size_t> shape, double fill)
    : shape_(std::move(shape)), values_(element_count(shape_), fill) {}

void Tensor::fill(double v) {
    for (double& x : values_) x = v;
}

bool Tensor::all_finite() const {
    for (double x : values_) {
        if (!std::isfinite(x)) return false;
    }
    return true;
}

void Tensor::require_finite(const std::string& what) const {
    if (!all_finite()) throw usage_error(what + " produced a non-finite value");
}

std::string Tensor::shape_string() const { return shape_to_string(shape_); }

std::string shape_to_string(const std::vector<std::size_t>& shape) {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << "x";
        os << shape[i];
    }
    os << "]";
    return os.str();
}

}  // namespace ood
