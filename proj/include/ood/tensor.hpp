#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace ood {

// Dense n-dimensional array of doubles, row-major.
// Invariant: values.size() == product(shape); public operations keep values finite.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> shape);
    Tensor(std::vector<std::size_t> shape, std::vector<double> values);
    Tensor(std::vector<std::size_t> shape, double fill);

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t dim(std::size_t i) const { return shape_[i]; }
    std::size_t size() const { return values_.size(); }

    double* data() { return values_.data(); }
    const double* data() const { return values_.data(); }
    std::vector<double>& values() { return values_; }
    const std::vector<double>& values() const { return values_; }

    double& operator[](std::size_t i) { return values_[i]; }
    double operator[](std::size_t i) const { return values_[i]; }

    // 2-d accessors (row-major)
    double& at(std::size_t r, std::size_t c) { return values_[r * shape_[1] + c]; }
    double at(std::size_t r, std::size_t c) const { return values_[r * shape_[1] + c]; }

    void fill(double v);
    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
    bool all_finite() const;

    // throws usage_error if any value is NaN/Inf; `what` names the operation
    void require_finite(const std::string& what) const;

    std::string shape_string() const;

    static std::size_t element_count(const std::vector<std::size_t>& shape);

private:
    std::vector<std::size_t> shape_;
    std::vector<double> values_;
};

std::string shape_to_string(const std::vector<std::size_t>& shape);

}  // namespace ood
