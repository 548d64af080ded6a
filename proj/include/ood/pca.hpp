#pragma once

#include <vector>

#include "ood/tensor.hpp"

namespace ood {

// Projection of mean-centered data onto the top-k principal directions.
// Components are sorted by descending eigenvalue; each direction is sign-fixed
// so its largest-magnitude coordinate is positive. Components beyond the data
// rank are zero-filled and flagged degenerate.
struct PcaResult {
    Tensor projections;                     // N x k
    std::vector<double> explained_variance_ratio;  // k entries, of total variance
    std::vector<bool> degenerate;           // k entries
    Tensor components;                      // k x d row-wise directions
    std::vector<double> mean;               // d
};

PcaResult pca_project(const Tensor& embeddings, std::size_t k);

// Cyclic Jacobi eigendecomposition of a symmetric matrix (row-major d x d).
// Iterates until the off-diagonal Frobenius norm drops below `tol`.
// Returns eigenvalues (descending) and matching eigenvectors as rows.
struct SymmetricEigen {
    std::vector<double> values;
    Tensor vectors;  // d x d, row i is the eigenvector of values[i]
};
SymmetricEigen jacobi_eigen_symmetric(const Tensor& matrix, double tol = 1e-12);

}  // namespace ood
