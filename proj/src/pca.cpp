#include "ood/pca.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ood/error.hpp"

namespace ood {

SymmetricEigen jacobi_eigen_symmetric(const Tensor& matrix, double tol) {
    if (matrix.rank() != 2 || matrix.dim(0) != matrix.dim(1))
        throw usage_error("jacobi: matrix must be square");
    const std::size_t d = matrix.dim(0);

    std::vector<double> a(matrix.values());
    std::vector<double> v(d * d, 0.0);
    for (std::size_t i = 0; i < d; ++i) v[i * d + i] = 1.0;

    auto off_norm = [&]() {
        double s = 0.0;
        for (std::size_t p = 0; p < d; ++p)
            for (std::size_t q = p + 1; q < d; ++q) s += 2.0 * a[p * d + q] * a[p * d + q];
        return std::sqrt(s);
    };

    double scale = 0.0;
    for (double x : a) scale += x * x;
    scale = std::sqrt(scale);
    const double stop = tol * std::max(1.0, scale);

    for (int sweep = 0; sweep < 100 && off_norm() > stop; ++sweep) {
        for (std::size_t p = 0; p < d; ++p) {
            for (std::size_t q = p + 1; q < d; ++q) {
                const double apq = a[p * d + q];
                if (apq == 0.0) continue;
                const double theta = (a[q * d + q] - a[p * d + p]) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;

                for (std::size_t i = 0; i < d; ++i) {
                    const double aip = a[i * d + p];
                    const double aiq = a[i * d + q];
                    a[i * d + p] = c * aip - s * aiq;
                    a[i * d + q] = s * aip + c * aiq;
                }
                for (std::size_t i = 0; i < d; ++i) {
                    const double api = a[p * d + i];
                    const double aqi = a[q * d + i];
                    a[p * d + i] = c * api - s * aqi;
                    a[q * d + i] = s * api + c * aqi;
                }
                for (std::size_t i = 0; i < d; ++i) {
                    const double vip = v[i * d + p];
                    const double viq = v[i * d + q];
                    v[i * d + p] = c * vip - s * viq;
                    v[i * d + q] = s * vip + c * viq;
                }
            }
        }
    }

    std::vector<std::size_t> order(d);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return a[x * d + x] > a[y * d + y]; });

    SymmetricEigen out;
    out.values.resize(d);
    out.vectors = Tensor({d, d});
    for (std::size_t r = 0; r < d; ++r) {
        out.values[r] = a[order[r] * d + order[r]];
        for (std::size_t i = 0; i < d; ++i) out.vectors.at(r, i) = v[i * d + order[r]];
    }
    return out;
}

PcaResult pca_project(const Tensor& embeddings, std::size_t k) {
    if (embeddings.rank() != 2) throw usage_error("pca: embeddings must be N x d");
    const std::size_t n = embeddings.dim(0);
    const std::size_t d = embeddings.dim(1);
    if (k == 0 || n <= k || d < k)
        throw usage_error("pca: need N > k and d >= k (N=" + std::to_string(n) + ", d=" + std::to_string(d) +
                          ", k=" + std::to_string(k) + ")");

    PcaResult out;
    out.mean.assign(d, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) out.mean[j] += embeddings.at(i, j);
    for (double& m : out.mean) m /= static_cast<double>(n);

    Tensor centered({n, d});
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) centered.at(i, j) = embeddings.at(i, j) - out.mean[j];

    // sample covariance, d x d
    Tensor cov({d, d});
    for (std::size_t i = 0; i < n; ++i) {
        const double* row = centered.data() + i * d;
        for (std::size_t p = 0; p < d; ++p)
            for (std::size_t q = p; q < d; ++q) cov.at(p, q) += row[p] * row[q];
    }
    for (std::size_t p = 0; p < d; ++p)
        for (std::size_t q = p; q < d; ++q) {
            cov.at(p, q) /= static_cast<double>(n - 1);
            cov.at(q, p) = cov.at(p, q);
        }

    SymmetricEigen eig = jacobi_eigen_symmetric(cov);

    double total = 0.0;
    for (double ev : eig.values) total += std::max(ev, 0.0);
    const double rank_floor = 1e-12 * std::max(1e-300, eig.values.empty() ? 0.0 : std::max(eig.values[0], 0.0));

    out.projections = Tensor({n, k});
    out.components = Tensor({k, d});
    out.explained_variance_ratio.assign(k, 0.0);
    out.degenerate.assign(k, false);

    for (std::size_t comp = 0; comp < k; ++comp) {
        const double ev = eig.values[comp];
        if (ev <= rank_floor) {
            out.degenerate[comp] = true;  // zero-filled projection below rank
            continue;
        }
        // sign convention: largest-magnitude coordinate positive
        std::size_t arg = 0;
        for (std::size_t j = 1; j < d; ++j)
            if (std::abs(eig.vectors.at(comp, j)) > std::abs(eig.vectors.at(comp, arg))) arg = j;
        const double sign = eig.vectors.at(comp, arg) < 0.0 ? -1.0 : 1.0;

        for (std::size_t j = 0; j < d; ++j) out.components.at(comp, j) = sign * eig.vectors.at(comp, j);
        out.explained_variance_ratio[comp] = total > 0.0 ? std::max(ev, 0.0) / total : 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double dot = 0.0;
            for (std::size_t j = 0; j < d; ++j) dot += centered.at(i, j) * out.components.at(comp, j);
            out.projections.at(i, comp) = dot;
        }
    }
    return out;
}

}  // namespace ood
