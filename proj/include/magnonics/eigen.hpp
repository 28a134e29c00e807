// eigen.hpp — deterministic eigendecomposition of small dense real symmetric
// matrices by cyclic Jacobi rotations.
//
// The sweep order is fixed and there is no pivot selection, so identical
// input bits always produce identical output bits. Intended for the small
// coupled-mode matrices of this project (dim is 1 + number of magnon modes);
// cost grows as dim^3 per sweep, which is irrelevant at these sizes.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace magnonics {

/// Dense square matrix, row-major.
struct SquareMatrix {
    std::size_t n = 0;
    std::vector<double> entries; // n*n, row-major

    SquareMatrix() = default;
    explicit SquareMatrix(std::size_t dim) : n(dim), entries(dim * dim, 0.0) {}

    [[nodiscard]] double at(std::size_t i, std::size_t j) const { return entries[i * n + j]; }
    double& at(std::size_t i, std::size_t j) { return entries[i * n + j]; }

    [[nodiscard]] double max_asymmetry() const {
        double worst = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j)
                worst = std::max(worst, std::abs(at(i, j) - at(j, i)));
        return worst;
    }
};

/// Eigenvalues ascending with matching orthonormal eigenvectors;
/// vectors[k] belongs to values[k].
struct EigenDecomposition {
    std::vector<double> values;
    std::vector<std::vector<double>> vectors;
};

class eigen_error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

namespace detail {

inline void jacobi_rotate(SquareMatrix& a, SquareMatrix& v, std::size_t p, std::size_t q) {
    const std::size_t n = a.n;
    const double apq = a.at(p, q);
    if (apq == 0.0) return;

    const double theta = (a.at(q, q) - a.at(p, p)) / (2.0 * apq);
    // t = sign(theta) / (|theta| + sqrt(theta^2 + 1)), guarded against overflow
    double t;
    if (std::abs(theta) > 1e154) {
        t = 0.5 / theta;
    } else {
        t = 1.0 / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        if (theta < 0.0) t = -t;
    }
    const double c = 1.0 / std::sqrt(t * t + 1.0);
    const double s = t * c;
    const double tau = s / (1.0 + c);

    const double h = t * apq;
    a.at(p, p) -= h;
    a.at(q, q) += h;
    a.at(p, q) = 0.0;
    a.at(q, p) = 0.0;

    auto rotate_pair = [&](double& x, double& y) {
        const double g = x;
        const double hh = y;
        x = g - s * (hh + g * tau);
        y = hh + s * (g - hh * tau);
    };

    for (std::size_t i = 0; i < n; ++i) {
        if (i != p && i != q) {
            double aip = a.at(i, p);
            double aiq = a.at(i, q);
            rotate_pair(aip, aiq);
            a.at(i, p) = aip;
            a.at(p, i) = aip;
            a.at(i, q) = aiq;
            a.at(q, i) = aiq;
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        double vip = v.at(i, p);
        double viq = v.at(i, q);
        rotate_pair(vip, viq);
        v.at(i, p) = vip;
        v.at(i, q) = viq;
    }
}

} // namespace detail

/// Eigendecomposition of a real symmetric matrix. Eigenvalues sorted
/// ascending; exact ties are broken by the squared first component
/// ("cavity weight" in the coupled-mode context) descending. Eigenvector
/// signs are canonical: the largest-magnitude component is positive.
///
/// Throws eigen_error if the input is not symmetric to machine precision or
/// the sweep cap is hit (which does not happen for finite symmetric input).
inline EigenDecomposition eigen_symmetric(const SquareMatrix& input) {
    const std::size_t n = input.n;
    if (n == 0) throw eigen_error("eigen_symmetric: empty matrix");

    double scale = 0.0;
    for (double e : input.entries) {
        if (!std::isfinite(e)) throw eigen_error("eigen_symmetric: non-finite entry");
        scale = std::max(scale, std::abs(e));
    }
    if (input.max_asymmetry() > 1e-12 * std::max(scale, 1.0)) {
        throw eigen_error("eigen_symmetric: matrix is not symmetric");
    }

    SquareMatrix a = input;
    SquareMatrix v(n);
    for (std::size_t i = 0; i < n; ++i) v.at(i, i) = 1.0;

    constexpr int max_sweeps = 64;
    int sweep = 0;
    for (; sweep < max_sweeps; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) off += std::abs(a.at(p, q));
        if (off == 0.0) break;

        const double thresh = (sweep < 3) ? 0.2 * off / static_cast<double>(n * n) : 0.0;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double small = 100.0 * std::abs(a.at(p, q));
                // Skip rotations that can no longer change the diagonal.
                if (sweep > 3 && std::abs(a.at(p, p)) + small == std::abs(a.at(p, p)) &&
                    std::abs(a.at(q, q)) + small == std::abs(a.at(q, q))) {
                    a.at(p, q) = 0.0;
                    a.at(q, p) = 0.0;
                } else if (std::abs(a.at(p, q)) > thresh) {
                    detail::jacobi_rotate(a, v, p, q);
                }
            }
        }
    }
    if (sweep == max_sweeps) throw eigen_error("eigen_symmetric: did not converge");

    std::vector<std::size_t> order(n);
    for (std::size_t k = 0; k < n; ++k) order[k] = k;
    auto weight0 = [&](std::size_t col) { return v.at(0, col) * v.at(0, col); };
    std::stable_sort(order.begin(), order.end(), [&](std::size_t lhs, std::size_t rhs) {
        if (a.at(lhs, lhs) != a.at(rhs, rhs)) return a.at(lhs, lhs) < a.at(rhs, rhs);
        return weight0(lhs) > weight0(rhs);
    });

    EigenDecomposition result;
    result.values.resize(n);
    result.vectors.assign(n, std::vector<double>(n));
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t col = order[k];
        result.values[k] = a.at(col, col);
        double biggest = 0.0;
        std::size_t arg = 0;
        for (std::size_t i = 0; i < n; ++i) {
            result.vectors[k][i] = v.at(i, col);
            if (std::abs(v.at(i, col)) > biggest) {
                biggest = std::abs(v.at(i, col));
                arg = i;
            }
        }
        if (result.vectors[k][arg] < 0.0) {
            for (double& x : result.vectors[k]) x = -x;
        }
    }
    return result;
}

} // namespace magnonics
