#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "aimc/errors.hpp"

namespace aimc::linalg {

// Column-free dense symmetric positive definite solver (Cholesky). Small
// systems only; the probe solves are at most tile-row sized.
class SpdSolver {
public:
    // a: n x n row-major, symmetric. Throws NumericalError if not positive
    // definite to working precision.
    SpdSolver(std::vector<double> a, std::size_t n) : l_(std::move(a)), n_(n) {
        for (std::size_t j = 0; j < n_; ++j) {
            double d = l_[j * n_ + j];
            for (std::size_t k = 0; k < j; ++k) d -= l_[j * n_ + k] * l_[j * n_ + k];
            if (!(d > 0.0) || !std::isfinite(d))
                throw NumericalError("matrix not positive definite (pivot " + std::to_string(j) +
                                     " = " + std::to_string(d) + ")");
            const double lj = std::sqrt(d);
            l_[j * n_ + j] = lj;
            for (std::size_t i = j + 1; i < n_; ++i) {
                double s = l_[i * n_ + j];
                for (std::size_t k = 0; k < j; ++k) s -= l_[i * n_ + k] * l_[j * n_ + k];
                l_[i * n_ + j] = s / lj;
            }
        }
    }

    // Solves A x = b in place.
    void solve(std::vector<double>& b) const {
        for (std::size_t i = 0; i < n_; ++i) {
            double s = b[i];
            for (std::size_t k = 0; k < i; ++k) s -= l_[i * n_ + k] * b[k];
            b[i] = s / l_[i * n_ + i];
        }
        for (std::size_t ii = n_; ii-- > 0;) {
            double s = b[ii];
            for (std::size_t k = ii + 1; k < n_; ++k) s -= l_[k * n_ + ii] * b[k];
            b[ii] = s / l_[ii * n_ + ii];
        }
    }

    // Ratio of largest to smallest Cholesky pivot squared; cheap conditioning
    // estimate reported when a solve is rejected upstream.
    double condition_estimate() const {
        double lo = l_[0], hi = l_[0];
        for (std::size_t j = 1; j < n_; ++j) {
            lo = std::min(lo, l_[j * n_ + j]);
            hi = std::max(hi, l_[j * n_ + j]);
        }
        return (hi / lo) * (hi / lo);
    }

private:
    std::vector<double> l_;
    std::size_t n_;
};

// Least squares via ridge-regularized normal equations:
//   min_W || X W - Y ||_2  ->  (X^T X + ridge I) W = X^T Y
// X: b x n, Y: b x m, returns W: n x m (row-major doubles).
inline std::vector<double> ridge_least_squares(const std::vector<double>& x,
                                               const std::vector<double>& y,
                                               std::size_t b, std::size_t n, std::size_t m,
                                               double ridge) {
    if (b < n) throw ArgumentError("least squares needs at least as many probes as unknowns");
    std::vector<double> xtx(n * n, 0.0);
    for (std::size_t r = 0; r < b; ++r) {
        const double* row = x.data() + r * n;
        for (std::size_t i = 0; i < n; ++i) {
            if (row[i] == 0.0) continue;
            for (std::size_t j = i; j < n; ++j) xtx[i * n + j] += row[i] * row[j];
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < i; ++j) xtx[i * n + j] = xtx[j * n + i];
        xtx[i * n + i] += ridge;
    }
    SpdSolver chol(std::move(xtx), n);
    std::vector<double> w(n * m, 0.0);
    std::vector<double> rhs(n);
    for (std::size_t c = 0; c < m; ++c) {
        std::fill(rhs.begin(), rhs.end(), 0.0);
        for (std::size_t r = 0; r < b; ++r) {
            const double yv = y[r * m + c];
            if (yv == 0.0) continue;
            const double* row = x.data() + r * n;
            for (std::size_t i = 0; i < n; ++i) rhs[i] += row[i] * yv;
        }
        chol.solve(rhs);
        for (std::size_t i = 0; i < n; ++i) w[i * m + c] = rhs[i];
    }
    return w;
}

}  // namespace aimc::linalg
