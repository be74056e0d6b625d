#ifndef NLBVP_LINEAR_ALGEBRA_HPP
#define NLBVP_LINEAR_ALGEBRA_HPP

#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "nlbvp/errors.hpp"

namespace nlbvp {

// Thomas algorithm for tridiagonal systems; lower[0] and upper[n-1] unused.
inline std::vector<double> thomas_solve(std::span<const double> lower,
                                        std::span<const double> diag,
                                        std::span<const double> upper,
                                        std::span<const double> rhs) {
    const std::size_t n = diag.size();
    std::vector<double> c(n), d(n), x(n);
    double piv = diag[0];
    if (piv == 0.0) throw LinearSolveFailure("thomas: zero pivot");
    c[0] = upper[0] / piv;
    d[0] = rhs[0] / piv;
    for (std::size_t i = 1; i < n; ++i) {
        piv = diag[i] - lower[i] * c[i - 1];
        if (piv == 0.0) throw LinearSolveFailure("thomas: zero pivot");
        c[i] = (i + 1 < n ? upper[i] : 0.0) / piv;
        d[i] = (rhs[i] - lower[i] * d[i - 1]) / piv;
    }
    x[n - 1] = d[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) x[i] = d[i] - c[i] * x[i + 1];
    return x;
}

// Jacobi-preconditioned conjugate gradients. matvec must apply an SPD
// operator; diag is its diagonal.
inline std::vector<double> pcg_solve(
    const std::function<void(std::span<const double>, std::span<double>)>& matvec,
    std::span<const double> diag, std::span<const double> rhs, double rel_tol = 1e-12,
    std::size_t max_iters = 0) {
    const std::size_t n = rhs.size();
    if (max_iters == 0) max_iters = 20 * n + 200;
    std::vector<double> x(n, 0.0), r(rhs.begin(), rhs.end()), z(n), p(n), Ap(n);
    double rhs_norm = 0.0;
    for (double v : rhs) rhs_norm += v * v;
    rhs_norm = std::sqrt(rhs_norm);
    if (rhs_norm == 0.0) return x;

    auto precond = [&](const std::vector<double>& in, std::vector<double>& out) {
        for (std::size_t i = 0; i < n; ++i) out[i] = in[i] / diag[i];
    };
    precond(r, z);
    p = z;
    double rz = 0.0;
    for (std::size_t i = 0; i < n; ++i) rz += r[i] * z[i];

    for (std::size_t it = 0; it < max_iters; ++it) {
        matvec(p, Ap);
        double pAp = 0.0;
        for (std::size_t i = 0; i < n; ++i) pAp += p[i] * Ap[i];
        if (pAp <= 0.0) throw LinearSolveFailure("pcg: operator not positive definite");
        double alpha = rz / pAp;
        double rnorm = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            x[i] += alpha * p[i];
            r[i] -= alpha * Ap[i];
            rnorm += r[i] * r[i];
        }
        if (std::sqrt(rnorm) <= rel_tol * rhs_norm) return x;
        precond(r, z);
        double rz_new = 0.0;
        for (std::size_t i = 0; i < n; ++i) rz_new += r[i] * z[i];
        double beta = rz_new / rz;
        rz = rz_new;
        for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
    }
    throw LinearSolveFailure("pcg: stagnation, iteration budget exhausted");
}

// Dense Gaussian elimination with partial pivoting; used by the brute-force
// oracle only.
inline std::vector<double> dense_solve(std::vector<std::vector<double>> a,
                                       std::vector<double> b) {
    const std::size_t n = b.size();
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::fabs(a[r][col]) > std::fabs(a[piv][col])) piv = r;
        if (a[piv][col] == 0.0) throw LinearSolveFailure("dense: singular matrix");
        std::swap(a[col], a[piv]);
        std::swap(b[col], b[piv]);
        for (std::size_t r = col + 1; r < n; ++r) {
            double m = a[r][col] / a[col][col];
            if (m == 0.0) continue;
            for (std::size_t c = col; c < n; ++c) a[r][c] -= m * a[col][c];
            b[r] -= m * b[col];
        }
    }
    std::vector<double> x(n);
    for (std::size_t r = n; r-- > 0;) {
        double s = b[r];
        for (std::size_t c = r + 1; c < n; ++c) s -= a[r][c] * x[c];
        x[r] = s / a[r][r];
    }
    return x;
}

// Simple least squares y ~ a + b*x with coefficient of determination.
struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
};

inline LinearFit least_squares(std::span<const double> xs, std::span<const double> ys) {
    const std::size_t n = xs.size();
    if (n < 2) throw ParameterError("least_squares: need at least two samples");
    double sx = 0, sy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sx += xs[i];
        sy += ys[i];
    }
    double mx = sx / n, my = sy / n;
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
    }
    if (sxx == 0.0) throw ParameterError("least_squares: degenerate abscissa");
    LinearFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    double ss_res = 0, ss_tot = 0;
    for (std::size_t i = 0; i < n; ++i) {
        double pred = fit.intercept + fit.slope * xs[i];
        ss_res += (ys[i] - pred) * (ys[i] - pred);
        ss_tot += (ys[i] - my) * (ys[i] - my);
    }
    fit.r_squared = ss_tot == 0.0 ? 1.0 : 1.0 - ss_res / ss_tot;
    return fit;
}

}  // namespace nlbvp

#endif
