#ifndef NLBVP_NONLOCAL_HPP
#define NLBVP_NONLOCAL_HPP

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "nlbvp/local_solver.hpp"

namespace nlbvp {

// Piecewise-linear (1D) / bilinear (2D) interpolation, exact at nodes.
inline double interpolate_at(const GridFunction& u, const Point& x) {
    const Grid& g = u.grid;
    if (!g.domain.contains_closure(x, 1e-12))
        throw DomainError("interpolation point outside domain closure");
    auto cell = [&](int axis) {
        double h = g.spacing(axis);
        double t = (x[axis] - g.domain.lo[axis]) / h;
        int i = static_cast<int>(std::floor(t));
        i = std::clamp(i, 0, g.n[axis] - 2);
        double frac = std::clamp(t - i, 0.0, 1.0);
        return std::pair<int, double>{i, frac};
    };
    auto [i, fx] = cell(0);
    if (g.domain.dim == 1)
        return (1.0 - fx) * u[g.index(i)] + fx * u[g.index(i + 1)];
    auto [j, fy] = cell(1);
    double v00 = u[g.index(i, j)], v10 = u[g.index(i + 1, j)];
    double v01 = u[g.index(i, j + 1)], v11 = u[g.index(i + 1, j + 1)];
    return (1.0 - fy) * ((1.0 - fx) * v00 + fx * v10) +
           fy * ((1.0 - fx) * v01 + fx * v11);
}

// Tensor-product trapezoidal rule of w(x)*Phi(u(x)) over the grid.
inline double integral_term(const GridFunction& u, const ScalarField& w,
                            const Expression& phi) {
    const Grid& g = u.grid;
    static const std::vector<std::string> phi_var{"s"};
    CompiledExpression cphi = phi.compile(phi_var);
    const int nx = g.n[0], ny = g.n[1];
    double hx = g.spacing(0);
    double hy = g.domain.dim == 2 ? g.spacing(1) : 1.0;
    double sum = 0.0;
    for (int j = 0; j < ny; ++j) {
        double wy = (g.domain.dim == 2 && (j == 0 || j == ny - 1)) ? 0.5 : 1.0;
        for (int i = 0; i < nx; ++i) {
            double wx = (i == 0 || i == nx - 1) ? 0.5 : 1.0;
            std::size_t k = g.index(i, j);
            double val;
            try {
                val = cphi(std::array<double, 1>{u[k]});
            } catch (const EvalError& e) {
                Point p = g.coord(k);
                throw EvalError(std::string(e.what()) + " while evaluating Phi at node (" +
                                std::to_string(p[0]) + ", " + std::to_string(p[1]) + ")");
            }
            sum += wx * wy * w(g.coord(k)) * val;
        }
    }
    return sum * hx * (g.domain.dim == 2 ? hy : 1.0);
}

// B applied to a grid function: interior point values plus the integral term.
inline double apply_functional(const NonlocalFunctional& b, const GridFunction& u) {
    std::vector<double> svals(b.num_points());
    for (std::size_t j = 0; j < b.num_points(); ++j)
        svals[j] = interpolate_at(u, b.points[j]);
    double integral = b.uses_integral() ? integral_term(u, b.weight, b.phi) : 0.0;
    return b.combine(svals, integral);
}

// The scalar fixed-point map: solve the local problem at boundary shift mu,
// then evaluate B on the solution.
inline double evaluate_T(const ProblemSpec& spec, const Grid& grid, double mu,
                         const NewtonConfig& cfg = {},
                         const std::optional<GridFunction>& warm_start = std::nullopt,
                         GridFunction* solution_out = nullptr) {
    GridFunction v = solve_local_dirichlet(spec, grid, mu, cfg, warm_start);
    double t = apply_functional(spec.nonlocal, v);
    if (solution_out) *solution_out = std::move(v);
    return t;
}

// B[h]: the combiner evaluated on the root profile, no PDE solve.
inline double compute_B_of_h(const ProblemSpec& spec, const Grid& grid) {
    const NonlocalFunctional& b = spec.nonlocal;
    const ScalarField& h = spec.nonlinearity.root_profile();
    std::vector<double> svals(b.num_points());
    for (std::size_t j = 0; j < b.num_points(); ++j) svals[j] = h(b.points[j]);
    double integral = 0.0;
    if (b.uses_integral()) {
        GridFunction hf(grid);
        for (std::size_t k = 0; k < grid.size(); ++k) hf[k] = h(grid.coord(k));
        integral = integral_term(hf, b.weight, b.phi);
    }
    return b.combine(svals, integral);
}

// Symmetric-difference Lipschitz estimate of T at mu_center.
inline double estimate_contraction(const ProblemSpec& spec, const Grid& grid,
                                   double mu_center, double probe,
                                   const NewtonConfig& cfg = {}) {
    if (!(probe > 0.0)) throw ParameterError("probe must be positive");
    double tp = evaluate_T(spec, grid, mu_center + probe, cfg);
    double tm = evaluate_T(spec, grid, mu_center - probe, cfg);
    return std::fabs(tp - tm) / (2.0 * probe);
}

enum class FixedPointStrategy { Picard, BracketScan, Auto };
enum class FixedPointStatus { Converged, Diverged, NoRootInBracket };
enum class Stability { Attracting, Repelling, Marginal };

struct FixedPointConfig {
    FixedPointStrategy strategy = FixedPointStrategy::Auto;
    std::optional<double> mu0;      // default B[h]
    double fp_tol = 1e-10;
    int max_iters = 200;
    std::optional<double> bracket;  // Lambda; default 10*(1+|B[h]|)
    int scan_points = 256;
    double divergence_bound = 1e6;
};

struct FixedPointRoot {
    double mu = 0.0;
    GridFunction solution;
    double residual = 0.0;  // |T(mu) - mu|
    Stability stability = Stability::Marginal;
    std::vector<double> iterate_history;
};

struct FixedPointResult {
    std::vector<FixedPointRoot> roots;
    double contraction_estimate = 0.0;
    FixedPointStatus status = FixedPointStatus::NoRootInBracket;
};

namespace detail {

struct TCache {
    const ProblemSpec* spec;
    const Grid* grid;
    const NewtonConfig* cfg;
    std::optional<GridFunction> warm;

    double operator()(double mu, GridFunction* out = nullptr) {
        GridFunction v;
        double t = evaluate_T(*spec, *grid, mu, *cfg, warm, &v);
        warm = v;
        if (out) *out = std::move(v);
        return t;
    }
};

inline Stability classify_stability(TCache& T, double mu_star, double fp_tol) {
    double step = 1e-4 * (1.0 + std::fabs(mu_star));
    double slope = std::fabs(T(mu_star + step) - T(mu_star - step)) / (2.0 * step);
    (void)fp_tol;
    if (slope < 1.0 - 1e-3) return Stability::Attracting;
    if (slope > 1.0 + 1e-3) return Stability::Repelling;
    return Stability::Marginal;
}

}  // namespace detail

// Picard iteration (contracting regimes) and bracketed root scan of
// F(mu) = T(mu) - mu over [-Lambda, Lambda]; Auto runs Picard first and
// falls back to the scan on divergence. Roots are returned ascending in mu.
inline FixedPointResult fixed_point_solve(const ProblemSpec& spec, const Grid& grid,
                                          const FixedPointConfig& fp = {},
                                          const NewtonConfig& newton = {}) {
    spec.validate(grid);
    const double b_of_h = compute_B_of_h(spec, grid);
    const double mu0 = fp.mu0 ? *fp.mu0 : b_of_h;
    const double lam = fp.bracket ? *fp.bracket : 10.0 * (1.0 + std::fabs(b_of_h));
    if (!(lam > std::fabs(b_of_h)))
        throw ParameterError("bracket Lambda must exceed |B[h]|");

    detail::TCache T{&spec, &grid, &newton, std::nullopt};
    FixedPointResult result;
    {
        detail::TCache probe_cache = T;
        double probe = 0.1 * (1.0 + std::fabs(mu0));
        double tp = probe_cache(mu0 + probe);
        double tm = probe_cache(mu0 - probe);
        result.contraction_estimate = std::fabs(tp - tm) / (2.0 * probe);
    }

    auto add_root = [&](double mu_star, std::vector<double> history) {
        for (const FixedPointRoot& r : result.roots)
            if (std::fabs(r.mu - mu_star) <= 1e3 * fp.fp_tol) return;
        FixedPointRoot root;
        root.mu = mu_star;
        // fresh solve: a warm start whose initial residual is already under
        // the Newton tolerance would be returned unchanged, which is too
        // coarse for the residual test near a cusp of T
        double t = evaluate_T(spec, grid, mu_star, newton, std::nullopt, &root.solution);
        root.residual = std::fabs(t - mu_star);
        if (root.residual > fp.fp_tol * (1.0 + std::fabs(mu_star))) return;
        root.stability = detail::classify_stability(T, mu_star, fp.fp_tol);
        root.iterate_history = std::move(history);
        result.roots.push_back(std::move(root));
    };

    auto run_picard = [&]() -> bool {
        std::vector<double> history{mu0};
        double mu = mu0;
        double prev_inc = std::numeric_limits<double>::infinity();
        for (int it = 0; it < fp.max_iters; ++it) {
            double next = T(mu);
            history.push_back(next);
            double inc = std::fabs(next - mu);
            if (inc <= fp.fp_tol * (1.0 + std::fabs(mu))) {
                add_root(next, std::move(history));
                return true;
            }
            if (std::fabs(next) > fp.divergence_bound) return false;
            prev_inc = inc;
            mu = next;
        }
        (void)prev_inc;
        return false;
    };

    auto run_scan = [&]() {
        const int np = std::max(fp.scan_points, 3);
        std::vector<double> mus(np), fs(np);
        for (int i = 0; i < np; ++i) {
            mus[i] = -lam + 2.0 * lam * i / (np - 1);
            fs[i] = T(mus[i]) - mus[i];
        }
        auto F = [&](double mu) { return T(mu) - mu; };
        // Sign-change brackets, refined by bisection.
        for (int i = 0; i + 1 < np; ++i) {
            if (fs[i] == 0.0) {
                add_root(mus[i], {mus[i]});
                continue;
            }
            if (fs[i] * fs[i + 1] < 0.0) {
                double a = mus[i], b = mus[i + 1], fa = fs[i];
                std::vector<double> history;
                while (b - a > fp.fp_tol * (1.0 + std::min(std::fabs(a), std::fabs(b)))) {
                    double mid = 0.5 * (a + b);
                    history.push_back(mid);
                    double fm = F(mid);
                    if (fm == 0.0) {
                        a = b = mid;
                        break;
                    }
                    if (fa * fm < 0.0) {
                        b = mid;
                    } else {
                        a = mid;
                        fa = fm;
                    }
                }
                add_root(0.5 * (a + b), std::move(history));
            }
        }
        if (fs[np - 1] == 0.0) add_root(mus[np - 1], {mus[np - 1]});
        // Tangency roots: |F| can dip to zero inside a cell without a sign
        // change at the endpoints (e.g. the trivial branch when T has a
        // square-root cusp). Probe the midpoint of cells whose endpoint
        // values are small enough for a hidden root, then refine a dip by
        // golden-section minimization of |F|; accept only if |F| reaches
        // the fixed-point tolerance.
        for (int i = 0; i + 1 < np; ++i) {
            if (fs[i] * fs[i + 1] < 0.0 || fs[i] == 0.0 || fs[i + 1] == 0.0) continue;
            double width = mus[i + 1] - mus[i];
            double fmin = std::min(std::fabs(fs[i]), std::fabs(fs[i + 1]));
            if (fmin > width) continue;
            double mid = 0.5 * (mus[i] + mus[i + 1]);
            double fmid = F(mid);
            if (fs[i] * fmid < 0.0) {
                // hidden sign change; bisect both halves toward it
                double a = mus[i], b = mid, fa = fs[i];
                std::vector<double> history;
                while (b - a > fp.fp_tol * (1.0 + std::min(std::fabs(a), std::fabs(b)))) {
                    double m = 0.5 * (a + b);
                    history.push_back(m);
                    double fm = F(m);
                    if (fa * fm <= 0.0)
                        b = m;
                    else {
                        a = m;
                        fa = fm;
                    }
                }
                add_root(0.5 * (a + b), std::move(history));
                continue;
            }
            if (std::fabs(fmid) >= fmin) continue;  // no dip
            double a = mus[i], b = mus[i + 1];
            const double gr = 0.6180339887498949;
            double c = b - gr * (b - a), d = a + gr * (b - a);
            double fc = std::fabs(F(c)), fd = std::fabs(F(d));
            std::vector<double> history;
            for (int it = 0; it < 300 && (b - a) > 1e-22 * (1.0 + lam); ++it) {
                if (fc < fd) {
                    b = d;
                    d = c;
                    fd = fc;
                    c = b - gr * (b - a);
                    fc = std::fabs(F(c));
                } else {
                    a = c;
                    c = d;
                    fc = fd;
                    d = a + gr * (b - a);
                    fd = std::fabs(F(d));
                }
                history.push_back(0.5 * (a + b));
            }
            double mu_star = 0.5 * (a + b);
            double f_fresh = evaluate_T(spec, grid, mu_star, newton) - mu_star;
            if (std::fabs(f_fresh) <= fp.fp_tol * (1.0 + std::fabs(mu_star)))
                add_root(mu_star, std::move(history));
        }
    };

    bool picard_ok = false;
    switch (fp.strategy) {
        case FixedPointStrategy::Picard:
            picard_ok = run_picard();
            result.status = picard_ok ? FixedPointStatus::Converged : FixedPointStatus::Diverged;
            break;
        case FixedPointStrategy::BracketScan:
            run_scan();
            result.status = result.roots.empty() ? FixedPointStatus::NoRootInBracket
                                                 : FixedPointStatus::Converged;
            break;
        case FixedPointStrategy::Auto:
            picard_ok = run_picard();
            if (picard_ok) {
                result.status = FixedPointStatus::Converged;
            } else {
                run_scan();
                result.status = result.roots.empty() ? FixedPointStatus::NoRootInBracket
                                                     : FixedPointStatus::Converged;
            }
            break;
    }
    std::sort(result.roots.begin(), result.roots.end(),
              [](const FixedPointRoot& a, const FixedPointRoot& b) { return a.mu < b.mu; });
    return result;
}

}  // namespace nlbvp

#endif
