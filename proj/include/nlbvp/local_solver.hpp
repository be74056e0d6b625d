#ifndef NLBVP_LOCAL_SOLVER_HPP
#define NLBVP_LOCAL_SOLVER_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <utility>
#include <vector>

#include "nlbvp/fields.hpp"
#include "nlbvp/geometry.hpp"
#include "nlbvp/linear_algebra.hpp"
#include "nlbvp/nonlocal_functional.hpp"

namespace nlbvp {

// Full continuous problem: -div(D grad u) + lambda f(x,u) = 0 in Omega,
// u = g + B(...) on the boundary.
struct ProblemSpec {
    Domain domain = Domain::interval(0.0, 1.0);
    ScalarField diffusion = ScalarField::constant(1.0);
    Nonlinearity nonlinearity;
    ScalarField boundary_data = ScalarField::constant(0.0);
    double lambda = 1.0;
    NonlocalFunctional nonlocal;

    void validate(const Grid& grid) const {
        if (!(lambda > 0.0)) throw ParameterError("lambda must be positive");
        diffusion.check_positive_on(grid);
        nonlocal.validate(domain);
    }
};

struct GridFunction {
    Grid grid;
    std::vector<double> values;

    GridFunction() = default;
    explicit GridFunction(const Grid& g, double fill = 0.0)
        : grid(g), values(g.size(), fill) {}

    double& operator[](std::size_t k) { return values[k]; }
    double operator[](std::size_t k) const { return values[k]; }

    double max_abs() const {
        double m = 0.0;
        for (double v : values) m = std::max(m, std::fabs(v));
        return m;
    }

    bool all_finite() const {
        for (double v : values)
            if (!std::isfinite(v)) return false;
        return true;
    }
};

struct NewtonConfig {
    double residual_tol = 0.0;  // 0 means the default 1e-10 * max(1, lambda*theta0)
    int max_iters = 50;
    double backtrack_factor = 0.5;
    double min_step = 9.5367431640625e-7;  // 2^-20
    double cg_rel_tol = 1e-12;

    double resolved_tol(double lambda, double theta0) const {
        if (residual_tol > 0.0) return residual_tol;
        return 1e-10 * std::max(1.0, lambda * theta0);
    }
};

struct NonConvergence : Error {
    NonConvergence(std::string msg, GridFunction iterate, double residual)
        : Error(std::move(msg)), last_iterate(std::move(iterate)), residual_norm(residual) {}
    GridFunction last_iterate;
    double residual_norm;
};

// Second-order finite-difference system for the auxiliary Dirichlet problem
// with boundary data g + sigma*mu. Dirichlet rows are kept as identity rows.
class DiscreteSystem {
  public:
    DiscreteSystem(const ProblemSpec& spec, const Grid& grid, double mu)
        : spec_(&spec), grid_(grid), mu_(mu) {
        const int nx = grid.n[0], ny = grid.n[1];
        const int dim = grid.domain.dim;
        hx_ = grid.spacing(0);
        hy_ = dim == 2 ? grid.spacing(1) : 1.0;

        coords_.resize(grid.size());
        for (std::size_t k = 0; k < grid.size(); ++k) coords_[k] = grid.coord(k);

        // Arithmetic midpoint sampling of D on cell faces.
        dx_face_.resize(static_cast<std::size_t>(nx - 1) * ny);
        for (int j = 0; j < ny; ++j)
            for (int i = 0; i + 1 < nx; ++i) {
                Point mid = coords_[grid.index(i, j)];
                mid[0] += hx_ / 2.0;
                dx_face_[static_cast<std::size_t>(j) * (nx - 1) + i] = spec.diffusion(mid);
            }
        if (dim == 2) {
            dy_face_.resize(static_cast<std::size_t>(nx) * (ny - 1));
            for (int j = 0; j + 1 < ny; ++j)
                for (int i = 0; i < nx; ++i) {
                    Point mid = coords_[grid.index(i, j)];
                    mid[1] += hy_ / 2.0;
                    dy_face_[static_cast<std::size_t>(j) * nx + i] = spec.diffusion(mid);
                }
        }

        boundary_value_.resize(grid.size(), 0.0);
        for (std::size_t k = 0; k < grid.size(); ++k) {
            if (!grid.is_boundary(k)) continue;
            double s = sigma_by_index(k) ? 1.0 : 0.0;
            boundary_value_[k] = spec.boundary_data(coords_[k]) + s * mu_;
        }
    }

    const Grid& grid() const { return grid_; }
    double mu() const { return mu_; }
    double boundary_value(std::size_t k) const { return boundary_value_[k]; }

    double dxf(int i, int j) const {
        return dx_face_[static_cast<std::size_t>(j) * (grid_.n[0] - 1) + i];
    }
    double dyf(int i, int j) const {
        return dy_face_[static_cast<std::size_t>(j) * grid_.n[0] + i];
    }

    void residual(const std::vector<double>& v, std::vector<double>& out) const {
        const int nx = grid_.n[0], ny = grid_.n[1];
        const bool two_d = grid_.domain.dim == 2;
        const double ihx2 = 1.0 / (hx_ * hx_), ihy2 = 1.0 / (hy_ * hy_);
        out.resize(v.size());
        for (int j = 0; j < ny; ++j) {
            for (int i = 0; i < nx; ++i) {
                std::size_t k = grid_.index(i, j);
                if (grid_.is_boundary(k)) {
                    out[k] = v[k] - boundary_value_[k];
                    continue;
                }
                double r = -(dxf(i, j) * (v[k + 1] - v[k]) -
                             dxf(i - 1, j) * (v[k] - v[k - 1])) * ihx2;
                if (two_d)
                    r += -(dyf(i, j) * (v[k + nx] - v[k]) -
                           dyf(i, j - 1) * (v[k] - v[k - nx])) * ihy2;
                r += spec_->lambda * spec_->nonlinearity.f(coords_[k], v[k]);
                out[k] = r;
            }
        }
    }

    // Diagonal of the Jacobian at state v (identity on Dirichlet rows).
    void jacobian_diag(const std::vector<double>& v, std::vector<double>& diag) const {
        const int nx = grid_.n[0], ny = grid_.n[1];
        const bool two_d = grid_.domain.dim == 2;
        const double ihx2 = 1.0 / (hx_ * hx_), ihy2 = 1.0 / (hy_ * hy_);
        diag.resize(v.size());
        for (int j = 0; j < ny; ++j) {
            for (int i = 0; i < nx; ++i) {
                std::size_t k = grid_.index(i, j);
                if (grid_.is_boundary(k)) {
                    diag[k] = 1.0;
                    continue;
                }
                double d = (dxf(i, j) + dxf(i - 1, j)) * ihx2;
                if (two_d) d += (dyf(i, j) + dyf(i, j - 1)) * ihy2;
                d += spec_->lambda * spec_->nonlinearity.f_s(coords_[k], v[k]);
                diag[k] = d;
            }
        }
    }

    // Jacobian-vector product of the full system (Dirichlet rows are
    // identity; their couplings into interior rows are included).
    void jacobian_apply(const std::vector<double>& v, const std::vector<double>& p,
                        std::vector<double>& out) const {
        std::vector<double> diag;
        jacobian_diag(v, diag);
        const int nx = grid_.n[0], ny = grid_.n[1];
        const bool two_d = grid_.domain.dim == 2;
        const double ihx2 = 1.0 / (hx_ * hx_), ihy2 = 1.0 / (hy_ * hy_);
        out.resize(p.size());
        for (int j = 0; j < ny; ++j) {
            for (int i = 0; i < nx; ++i) {
                std::size_t k = grid_.index(i, j);
                if (grid_.is_boundary(k)) {
                    out[k] = p[k];
                    continue;
                }
                double r = diag[k] * p[k];
                r -= dxf(i, j) * ihx2 * p[k + 1];
                r -= dxf(i - 1, j) * ihx2 * p[k - 1];
                if (two_d) {
                    r -= dyf(i, j) * ihy2 * p[k + nx];
                    r -= dyf(i, j - 1) * ihy2 * p[k - nx];
                }
                out[k] = r;
            }
        }
    }

    // Newton correction J delta = -R. Thomas in 1D; in 2D the Dirichlet
    // unknowns are eliminated first and the SPD interior block goes to CG.
    std::vector<double> newton_step(const std::vector<double>& v,
                                    const std::vector<double>& resid,
                                    const NewtonConfig& cfg) const {
        const int nx = grid_.n[0], ny = grid_.n[1];
        if (grid_.domain.dim == 1) {
            std::vector<double> lower(nx, 0.0), diag(nx), upper(nx, 0.0), rhs(nx);
            jacobian_diag(v, diag);
            const double ihx2 = 1.0 / (hx_ * hx_);
            for (int i = 0; i < nx; ++i) {
                rhs[i] = -resid[i];
                if (i == 0 || i == nx - 1) continue;
                lower[i] = -dxf(i - 1, 0) * ihx2;
                upper[i] = -dxf(i, 0) * ihx2;
            }
            return thomas_solve(lower, diag, upper, rhs);
        }

        std::vector<double> diag;
        jacobian_diag(v, diag);
        std::vector<std::size_t> interior;
        interior.reserve(grid_.size());
        for (std::size_t k = 0; k < grid_.size(); ++k)
            if (!grid_.is_boundary(k)) interior.push_back(k);

        std::vector<double> delta(grid_.size(), 0.0);
        for (std::size_t k = 0; k < grid_.size(); ++k)
            if (grid_.is_boundary(k)) delta[k] = -resid[k];

        const double ihx2 = 1.0 / (hx_ * hx_), ihy2 = 1.0 / (hy_ * hy_);
        std::vector<double> rhs(interior.size()), idiag(interior.size());
        for (std::size_t t = 0; t < interior.size(); ++t) {
            std::size_t k = interior[t];
            int i = static_cast<int>(k % nx), j = static_cast<int>(k / nx);
            double b = -resid[k];
            auto couple = [&](std::size_t nb, double coeff) {
                if (grid_.is_boundary(nb)) b -= coeff * delta[nb];
            };
            couple(k + 1, -dxf(i, j) * ihx2);
            couple(k - 1, -dxf(i - 1, j) * ihx2);
            couple(k + nx, -dyf(i, j) * ihy2);
            couple(k - nx, -dyf(i, j - 1) * ihy2);
            rhs[t] = b;
            idiag[t] = diag[k];
        }

        std::vector<std::size_t> slot(grid_.size(), static_cast<std::size_t>(-1));
        for (std::size_t t = 0; t < interior.size(); ++t) slot[interior[t]] = t;

        auto matvec = [&](std::span<const double> p, std::span<double> out) {
            for (std::size_t t = 0; t < interior.size(); ++t) {
                std::size_t k = interior[t];
                int i = static_cast<int>(k % nx), j = static_cast<int>(k / nx);
                double r = idiag[t] * p[t];
                auto add = [&](std::size_t nb, double coeff) {
                    std::size_t s = slot[nb];
                    if (s != static_cast<std::size_t>(-1)) r += coeff * p[s];
                };
                add(k + 1, -dxf(i, j) * ihx2);
                add(k - 1, -dxf(i - 1, j) * ihx2);
                add(k + nx, -dyf(i, j) * ihy2);
                add(k - nx, -dyf(i, j - 1) * ihy2);
                out[t] = r;
            }
        };
        std::vector<double> sol = pcg_solve(matvec, idiag, rhs, cfg.cg_rel_tol);
        for (std::size_t t = 0; t < interior.size(); ++t) delta[interior[t]] = sol[t];
        return delta;
    }

    // Dense Jacobian for the brute-force oracle.
    std::vector<std::vector<double>> dense_jacobian(const std::vector<double>& v) const {
        const int nx = grid_.n[0];
        const bool two_d = grid_.domain.dim == 2;
        const double ihx2 = 1.0 / (hx_ * hx_), ihy2 = 1.0 / (hy_ * hy_);
        std::vector<double> diag;
        jacobian_diag(v, diag);
        std::vector<std::vector<double>> a(grid_.size(),
                                           std::vector<double>(grid_.size(), 0.0));
        for (std::size_t k = 0; k < grid_.size(); ++k) {
            a[k][k] = diag[k];
            if (grid_.is_boundary(k)) continue;
            int i = static_cast<int>(k % nx), j = static_cast<int>(k / nx);
            a[k][k + 1] = -dxf(i, j) * ihx2;
            a[k][k - 1] = -dxf(i - 1, j) * ihx2;
            if (two_d) {
                a[k][k + nx] = -dyf(i, j) * ihy2;
                a[k][k - nx] = -dyf(i, j - 1) * ihy2;
            }
        }
        return a;
    }

    bool sigma_by_index(std::size_t k) const {
        const int nx = grid_.n[0], ny = grid_.n[1];
        int i = static_cast<int>(k % nx), j = static_cast<int>(k / nx);
        const auto& s = spec_->nonlocal.sigma;
        bool any = false;
        if (i == 0 && s[SideXLo]) any = true;
        if (i == nx - 1 && s[SideXHi]) any = true;
        if (grid_.domain.dim == 2) {
            if (j == 0 && s[SideYLo]) any = true;
            if (j == ny - 1 && s[SideYHi]) any = true;
        }
        return any;
    }

    const ProblemSpec& spec() const { return *spec_; }

  private:
    const ProblemSpec* spec_;
    Grid grid_;
    double mu_;
    double hx_, hy_;
    std::vector<Point> coords_;
    std::vector<double> dx_face_, dy_face_;
    std::vector<double> boundary_value_;
};

inline DiscreteSystem discretize(const ProblemSpec& spec, const Grid& grid, double mu) {
    return DiscreteSystem(spec, grid, mu);
}

namespace detail {

inline double inf_norm(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::fabs(x));
    return m;
}

template <typename StepFn>
GridFunction newton_iterate(const DiscreteSystem& sys, const NewtonConfig& cfg,
                            const std::optional<GridFunction>& warm_start, StepFn step) {
    const Grid& grid = sys.grid();
    const ProblemSpec& spec = sys.spec();
    GridFunction v(grid);
    if (warm_start) {
        if (warm_start->grid.n != grid.n)
            throw ParameterError("warm start grid mismatch");
        v.values = warm_start->values;
    } else {
        for (std::size_t k = 0; k < grid.size(); ++k)
            v[k] = spec.nonlinearity.root_profile()(grid.coord(k));
    }
    for (std::size_t k = 0; k < grid.size(); ++k)
        if (grid.is_boundary(k)) v[k] = sys.boundary_value(k);

    const double tol = cfg.resolved_tol(spec.lambda, spec.nonlinearity.theta0());
    // Residual entries are dominated by the D/h^2 stencil terms, so the
    // attainable residual scales with the stencil magnitude times the iterate.
    // Accept a stalled iterate once it reaches that roundoff floor.
    double inv_h2 = 1.0 / (grid.spacing(0) * grid.spacing(0));
    if (grid.n[1] > 1) inv_h2 += 1.0 / (grid.spacing(1) * grid.spacing(1));
    const double stiffness = spec.lambda * std::max(1.0, spec.nonlinearity.theta0()) +
                             4.0 * spec.diffusion.max_abs_on(grid) * inv_h2;
    auto floor_tol = [&](const GridFunction& w) {
        return tol + 1e3 * std::numeric_limits<double>::epsilon() * stiffness *
                         (1.0 + w.max_abs());
    };

    std::vector<double> resid, trial_resid;
    sys.residual(v.values, resid);
    double rnorm = inf_norm(resid);

    for (int it = 0; it < cfg.max_iters; ++it) {
        if (rnorm <= tol) {
            if (!v.all_finite()) throw NonConvergence("non-finite iterate", v, rnorm);
            return v;
        }
        std::vector<double> delta = step(v.values, resid);
        double t = 1.0;
        std::vector<double> trial(v.values.size());
        double trial_norm = rnorm;
        while (true) {
            for (std::size_t k = 0; k < trial.size(); ++k)
                trial[k] = v.values[k] + t * delta[k];
            sys.residual(trial, trial_resid);
            trial_norm = inf_norm(trial_resid);
            if (trial_norm <= (1.0 - 1e-4 * t) * rnorm || t <= cfg.min_step) break;
            t *= cfg.backtrack_factor;
        }
        if (trial_norm >= rnorm) {
            // the line search made no progress, so this is the attainable floor
            if (rnorm <= floor_tol(v) && v.all_finite()) return v;
            throw NonConvergence(
                "Newton stalled, residual " + std::to_string(rnorm), v, rnorm);
        }
        v.values = trial;
        resid = trial_resid;
        rnorm = trial_norm;
    }
    if (rnorm <= floor_tol(v) && v.all_finite()) return v;
    throw NonConvergence("Newton iterations exhausted, residual " + std::to_string(rnorm),
                         v, rnorm);
}

}  // namespace detail

// Damped Newton solve of the auxiliary Dirichlet problem; Thomas in 1D,
// Jacobi-preconditioned CG on the interior block in 2D.
inline GridFunction solve_local_dirichlet(
    const ProblemSpec& spec, const Grid& grid, double mu, const NewtonConfig& cfg = {},
    const std::optional<GridFunction>& warm_start = std::nullopt) {
    DiscreteSystem sys = discretize(spec, grid, mu);
    return detail::newton_iterate(sys, cfg, warm_start,
                                  [&](const std::vector<double>& v,
                                      const std::vector<double>& r) {
                                      return sys.newton_step(v, r, cfg);
                                  });
}

// Same discrete system solved with dense LU Newton; verification oracle for
// small grids only.
inline GridFunction solve_dense_oracle(const ProblemSpec& spec, const Grid& grid, double mu,
                                       const NewtonConfig& cfg = {}) {
    if (grid.size() > 2000) throw ParameterError("dense oracle limited to 2000 nodes");
    DiscreteSystem sys = discretize(spec, grid, mu);
    return detail::newton_iterate(
        sys, cfg, std::nullopt,
        [&](const std::vector<double>& v, const std::vector<double>& r) {
            std::vector<double> rhs(r.size());
            for (std::size_t k = 0; k < r.size(); ++k) rhs[k] = -r[k];
            return dense_solve(sys.dense_jacobian(v), rhs);
        });
}

// Smallest power-of-two-plus-one resolution whose spacing resolves the
// O(1/sqrt(lambda)) boundary layer with nodes_per_layer nodes, clamped.
inline std::array<int, 2> recommended_resolution(const Domain& domain, double lambda,
                                                 int nodes_per_layer = 10) {
    if (!(lambda > 0.0)) throw ParameterError("lambda must be positive");
    const int nmin = 65;
    const int nmax = domain.dim == 1 ? 8193 : 2049;
    std::array<int, 2> out{1, 1};
    double target = 1.0 / (nodes_per_layer * std::sqrt(lambda));
    for (int a = 0; a < domain.dim; ++a) {
        int n = nmin;
        while (n < nmax && domain.length(a) / (n - 1) > target) n = (n - 1) * 2 + 1;
        out[a] = std::min(n, nmax);
    }
    return out;
}

}  // namespace nlbvp

#endif
