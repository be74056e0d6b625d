#ifndef NLBVP_NONLOCAL_FUNCTIONAL_HPP
#define NLBVP_NONLOCAL_FUNCTIONAL_HPP

#include <array>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nlbvp/expression.hpp"
#include "nlbvp/fields.hpp"
#include "nlbvp/geometry.hpp"

namespace nlbvp {

enum class CombinerKind {
    LinearMultipoint,   // sum beta_j * s_j
    LinearIntegral,     // the integral term, Phi = identity
    Affine,             // sum beta_j * s_j + gamma * I
    GeneralExpression,  // expression in s1..sm and I
};

// Boundary sides, used for the application mask sigma. 1D uses the first
// two entries (x low / x high).
enum BoundarySide { SideXLo = 0, SideXHi = 1, SideYLo = 2, SideYHi = 3 };

// The boundary operator B(u(xi_1),...,u(xi_m), integral w*Phi(u)).
class NonlocalFunctional {
  public:
    std::vector<Point> points;
    CombinerKind kind = CombinerKind::LinearMultipoint;
    std::vector<double> beta;
    double gamma = 0.0;
    std::optional<Expression> general;  // variables s1..sm and I
    ScalarField weight = ScalarField::constant(0.0);
    Expression phi = Expression::variable("s");
    std::array<bool, 4> sigma{true, true, true, true};

    static NonlocalFunctional multipoint(std::vector<Point> xi, std::vector<double> betas) {
        NonlocalFunctional b;
        b.kind = CombinerKind::LinearMultipoint;
        b.points = std::move(xi);
        b.beta = std::move(betas);
        return b;
    }

    static NonlocalFunctional integral(ScalarField w) {
        NonlocalFunctional b;
        b.kind = CombinerKind::LinearIntegral;
        b.weight = std::move(w);
        return b;
    }

    std::size_t num_points() const { return points.size(); }

    bool uses_integral() const {
        if (kind == CombinerKind::LinearIntegral) return true;
        if (kind == CombinerKind::Affine) return gamma != 0.0;
        if (kind == CombinerKind::GeneralExpression) {
            const auto& vars = general->variables();
            return std::find(vars.begin(), vars.end(), "I") != vars.end();
        }
        return false;
    }

    void validate(const Domain& domain) const {
        for (const Point& p : points) {
            if (!(dist_to_boundary(domain, p) > 0.0))
                throw DomainError("nonlocal point must be strictly interior");
        }
        for (std::size_t a = 0; a < points.size(); ++a)
            for (std::size_t b = a + 1; b < points.size(); ++b)
                if (points[a] == points[b])
                    throw DomainError("nonlocal points must be pairwise distinct");
        if (kind == CombinerKind::LinearMultipoint || kind == CombinerKind::Affine) {
            if (beta.size() != points.size())
                throw ParameterError("beta count must match point count");
        }
        if (kind == CombinerKind::GeneralExpression && !general)
            throw ParameterError("general combiner needs an expression");
    }

    double combine(std::span<const double> point_values, double integral_value) const {
        switch (kind) {
            case CombinerKind::LinearMultipoint: {
                double s = 0.0;
                for (std::size_t j = 0; j < beta.size(); ++j) s += beta[j] * point_values[j];
                return s;
            }
            case CombinerKind::LinearIntegral:
                return integral_value;
            case CombinerKind::Affine: {
                double s = gamma * integral_value;
                for (std::size_t j = 0; j < beta.size(); ++j) s += beta[j] * point_values[j];
                return s;
            }
            case CombinerKind::GeneralExpression: {
                std::vector<std::pair<std::string, double>> env;
                env.reserve(point_values.size() + 1);
                for (std::size_t j = 0; j < point_values.size(); ++j)
                    env.emplace_back("s" + std::to_string(j + 1), point_values[j]);
                env.emplace_back("I", integral_value);
                return general->eval(env);
            }
        }
        throw ParameterError("bad combiner kind");
    }

    // Global unless Phi or the combiner expression leaves the affine /
    // bounded-derivative catalog.
    LipschitzClass lipschitz_class() const {
        switch (kind) {
            case CombinerKind::LinearMultipoint:
                return LipschitzClass::Global;
            case CombinerKind::LinearIntegral:
            case CombinerKind::Affine:
                return phi.lipschitz_class();
            case CombinerKind::GeneralExpression: {
                LipschitzClass c = general->lipschitz_class();
                if (c == LipschitzClass::Local) return c;
                return uses_integral() ? phi.lipschitz_class() : LipschitzClass::Global;
            }
        }
        return LipschitzClass::Local;
    }

    bool sigma_at(const Domain& domain, const Point& p, double eps) const {
        bool any = false, on_boundary = false;
        auto check = [&](int axis, double edge, BoundarySide side) {
            if (std::fabs(p[axis] - edge) <= eps) {
                on_boundary = true;
                if (sigma[side]) any = true;
            }
        };
        check(0, domain.lo[0], SideXLo);
        check(0, domain.hi[0], SideXHi);
        if (domain.dim == 2) {
            check(1, domain.lo[1], SideYLo);
            check(1, domain.hi[1], SideYHi);
        }
        if (!on_boundary) throw DomainError("sigma queried off the boundary");
        return any;  // corners: active if any touching side is masked in
    }
};

}  // namespace nlbvp

#endif
