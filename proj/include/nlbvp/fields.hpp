#ifndef NLBVP_FIELDS_HPP
#define NLBVP_FIELDS_HPP

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "nlbvp/expression.hpp"
#include "nlbvp/geometry.hpp"

namespace nlbvp {

// Scalar coefficient field over the domain, defined by an expression in x
// (and y in 2D).
class ScalarField {
  public:
    ScalarField() : ScalarField(Expression::literal(0.0), false) {}

    explicit ScalarField(Expression expr, bool declared_positive = false)
        : expr_(std::move(expr)),
          declared_positive_(declared_positive),
          compiled_(expr_.compile(slot_names())) {}

    static ScalarField parse(std::string_view src, bool declared_positive = false) {
        static const std::vector<std::string> allowed{"x", "y"};
        return ScalarField(Expression::parse(src, allowed), declared_positive);
    }

    static ScalarField constant(double v) {
        return ScalarField(Expression::literal(v), v > 0.0);
    }

    double operator()(const Point& p) const {
        return compiled_(std::array<double, 2>{p[0], p[1]});
    }

    bool declared_positive() const { return declared_positive_; }
    const Expression& expr() const { return expr_; }

    // Positivity is checked by sampling every grid node.
    void check_positive_on(const Grid& g) const {
        for (std::size_t k = 0; k < g.size(); ++k)
            if (!((*this)(g.coord(k)) > 0.0))
                throw DomainError("field declared positive is <= 0 at a grid node");
    }

    double max_abs_on(const Grid& g) const {
        double m = 0.0;
        for (std::size_t k = 0; k < g.size(); ++k)
            m = std::max(m, std::fabs((*this)(g.coord(k))));
        return m;
    }

  private:
    static std::span<const std::string> slot_names() {
        static const std::vector<std::string> names{"x", "y"};
        return names;
    }

    Expression expr_;
    bool declared_positive_;
    CompiledExpression compiled_;
};

// Nonlinearity f(x,s) with explicit partial derivative f_s, the declared
// monotonicity constant theta0, and the root profile h with f(x,h(x)) = 0.
class Nonlinearity {
  public:
    Nonlinearity()
        : Nonlinearity(Expression::variable("s"), Expression::literal(1.0), 1.0,
                       ScalarField::constant(0.0)) {}

    Nonlinearity(Expression f, Expression f_s, double theta0, ScalarField root_profile)
        : f_(std::move(f)),
          f_s_(std::move(f_s)),
          theta0_(theta0),
          h_(std::move(root_profile)),
          cf_(f_.compile(slot_names())),
          cfs_(f_s_.compile(slot_names())) {
        if (!(theta0_ > 0.0)) throw ParameterError("theta0 must be positive");
    }

    static Nonlinearity parse(std::string_view f_src, std::string_view fs_src, double theta0,
                              const ScalarField& h) {
        static const std::vector<std::string> allowed{"x", "y", "s"};
        return Nonlinearity(Expression::parse(f_src, allowed),
                            Expression::parse(fs_src, allowed), theta0, h);
    }

    double f(const Point& p, double s) const {
        return cf_(std::array<double, 3>{p[0], p[1], s});
    }

    double f_s(const Point& p, double s) const {
        return cfs_(std::array<double, 3>{p[0], p[1], s});
    }

    double theta0() const { return theta0_; }
    const ScalarField& root_profile() const { return h_; }
    const Expression& f_expr() const { return f_; }
    const Expression& f_s_expr() const { return f_s_; }

  private:
    static std::span<const std::string> slot_names() {
        static const std::vector<std::string> names{"x", "y", "s"};
        return names;
    }

    Expression f_, f_s_;
    double theta0_;
    ScalarField h_;
    CompiledExpression cf_, cfs_;
};

struct NonlinearityReport {
    bool pass = false;
    double min_f_s = 0.0;            // min sampled df/ds over grid x s_range
    double max_root_residual = 0.0;  // max |f(x, h(x))|
    double max_fd_mismatch = 0.0;    // |f_s - centered difference|, relative
    std::string notes;
};

// Samples (f2): df/ds >= theta0 on grid x s_range, f(x,h(x)) = 0, and the
// supplied derivative against centered differences.
inline NonlinearityReport validate_nonlinearity(const Nonlinearity& nl, const Grid& grid,
                                                std::pair<double, double> s_range,
                                                int s_samples = 17,
                                                double root_tol = 1e-10,
                                                double fd_rel_tol = 1e-5) {
    if (!(s_range.first <= s_range.second))
        throw ParameterError("validate_nonlinearity: empty s_range");
    NonlinearityReport rep;
    rep.min_f_s = std::numeric_limits<double>::infinity();
    try {
        for (std::size_t k = 0; k < grid.size(); ++k) {
            Point p = grid.coord(k);
            double hval = nl.root_profile()(p);
            rep.max_root_residual = std::max(rep.max_root_residual, std::fabs(nl.f(p, hval)));
            for (int i = 0; i < s_samples; ++i) {
                double t = s_samples == 1 ? 0.0 : double(i) / (s_samples - 1);
                double s = s_range.first + t * (s_range.second - s_range.first);
                double fs = nl.f_s(p, s);
                rep.min_f_s = std::min(rep.min_f_s, fs);
                double eps = 1e-6 * std::max(1.0, std::fabs(s));
                double fd = (nl.f(p, s + eps) - nl.f(p, s - eps)) / (2.0 * eps);
                double scale = std::max(1.0, std::fabs(fs));
                rep.max_fd_mismatch = std::max(rep.max_fd_mismatch, std::fabs(fs - fd) / scale);
            }
        }
    } catch (const EvalError& e) {
        throw DomainError(std::string("invalid nonlinearity: ") + e.what());
    }
    bool theta_ok = rep.min_f_s >= nl.theta0() - 1e-12;
    bool root_ok = rep.max_root_residual <= root_tol;
    bool fd_ok = rep.max_fd_mismatch <= fd_rel_tol;
    rep.pass = theta_ok && root_ok && fd_ok;
    if (!theta_ok) rep.notes += "min f_s below theta0; ";
    if (!root_ok) rep.notes += "f(x,h(x)) not zero within tolerance; ";
    if (!fd_ok) rep.notes += "f_s disagrees with finite differences; ";
    return rep;
}

}  // namespace nlbvp

#endif
