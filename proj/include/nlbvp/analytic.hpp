#ifndef NLBVP_ANALYTIC_HPP
#define NLBVP_ANALYTIC_HPP

#include <cmath>
#include <functional>
#include <optional>
#include <vector>

#include "nlbvp/errors.hpp"

namespace nlbvp {

// 1D linear equation -u'' + lambda*u = 0 on (L,R) with u(L) = 0 and
// u(R) = g_R + sum beta_j u(xi_j); closed forms for ground truth.
struct MultipointSpec1D {
    double L = 0.0;
    double R = 1.0;
    double g_R = 0.0;
    std::vector<double> beta;
    std::vector<double> xi;  // strictly increasing, in (L,R)

    void validate() const {
        if (!(L < R)) throw ParameterError("multipoint spec needs L < R");
        if (beta.size() != xi.size()) throw ParameterError("beta/xi length mismatch");
        for (std::size_t j = 0; j < xi.size(); ++j) {
            if (!(xi[j] > L && xi[j] < R))
                throw ParameterError("multipoint node outside (L,R)");
            if (j > 0 && !(xi[j] > xi[j - 1]))
                throw ParameterError("multipoint nodes must be strictly increasing");
            if (beta[j] == 0.0) throw ParameterError("beta_j must be nonzero");
        }
    }
};

namespace detail {
inline void guard_exponent(double arg) {
    if (arg > 700.0) throw OverflowError("sinh argument exceeds double range");
}
}  // namespace detail

// Characteristic function of the multipoint condition, computed via sinh
// for numerical symmetry. eta(0) = 0 always.
inline double eta(double s, const MultipointSpec1D& spec) {
    if (s < 0.0) throw ParameterError("eta requires s >= 0");
    detail::guard_exponent(s * (spec.R - spec.L));
    double v = 2.0 * std::sinh(s * (spec.R - spec.L));
    for (std::size_t j = 0; j < spec.beta.size(); ++j)
        v -= spec.beta[j] * 2.0 * std::sinh(s * (spec.xi[j] - spec.L));
    return v;
}

enum class EtaMembership { Member, Boundary };

// Membership of lambda in the set where eta(sqrt(lambda)) != 0. Exact
// nonmembership is measure-zero; within tolerance we report Boundary.
inline EtaMembership in_S_eta(double lambda, const MultipointSpec1D& spec,
                              double tol = 1e-9) {
    if (!(lambda > 0.0)) throw ParameterError("lambda must be positive");
    double s = std::sqrt(lambda);
    double arg = s * (spec.R - spec.L);
    detail::guard_exponent(arg);
    double scale = std::exp(arg);
    return std::fabs(eta(s, spec)) > tol * scale ? EtaMembership::Member
                                                 : EtaMembership::Boundary;
}

// Threshold lambda* above which membership is guaranteed, with xi_{R,m}
// read as the largest multipoint node.
inline double lambda_star(const MultipointSpec1D& spec) {
    if (spec.beta.empty()) throw ParameterError("lambda_star needs m >= 1");
    double bsum = 0.0;
    for (double b : spec.beta) bsum += std::fabs(b);
    double arg = std::max(bsum, 1.0 / bsum);
    double r = std::log(arg) / (spec.R - spec.xi.back());
    return r * r;
}

// Smallest positive root of eta on (0, s_max], if eta changes sign there;
// refined by bisection to relative 1e-12.
inline std::optional<double> find_eta_root(const MultipointSpec1D& spec, double s_max) {
    if (!(s_max > 0.0)) throw ParameterError("s_max must be positive");
    if (spec.beta.empty()) return std::nullopt;
    const int scan = 4096;
    double prev_s = s_max / scan;
    double prev_v = eta(prev_s, spec);
    for (int i = 2; i <= scan; ++i) {
        double s = s_max * i / scan;
        double v = eta(s, spec);
        if (prev_v == 0.0) return prev_s;
        if (prev_v * v <= 0.0) {
            double a = prev_s, b = s, fa = prev_v;
            while (b - a > 1e-12 * b) {
                double mid = 0.5 * (a + b);
                double fm = eta(mid, spec);
                if (fm == 0.0) return mid;
                if (fa * fm < 0.0)
                    b = mid;
                else {
                    a = mid;
                    fa = fm;
                }
            }
            return 0.5 * (a + b);
        }
        prev_s = s;
        prev_v = v;
    }
    return std::nullopt;
}

// The explicit unique solution for member lambda.
inline double closed_form_multipoint(const MultipointSpec1D& spec, double lambda, double x) {
    if (in_S_eta(lambda, spec) != EtaMembership::Member)
        throw NoUniqueSolution(
            "lambda is (numerically) a root of eta: no solution for g_R != 0, "
            "infinitely many for g_R = 0");
    double s = std::sqrt(lambda);
    return spec.g_R / eta(s, spec) * 2.0 * std::sinh(s * (x - spec.L));
}

enum class Example22Kind { Sqrt, Quadratic };

struct Example22Solution {
    std::function<double(double)> u;
    double boundary_value;  // u(1)
};

// The two closed-form branches of the integral-condition examples on (0,1):
// sqrt case u(1) = sqrt(int |u|), quadratic case u(1) = int u^2.
inline std::vector<Example22Solution> example22_solutions(Example22Kind kind, double lambda) {
    if (!(lambda > 0.0)) throw ParameterError("lambda must be positive");
    double s = std::sqrt(lambda);
    detail::guard_exponent(2.0 * s);
    std::vector<Example22Solution> out;
    out.push_back({[](double) { return 0.0; }, 0.0});
    if (kind == Example22Kind::Sqrt) {
        double c = 1.0 / (2.0 * s * std::cosh(s / 2.0) * std::cosh(s / 2.0));
        out.push_back({[s, c](double x) { return c * std::sinh(s * x); },
                       c * std::sinh(s)});
    } else {
        double amp = 2.0 * std::sinh(s) / (std::sinh(2.0 * s) / (2.0 * s) - 1.0);
        out.push_back({[s, amp](double x) { return amp * std::sinh(s * x); },
                       amp * std::sinh(s)});
    }
    return out;
}

}  // namespace nlbvp

#endif
