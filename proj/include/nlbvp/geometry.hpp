#ifndef NLBVP_GEOMETRY_HPP
#define NLBVP_GEOMETRY_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "nlbvp/errors.hpp"

namespace nlbvp {

using Point = std::array<double, 2>;  // y unused in 1D

// Interval (1D) or axis-aligned rectangle (2D).
struct Domain {
    int dim = 1;
    std::array<double, 2> lo{0.0, 0.0};
    std::array<double, 2> hi{1.0, 0.0};

    static Domain interval(double a, double b) {
        if (!(a < b)) throw ParameterError("interval requires low < high");
        Domain d;
        d.dim = 1;
        d.lo = {a, 0.0};
        d.hi = {b, 0.0};
        return d;
    }

    static Domain rectangle(double x0, double x1, double y0, double y1) {
        if (!(x0 < x1 && y0 < y1)) throw ParameterError("rectangle requires low < high per axis");
        Domain d;
        d.dim = 2;
        d.lo = {x0, y0};
        d.hi = {x1, y1};
        return d;
    }

    double length(int axis) const { return hi[axis] - lo[axis]; }

    double diameter() const {
        if (dim == 1) return length(0);
        return std::hypot(length(0), length(1));
    }

    double inradius() const {
        double r = length(0) / 2.0;
        if (dim == 2) r = std::min(r, length(1) / 2.0);
        return r;
    }

    bool contains_closure(const Point& p, double eps = 0.0) const {
        for (int a = 0; a < dim; ++a)
            if (p[a] < lo[a] - eps || p[a] > hi[a] + eps) return false;
        return true;
    }
};

inline double dist_to_boundary(const Domain& d, const Point& p) {
    if (!d.contains_closure(p, 1e-14))
        throw DomainError("point outside domain closure");
    double best = std::numeric_limits<double>::infinity();
    for (int a = 0; a < d.dim; ++a)
        best = std::min({best, p[a] - d.lo[a], d.hi[a] - p[a]});
    return std::max(best, 0.0);
}

// min_j dist(xi_j, boundary); every xi_j must be strictly interior.
inline double m_xi(const Domain& d, std::span<const Point> points) {
    if (points.empty()) throw ParameterError("m_xi: empty point list");
    double best = std::numeric_limits<double>::infinity();
    for (const Point& p : points) {
        double dist = dist_to_boundary(d, p);
        if (dist <= 0.0) throw DomainError("interior point lies on the boundary");
        best = std::min(best, dist);
    }
    return best;
}

// Uniform tensor-product grid. Node (i,j) at lo + (i*hx, j*hy); in 1D the
// second index is fixed at 0.
struct Grid {
    Domain domain;
    std::array<int, 2> n{3, 1};  // nodes per axis, n[1]==1 in 1D

    Grid() = default;
    Grid(const Domain& d, std::array<int, 2> nodes) : domain(d), n(nodes) {
        if (d.dim == 1) n[1] = 1;
        for (int a = 0; a < d.dim; ++a)
            if (n[a] < 3) throw ParameterError("grid needs >= 3 nodes per axis");
    }

    double spacing(int axis) const { return domain.length(axis) / (n[axis] - 1); }

    std::size_t size() const { return static_cast<std::size_t>(n[0]) * n[1]; }

    std::size_t index(int i, int j = 0) const {
        return static_cast<std::size_t>(j) * n[0] + i;
    }

    Point coord(std::size_t idx) const {
        int i = static_cast<int>(idx % n[0]);
        int j = static_cast<int>(idx / n[0]);
        Point p{domain.lo[0] + i * spacing(0), 0.0};
        if (domain.dim == 2) p[1] = domain.lo[1] + j * spacing(1);
        return p;
    }

    bool is_boundary(std::size_t idx) const {
        int i = static_cast<int>(idx % n[0]);
        int j = static_cast<int>(idx / n[0]);
        if (i == 0 || i == n[0] - 1) return true;
        if (domain.dim == 2 && (j == 0 || j == n[1] - 1)) return true;
        return false;
    }

    std::vector<bool> boundary_mask() const {
        std::vector<bool> m(size());
        for (std::size_t k = 0; k < size(); ++k) m[k] = is_boundary(k);
        return m;
    }
};

struct InteriorRegion {
    double delta = 0.0;
    std::vector<std::size_t> node_set;
};

inline InteriorRegion interior_region(const Grid& g, double delta) {
    if (!(delta > 0.0 && delta < g.domain.diameter()))
        throw ParameterError("interior_region: delta outside (0, diam)");
    InteriorRegion r;
    r.delta = delta;
    for (std::size_t k = 0; k < g.size(); ++k)
        if (dist_to_boundary(g.domain, g.coord(k)) > delta) r.node_set.push_back(k);
    return r;
}

}  // namespace nlbvp

#endif
