#ifndef NLBVP_CONFIG_HPP
#define NLBVP_CONFIG_HPP

#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "nlbvp/nonlocal.hpp"
#include "nlbvp/verify.hpp"

namespace nlbvp {

// Flat key-value run configuration with dotted sections, e.g.
//   problem.f = s - (1 + x*y)
//   nonlocal.kind = multipoint
//   sweep.from = 100
// Values may be double-quoted; '#' starts a comment.
struct RunConfig {
    ProblemSpec spec;                    // lambda filled per run
    std::optional<double> lambda;        // single-solve lambda
    struct Sweep {
        double from = 0.0, to = 0.0, factor = 2.0;
    };
    std::optional<Sweep> sweep;
    std::optional<std::array<int, 2>> grid_n;  // nullopt = auto resolution
    int nodes_per_layer = 10;
    FixedPointConfig fixed_point;
    NewtonConfig newton;
    double verify_delta = 0.25;
    std::pair<double, double> verify_mu{0.0, 1.0};

    std::vector<double> sweep_lambdas() const {
        std::vector<double> out;
        if (sweep) {
            for (double l = sweep->from; l <= sweep->to * (1.0 + 1e-12); l *= sweep->factor)
                out.push_back(l);
        } else if (lambda) {
            out.push_back(*lambda);
        }
        return out;
    }

    Grid make_grid(double lam) const {
        std::array<int, 2> n =
            grid_n ? *grid_n : recommended_resolution(spec.domain, lam, nodes_per_layer);
        return Grid(spec.domain, n);
    }

    static RunConfig load(const std::string& path);
    static RunConfig parse(const std::string& text);
};

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

inline std::string unquote(std::string v) {
    if (v.size() >= 2 && v.front() == '"' && v.back() == '"')
        return v.substr(1, v.size() - 2);
    return v;
}

class KvFile {
  public:
    explicit KvFile(const std::string& text) {
        std::istringstream in(text);
        std::string line;
        while (std::getline(in, line)) {
            std::size_t hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            line = trim(line);
            if (line.empty()) continue;
            std::size_t eq = line.find('=');
            if (eq == std::string::npos)
                throw ConfigError(line, "expected 'key = value'");
            std::string key = trim(line.substr(0, eq));
            std::string val = unquote(trim(line.substr(eq + 1)));
            kv_[key] = val;
        }
    }

    std::optional<std::string> get(const std::string& key) const {
        auto it = kv_.find(key);
        if (it == kv_.end()) return std::nullopt;
        used_.insert(key);
        return it->second;
    }

    std::string require(const std::string& key) const {
        auto v = get(key);
        if (!v) throw ConfigError(key, "missing required key");
        return *v;
    }

    double get_double(const std::string& key, double fallback) const {
        auto v = get(key);
        if (!v) return fallback;
        return to_double(key, *v);
    }

    static double to_double(const std::string& key, const std::string& v) {
        try {
            std::size_t pos;
            double d = std::stod(v, &pos);
            if (trim(v.substr(pos)) != "") throw std::invalid_argument("trailing junk");
            return d;
        } catch (const std::exception&) {
            throw ConfigError(key, "not a number: '" + v + "'");
        }
    }

    int get_int(const std::string& key, int fallback) const {
        auto v = get(key);
        if (!v) return fallback;
        try {
            return std::stoi(*v);
        } catch (const std::exception&) {
            throw ConfigError(key, "not an integer: '" + *v + "'");
        }
    }

    std::vector<std::string> unused_keys() const {
        std::vector<std::string> out;
        for (const auto& [k, v] : kv_)
            if (!used_.count(k)) out.push_back(k);
        return out;
    }

  private:
    std::map<std::string, std::string> kv_;
    mutable std::set<std::string> used_;
};

inline std::vector<double> parse_number_list(const std::string& key, const std::string& v) {
    std::vector<double> out;
    std::string item;
    std::istringstream in(v);
    while (std::getline(in, item, ',')) out.push_back(KvFile::to_double(key, trim(item)));
    return out;
}

inline std::vector<Point> parse_point_list(const std::string& key, const std::string& v,
                                           int dim) {
    std::vector<Point> out;
    std::string item;
    std::istringstream in(v);
    while (std::getline(in, item, ';')) {
        item = trim(item);
        if (item.empty()) continue;
        if (!item.empty() && item.front() == '(' && item.back() == ')')
            item = item.substr(1, item.size() - 2);
        std::vector<double> coords = parse_number_list(key, item);
        if (static_cast<int>(coords.size()) != dim)
            throw ConfigError(key, "point '" + item + "' has wrong dimension");
        Point p{coords[0], 0.0};
        if (dim == 2) p[1] = coords[1];
        out.push_back(p);
    }
    return out;
}

}  // namespace detail

inline RunConfig RunConfig::parse(const std::string& text) {
    using detail::KvFile;
    KvFile kv(text);
    RunConfig cfg;

    // domain
    std::string kind = kv.get("domain.kind").value_or("interval");
    auto axis = [&](const std::string& key, double dlo, double dhi) {
        auto v = kv.get(key);
        if (!v) return std::pair<double, double>{dlo, dhi};
        std::vector<double> nums = detail::parse_number_list(key, *v);
        if (nums.size() != 2) throw ConfigError(key, "expected 'low, high'");
        return std::pair<double, double>{nums[0], nums[1]};
    };
    try {
        auto [x0, x1] = axis("domain.x", 0.0, 1.0);
        if (kind == "interval") {
            cfg.spec.domain = Domain::interval(x0, x1);
        } else if (kind == "rectangle") {
            auto [y0, y1] = axis("domain.y", 0.0, 1.0);
            cfg.spec.domain = Domain::rectangle(x0, x1, y0, y1);
        } else {
            throw ConfigError("domain.kind", "expected interval or rectangle");
        }
    } catch (const ParameterError& e) {
        throw ConfigError("domain", e.what());
    }
    const int dim = cfg.spec.domain.dim;
    const std::vector<std::string> xvars =
        dim == 2 ? std::vector<std::string>{"x", "y"} : std::vector<std::string>{"x"};
    std::vector<std::string> xsvars = xvars;
    xsvars.push_back("s");

    auto parse_field = [&](const std::string& key, const std::string& fallback,
                           bool positive) {
        std::string src = kv.get(key).value_or(fallback);
        try {
            return ScalarField(Expression::parse(src, xvars), positive);
        } catch (const ParseError& e) {
            throw ConfigError(key, e.what());
        }
    };

    cfg.spec.diffusion = parse_field("problem.D", "1", true);
    cfg.spec.boundary_data = parse_field("problem.g", "0", false);
    ScalarField h = parse_field("problem.h", "0", false);
    double theta0 = kv.get_double("problem.theta0", 1.0);
    std::string f_src = kv.require("problem.f");
    std::string fs_src = kv.require("problem.f_s");
    try {
        cfg.spec.nonlinearity = Nonlinearity(Expression::parse(f_src, xsvars),
                                             Expression::parse(fs_src, xsvars), theta0, h);
    } catch (const ParseError& e) {
        throw ConfigError("problem.f", e.what());
    } catch (const ParameterError& e) {
        throw ConfigError("problem.theta0", e.what());
    }

    // nonlocal functional
    NonlocalFunctional& nl = cfg.spec.nonlocal;
    std::string nkind = kv.get("nonlocal.kind").value_or("multipoint");
    if (nkind == "multipoint")
        nl.kind = CombinerKind::LinearMultipoint;
    else if (nkind == "integral")
        nl.kind = CombinerKind::LinearIntegral;
    else if (nkind == "affine")
        nl.kind = CombinerKind::Affine;
    else if (nkind == "general")
        nl.kind = CombinerKind::GeneralExpression;
    else
        throw ConfigError("nonlocal.kind", "expected multipoint, integral, affine or general");
    if (auto v = kv.get("nonlocal.beta"))
        nl.beta = detail::parse_number_list("nonlocal.beta", *v);
    if (auto v = kv.get("nonlocal.xi"))
        nl.points = detail::parse_point_list("nonlocal.xi", *v, dim);
    nl.gamma = kv.get_double("nonlocal.gamma", 0.0);
    if (auto v = kv.get("nonlocal.w")) {
        try {
            nl.weight = ScalarField(Expression::parse(*v, xvars), false);
        } catch (const ParseError& e) {
            throw ConfigError("nonlocal.w", e.what());
        }
    } else if (nl.kind != CombinerKind::LinearMultipoint) {
        nl.weight = ScalarField::constant(1.0);
    }
    if (auto v = kv.get("nonlocal.phi")) {
        try {
            nl.phi = Expression::parse(*v, std::vector<std::string>{"s"});
        } catch (const ParseError& e) {
            throw ConfigError("nonlocal.phi", e.what());
        }
    }
    if (auto v = kv.get("nonlocal.expr")) {
        try {
            nl.general = Expression::parse(*v);
        } catch (const ParseError& e) {
            throw ConfigError("nonlocal.expr", e.what());
        }
    }
    if (auto v = kv.get("nonlocal.sigma")) {
        if (*v == "all") {
            nl.sigma = {true, true, true, true};
        } else {
            std::vector<double> bits = detail::parse_number_list("nonlocal.sigma", *v);
            if (static_cast<int>(bits.size()) != 2 * dim)
                throw ConfigError("nonlocal.sigma",
                                  "expected 'all' or one 0/1 per boundary side");
            nl.sigma = {false, false, false, false};
            for (std::size_t i = 0; i < bits.size(); ++i) nl.sigma[i] = bits[i] != 0.0;
        }
    }
    try {
        nl.validate(cfg.spec.domain);
    } catch (const Error& e) {
        throw ConfigError("nonlocal", e.what());
    }

    // lambda: single value or sweep
    if (auto v = kv.get("problem.lambda"))
        cfg.lambda = KvFile::to_double("problem.lambda", *v);
    if (kv.get("sweep.from")) {
        RunConfig::Sweep s;
        s.from = kv.get_double("sweep.from", 0.0);
        s.to = kv.get_double("sweep.to", s.from);
        s.factor = kv.get_double("sweep.factor", 2.0);
        if (!(s.from > 0.0 && s.from < s.to))
            throw ConfigError("sweep.from", "sweep requires 0 < from < to");
        if (!(s.factor > 1.0)) throw ConfigError("sweep.factor", "factor must exceed 1");
        cfg.sweep = s;
    }
    if (!cfg.lambda && !cfg.sweep)
        throw ConfigError("problem.lambda", "need problem.lambda or a sweep section");

    // grid
    if (auto v = kv.get("grid.n"); v && *v != "auto") {
        std::vector<double> nums = detail::parse_number_list("grid.n", *v);
        std::array<int, 2> n{0, 1};
        if (nums.size() == 1) {
            n[0] = static_cast<int>(nums[0]);
            n[1] = dim == 2 ? n[0] : 1;
        } else if (nums.size() == 2 && dim == 2) {
            n[0] = static_cast<int>(nums[0]);
            n[1] = static_cast<int>(nums[1]);
        } else {
            throw ConfigError("grid.n", "expected 'auto', one count, or two counts in 2D");
        }
        cfg.grid_n = n;
    }
    cfg.nodes_per_layer = kv.get_int("grid.nodes_per_layer", 10);

    // fixed-point settings
    if (auto v = kv.get("fixedpoint.strategy")) {
        if (*v == "picard")
            cfg.fixed_point.strategy = FixedPointStrategy::Picard;
        else if (*v == "scan")
            cfg.fixed_point.strategy = FixedPointStrategy::BracketScan;
        else if (*v == "auto")
            cfg.fixed_point.strategy = FixedPointStrategy::Auto;
        else
            throw ConfigError("fixedpoint.strategy", "expected picard, scan or auto");
    }
    if (auto v = kv.get("fixedpoint.mu0"))
        cfg.fixed_point.mu0 = KvFile::to_double("fixedpoint.mu0", *v);
    cfg.fixed_point.fp_tol = kv.get_double("fixedpoint.tol", cfg.fixed_point.fp_tol);
    cfg.fixed_point.max_iters = kv.get_int("fixedpoint.max_iters", cfg.fixed_point.max_iters);
    if (auto v = kv.get("fixedpoint.bracket"))
        cfg.fixed_point.bracket = KvFile::to_double("fixedpoint.bracket", *v);
    cfg.fixed_point.scan_points =
        kv.get_int("fixedpoint.scan_points", cfg.fixed_point.scan_points);
    cfg.fixed_point.divergence_bound =
        kv.get_double("fixedpoint.divergence_bound", cfg.fixed_point.divergence_bound);

    // newton settings
    cfg.newton.residual_tol = kv.get_double("newton.tol", 0.0);
    cfg.newton.max_iters = kv.get_int("newton.max_iters", cfg.newton.max_iters);

    // verification settings
    cfg.verify_delta = kv.get_double("verify.delta", cfg.verify_delta);
    if (auto v = kv.get("verify.mu")) {
        std::vector<double> nums = detail::parse_number_list("verify.mu", *v);
        if (nums.size() != 2) throw ConfigError("verify.mu", "expected 'mu_tilde, mu'");
        cfg.verify_mu = {nums[0], nums[1]};
    }

    std::vector<std::string> unused = kv.unused_keys();
    if (!unused.empty()) throw ConfigError(unused.front(), "unknown configuration key");
    return cfg;
}

inline RunConfig RunConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path, "cannot open config file");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

}  // namespace nlbvp

#endif
