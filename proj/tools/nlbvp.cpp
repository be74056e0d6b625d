#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"
#include "nlbvp/nlbvp.hpp"

using json = nlohmann::ordered_json;
using namespace nlbvp;

namespace {

constexpr int kSchemaVersion = 1;

constexpr int ExitOk = 0;
constexpr int ExitNoRoot = 2;
constexpr int ExitSolverFailure = 3;
constexpr int ExitConfigError = 4;

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string timestamp_now() {
    auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char buf[64];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    return buf;
}

const char* stability_name(Stability s) {
    switch (s) {
        case Stability::Attracting: return "attracting";
        case Stability::Repelling: return "repelling";
        default: return "marginal";
    }
}

const char* status_name(FixedPointStatus s) {
    switch (s) {
        case FixedPointStatus::Converged: return "converged";
        case FixedPointStatus::Diverged: return "diverged";
        default: return "no_root_in_bracket";
    }
}

void write_text(const std::string& path, const std::string& text) {
    if (path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError(path, "cannot open output file");
    out << text;
}

void write_solution_csv(const std::string& path, const GridFunction& u, bool timestamp) {
    std::ostringstream csv;
    if (timestamp) csv << "# generated " << timestamp_now() << "\n";
    const Grid& g = u.grid;
    csv << (g.domain.dim == 2 ? "x,y,u\n" : "x,u\n");
    for (std::size_t k = 0; k < g.size(); ++k) {
        Point p = g.coord(k);
        csv << fmt_double(p[0]);
        if (g.domain.dim == 2) csv << ',' << fmt_double(p[1]);
        csv << ',' << fmt_double(u[k]) << '\n';
    }
    write_text(path, csv.str());
}

// Deviation of u from the root profile over the interior region Omega_delta.
double interior_deviation(const GridFunction& u, const ScalarField& h, double delta) {
    InteriorRegion region = interior_region(u.grid, delta);
    double e = 0.0;
    for (std::size_t k : region.node_set)
        e = std::max(e, std::fabs(u[k] - h(u.grid.coord(k))));
    return e;
}

// Deviation of u from g + B[h] over the sigma-active boundary nodes.
double boundary_deviation(const GridFunction& u, const ProblemSpec& spec, double b_of_h) {
    DiscreteSystem sys = discretize(spec, u.grid, 0.0);
    double b = 0.0;
    for (std::size_t k = 0; k < u.grid.size(); ++k) {
        if (!u.grid.is_boundary(k) || !sys.sigma_by_index(k)) continue;
        b = std::max(b, std::fabs(u[k] - spec.boundary_data(u.grid.coord(k)) - b_of_h));
    }
    return b;
}

// Pick the root whose mu is closest to B[h]; ties broken toward smaller mu.
const FixedPointRoot& select_root(const FixedPointResult& r, double b_of_h) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < r.roots.size(); ++i)
        if (std::fabs(r.roots[i].mu - b_of_h) < std::fabs(r.roots[best].mu - b_of_h))
            best = i;
    return r.roots[best];
}

struct SweepRow {
    double lambda = 0.0;
    std::string status;
    std::vector<double> mus;
    double contraction = 0.0;
    double interior_dev = 0.0;
    double boundary_dev = 0.0;
    std::optional<GridFunction> selected;
};

std::vector<SweepRow> run_sweep(const RunConfig& cfg, const std::vector<double>& lambdas,
                                int jobs) {
    std::vector<SweepRow> rows(lambdas.size());
    std::mutex next_mtx;
    std::size_t next = 0;
    auto worker = [&]() {
        for (;;) {
            std::size_t i;
            {
                std::lock_guard<std::mutex> lock(next_mtx);
                if (next >= lambdas.size()) return;
                i = next++;
            }
            SweepRow& row = rows[i];
            row.lambda = lambdas[i];
            try {
                ProblemSpec spec = cfg.spec;
                spec.lambda = lambdas[i];
                Grid grid = cfg.make_grid(lambdas[i]);
                FixedPointResult res = fixed_point_solve(spec, grid, cfg.fixed_point,
                                                         cfg.newton);
                row.status = status_name(res.status);
                row.contraction = res.contraction_estimate;
                for (const FixedPointRoot& r : res.roots) row.mus.push_back(r.mu);
                if (!res.roots.empty()) {
                    double b_of_h = compute_B_of_h(spec, grid);
                    const FixedPointRoot& r = select_root(res, b_of_h);
                    row.interior_dev = interior_deviation(
                        r.solution, spec.nonlinearity.root_profile(), cfg.verify_delta);
                    row.boundary_dev = boundary_deviation(r.solution, spec, b_of_h);
                    row.selected = r.solution;
                }
            } catch (const Error& e) {
                row.status = std::string("error: ") + e.what();
            }
        }
    };
    std::vector<std::thread> pool;
    int n = std::max(1, jobs);
    for (int t = 0; t < n; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
    return rows;
}

int cmd_solve(const RunConfig& cfg, const std::string& out, bool timestamp) {
    if (!cfg.lambda) throw ConfigError("problem.lambda", "solve needs a single lambda");
    ProblemSpec spec = cfg.spec;
    spec.lambda = *cfg.lambda;
    Grid grid = cfg.make_grid(spec.lambda);
    FixedPointResult res = fixed_point_solve(spec, grid, cfg.fixed_point, cfg.newton);

    json doc;
    doc["schema_version"] = kSchemaVersion;
    if (timestamp) doc["timestamp"] = timestamp_now();
    doc["lambda"] = spec.lambda;
    doc["grid_n"] = grid.domain.dim == 2 ? json::array({grid.n[0], grid.n[1]})
                                         : json::array({grid.n[0]});
    doc["status"] = status_name(res.status);
    doc["contraction_estimate"] = res.contraction_estimate;
    doc["roots"] = json::array();
    for (const FixedPointRoot& r : res.roots) {
        json jr;
        jr["mu"] = r.mu;
        jr["stability"] = stability_name(r.stability);
        jr["residual"] = r.residual;
        jr["picard_iters"] = r.iterate_history.size();
        doc["roots"].push_back(jr);
    }
    write_text(out, doc.dump(2) + "\n");
    if (!out.empty())
        for (std::size_t i = 0; i < res.roots.size(); ++i)
            write_solution_csv(out + ".root" + std::to_string(i) + ".csv",
                               res.roots[i].solution, timestamp);
    if (res.roots.empty())
        return res.status == FixedPointStatus::NoRootInBracket ? ExitNoRoot
                                                               : ExitSolverFailure;
    return ExitOk;
}

int cmd_sweep(const RunConfig& cfg, const std::string& out, int jobs, bool timestamp) {
    std::vector<double> lambdas = cfg.sweep_lambdas();
    if (lambdas.empty()) throw ConfigError("sweep.from", "sweep needs a lambda range");
    std::vector<SweepRow> rows = run_sweep(cfg, lambdas, jobs);
    std::ostringstream csv;
    if (timestamp) csv << "# generated " << timestamp_now() << "\n";
    csv << "lambda,status,n_roots,mu_roots,contraction,interior_dev,boundary_dev\n";
    bool any_ok = false;
    for (const SweepRow& row : rows) {
        std::string mus;
        for (std::size_t i = 0; i < row.mus.size(); ++i) {
            if (i) mus += ';';
            mus += fmt_double(row.mus[i]);
        }
        csv << fmt_double(row.lambda) << ",\"" << row.status << "\"," << row.mus.size()
            << ",\"" << mus << "\"," << fmt_double(row.contraction) << ','
            << fmt_double(row.interior_dev) << ',' << fmt_double(row.boundary_dev) << '\n';
        if (!row.mus.empty()) any_ok = true;
    }
    write_text(out, csv.str());
    return any_ok ? ExitOk : ExitSolverFailure;
}

json check_to_json(const CheckResult& c) {
    json j;
    j["name"] = c.name;
    j["pass"] = c.pass;
    j["applicable"] = c.applicable;
    j["hypothesis_met"] = c.hypothesis_met;
    j["measured"] = json::object();
    for (const auto& [k, v] : c.measured) j["measured"][k] = v;
    j["notes"] = c.notes;
    return j;
}

int cmd_verify(const RunConfig& cfg, const std::string& suite, const std::string& out,
               int jobs, bool timestamp) {
    std::vector<double> lambdas = cfg.sweep_lambdas();
    if (lambdas.size() < 3 && (suite == "interior" || suite == "boundary" || suite == "all"))
        throw ConfigError("sweep.from", "verify needs a sweep of at least three lambdas");
    VerificationReport report;
    auto want = [&](const char* name) { return suite == "all" || suite == name; };

    std::vector<SolvedRun> runs;
    if (want("interior") || want("boundary")) {
        std::vector<SweepRow> rows = run_sweep(cfg, lambdas, jobs);
        for (const SweepRow& row : rows) {
            if (!row.selected)
                throw NonConvergence("sweep point failed: " + row.status, GridFunction{},
                                     0.0);
            runs.push_back({row.lambda, *row.selected});
        }
    }
    if (want("interior"))
        report.checks.push_back(check_interior_limit(
            runs, cfg.spec.nonlinearity.root_profile(), cfg.verify_delta));
    if (want("boundary")) report.checks.push_back(check_boundary_limit(runs, cfg.spec));
    if (want("monotonicity")) {
        Grid grid = cfg.make_grid(lambdas.back());
        report.checks.push_back(check_mu_monotonicity(cfg.spec, grid, cfg.verify_mu,
                                                      lambdas, cfg.newton));
    }
    if (want("maxprinciple")) {
        double lam = lambdas.back();
        ProblemSpec spec = cfg.spec;
        spec.lambda = lam;
        Grid grid = cfg.make_grid(lam);
        for (ExtremumSide side : {ExtremumSide::Max, ExtremumSide::Min}) {
            bool hyp = max_principle_hypothesis(spec, grid, side);
            CheckResult c;
            if (hyp) {
                FixedPointResult res = fixed_point_solve(spec, grid, cfg.fixed_point,
                                                         cfg.newton);
                if (res.roots.empty())
                    throw NonConvergence("no fixed point for maxprinciple check",
                                         GridFunction{}, 0.0);
                double b_of_h = compute_B_of_h(spec, grid);
                c = check_maximum_principle(select_root(res, b_of_h).solution, side);
            } else {
                c.name = side == ExtremumSide::Max ? "maximum_principle_max"
                                                   : "maximum_principle_min";
                c.hypothesis_met = false;
                c.pass = false;
                c.notes = "hypothesis window not satisfied; check skipped";
            }
            report.checks.push_back(c);
        }
    }
    if (want("contraction")) {
        CheckResult c;
        c.name = "contraction_decay";
        ProblemSpec spec = cfg.spec;
        double prev = std::numeric_limits<double>::infinity();
        bool decreasing = true;
        for (double lam : lambdas) {
            spec.lambda = lam;
            Grid grid = cfg.make_grid(lam);
            double b_of_h = compute_B_of_h(spec, grid);
            double mu0 = cfg.fixed_point.mu0 ? *cfg.fixed_point.mu0 : b_of_h;
            double m = estimate_contraction(spec, grid, mu0, 0.1 * (1.0 + std::fabs(mu0)),
                                            cfg.newton);
            c.measured["M_lambda_" + std::to_string(lam)] = m;
            if (!(m < prev)) decreasing = false;
            prev = m;
        }
        c.pass = decreasing;
        if (!decreasing) c.notes = "contraction estimate not strictly decreasing";
        report.checks.push_back(c);
    }
    if (report.checks.empty()) throw ConfigError("suite", "unknown verify suite " + suite);

    json doc;
    doc["schema_version"] = kSchemaVersion;
    if (timestamp) doc["timestamp"] = timestamp_now();
    doc["suite"] = suite;
    doc["all_pass"] = report.all_pass();
    doc["checks"] = json::array();
    for (const CheckResult& c : report.checks) doc["checks"].push_back(check_to_json(c));
    write_text(out, doc.dump(2) + "\n");
    return report.all_pass() ? ExitOk : ExitSolverFailure;
}

MultipointSpec1D make_mp_spec(double L, double R, double g_R,
                              const std::vector<double>& beta,
                              const std::vector<double>& xi) {
    MultipointSpec1D spec;
    spec.L = L;
    spec.R = R;
    spec.g_R = g_R;
    spec.beta = beta;
    spec.xi = xi;
    spec.validate();
    return spec;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Solver and verification harness for semilinear elliptic problems "
                 "with nonlocal (multi-point / integral) boundary conditions"};
    app.require_subcommand(1);

    std::string config_path, out_path, suite = "all";
    int jobs = static_cast<int>(std::thread::hardware_concurrency());
    if (jobs <= 0) jobs = 1;
    bool no_timestamp = false;

    auto add_common = [&](CLI::App* sub, bool with_jobs) {
        sub->add_option("config", config_path, "Key-value config file")->required();
        sub->add_option("--out", out_path, "Output path (default: stdout)");
        if (with_jobs) sub->add_option("--jobs", jobs, "Worker threads for sweep points");
        sub->add_flag("--no-timestamp", no_timestamp, "Suppress timestamp header");
    };

    CLI::App* solve = app.add_subcommand(
        "solve", "Fixed-point solve at a single lambda; JSON roots plus CSV grids "
                 "(columns x[,y],u)");
    add_common(solve, false);

    CLI::App* sweep = app.add_subcommand(
        "sweep", "Sweep lambda geometrically; CSV columns lambda,status,n_roots,"
                 "mu_roots,contraction,interior_dev,boundary_dev");
    add_common(sweep, true);

    CLI::App* verify = app.add_subcommand("verify", "Run verification suites; JSON report");
    add_common(verify, true);
    verify->add_option("--suite", suite,
                       "interior | boundary | monotonicity | maxprinciple | contraction | all");

    CLI::App* analytic =
        app.add_subcommand("analytic", "Closed-form 1D multipoint quantities as JSON");
    analytic->require_subcommand(1);
    double a_L = 0.0, a_R = 1.0, a_gR = 1.0, a_smax = 20.0, a_lambda = 0.0, a_x = 1.0;
    std::vector<double> a_beta, a_xi;
    std::string a_kind = "sqrt";
    bool an_no_timestamp = false;
    auto add_mp = [&](CLI::App* sub) {
        sub->add_option("--L", a_L, "Left endpoint");
        sub->add_option("--R", a_R, "Right endpoint");
        sub->add_option("--g_R", a_gR, "Boundary datum at R");
        sub->add_option("--beta", a_beta, "Multipoint weights")->required();
        sub->add_option("--xi", a_xi, "Multipoint nodes in (L,R)")->required();
        sub->add_flag("--no-timestamp", an_no_timestamp, "Suppress timestamp field");
    };
    CLI::App* an_root = analytic->add_subcommand("eta-root", "Smallest positive root of eta");
    add_mp(an_root);
    an_root->add_option("--s-max", a_smax, "Scan upper bound for s");
    CLI::App* an_star = analytic->add_subcommand("lambda-star", "Membership threshold");
    add_mp(an_star);
    CLI::App* an_cf = analytic->add_subcommand("closed-form", "Closed-form solution value");
    add_mp(an_cf);
    an_cf->add_option("--lambda", a_lambda, "lambda")->required();
    an_cf->add_option("--x", a_x, "Evaluation point");
    CLI::App* an_ex = analytic->add_subcommand("example22", "Integral-condition branches");
    an_ex->add_option("--kind", a_kind, "sqrt | quadratic");
    an_ex->add_option("--lambda", a_lambda, "lambda")->required();
    an_ex->add_flag("--no-timestamp", an_no_timestamp, "Suppress timestamp field");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : ExitConfigError;
    }

    try {
        if (solve->parsed() || sweep->parsed() || verify->parsed()) {
            RunConfig cfg = RunConfig::load(config_path);
            if (solve->parsed()) return cmd_solve(cfg, out_path, !no_timestamp);
            if (sweep->parsed()) return cmd_sweep(cfg, out_path, jobs, !no_timestamp);
            return cmd_verify(cfg, suite, out_path, jobs, !no_timestamp);
        }
        json doc;
        doc["schema_version"] = kSchemaVersion;
        if (!an_no_timestamp) doc["timestamp"] = timestamp_now();
        if (an_root->parsed()) {
            MultipointSpec1D spec = make_mp_spec(a_L, a_R, a_gR, a_beta, a_xi);
            std::optional<double> s = find_eta_root(spec, a_smax);
            doc["s_root"] = s ? json(*s) : json(nullptr);
            doc["lambda_c"] = s ? json(*s * *s) : json(nullptr);
        } else if (an_star->parsed()) {
            MultipointSpec1D spec = make_mp_spec(a_L, a_R, a_gR, a_beta, a_xi);
            doc["lambda_star"] = lambda_star(spec);
        } else if (an_cf->parsed()) {
            MultipointSpec1D spec = make_mp_spec(a_L, a_R, a_gR, a_beta, a_xi);
            doc["lambda"] = a_lambda;
            doc["x"] = a_x;
            doc["u"] = closed_form_multipoint(spec, a_lambda, a_x);
        } else if (an_ex->parsed()) {
            Example22Kind kind;
            if (a_kind == "sqrt")
                kind = Example22Kind::Sqrt;
            else if (a_kind == "quadratic")
                kind = Example22Kind::Quadratic;
            else
                throw ConfigError("--kind", "expected sqrt or quadratic");
            doc["kind"] = a_kind;
            doc["lambda"] = a_lambda;
            doc["boundary_values"] = json::array();
            for (const Example22Solution& s : example22_solutions(kind, a_lambda))
                doc["boundary_values"].push_back(s.boundary_value);
        }
        std::cout << doc.dump(2) << "\n";
        return ExitOk;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return ExitConfigError;
    } catch (const ParseError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return ExitConfigError;
    } catch (const ParameterError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return ExitConfigError;
    } catch (const NoUniqueSolution& e) {
        std::cerr << "no unique solution: " << e.what() << "\n";
        return ExitNoRoot;
    } catch (const Error& e) {
        std::cerr << "solver failure: " << e.what() << "\n";
        return ExitSolverFailure;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return ExitSolverFailure;
    }
}
