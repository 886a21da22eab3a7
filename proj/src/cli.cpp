#include "neumann/cli.hpp"

#include "neumann/errors.hpp"
#include "neumann/expr.hpp"
#include "neumann/io.hpp"
#include "neumann/verify.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>

namespace neumann::cli {

namespace {

namespace fs = std::filesystem;

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

struct Common {
    CLI::App* app = nullptr;
    std::string problem, domain, radius_coeffs, f, g, strategy, compat, levels;
    std::string out = ".";
    std::string format = "json";
    double alpha = 0.5;
    double tol_linear = 1e-10;
    double tol_compat = 1e-8;
    int nr = 64, ntheta = 128, n = 128;
    std::uint64_t seed = 0;

    bool given(const std::string& name) const { return app->count(name) > 0; }
    bool want_json() const { return format == "json" || format == "both"; }
    bool want_csv() const { return format == "csv" || format == "both"; }
};

void add_common(CLI::App* sub, Common& c) {
    c.app = sub;
    sub->add_option("--problem", c.problem, "problem JSON file; flags override its fields");
    sub->add_option("--domain", c.domain,
                    "disk | star | interval | interval:a,b | path to a domain JSON file");
    sub->add_option("--radius-coeffs", c.radius_coeffs,
                    "R(theta) coefficients: JSON {\"a0\",\"cos\",\"sin\"} or a0,c1,s1,c2,s2,...");
    sub->add_option("--f", c.f, "forcing f (expression; see grammar below)");
    sub->add_option("--g", c.g, "boundary flux g (expression)");
    sub->add_option("--alpha", c.alpha, "Hölder exponent in (0, 1)");
    sub->add_option("--nr", c.nr, "radial cells");
    sub->add_option("--ntheta", c.ntheta, "angular nodes (even)");
    sub->add_option("--n", c.n, "cells of a 1D grid");
    sub->add_option("--strategy", c.strategy, "direct_augmented | fredholm_iteration | regularized");
    sub->add_option("--compat", c.compat, "reject | project");
    sub->add_option("--seed", c.seed, "random seed (default 0)");
    sub->add_option("--levels", c.levels, "refinement ladder, e.g. 32x64,64x128 or 32,64,128");
    sub->add_option("--out", c.out, "output directory");
    sub->add_option("--format", c.format, "json | csv | both")
        ->check(CLI::IsMember({"json", "csv", "both"}));
    sub->add_option("--tol-linear", c.tol_linear, "linear solve backward-error tolerance");
    sub->add_option("--tol-compat", c.tol_compat, "compatibility tolerance");
}

std::vector<double> parse_list(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(item, &used);
        } catch (const std::exception&) {
            throw ConfigError("not a number: '" + item + "'");
        }
        if (used != item.size()) throw ConfigError("not a number: '" + item + "'");
        out.push_back(v);
    }
    return out;
}

DomainSpec parse_domain(const std::string& text, Resolution* res) {
    if (text == "disk" || text == "star") return DomainSpec::disk();
    if (text == "interval") return DomainSpec::interval(0.0, 1.0);
    if (text.rfind("interval:", 0) == 0) {
        const std::vector<double> ab = parse_list(text.substr(9));
        if (ab.size() != 2) throw ConfigError("interval needs two bounds, e.g. interval:0,1");
        return DomainSpec::interval(ab[0], ab[1]);
    }
    if (fs::exists(text)) return domain_from_json(read_json_file(text), res);
    throw ConfigError("unknown domain '" + text + "'");
}

RadiusCoeffs parse_radius(const std::string& text) {
    RadiusCoeffs r;
    if (!text.empty() && text.front() == '{') {
        Json j;
        try {
            j = Json::parse(text);
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError(std::string("--radius-coeffs: ") + e.what());
        }
        Json dom{{"kind", "star"}, {"radius_coeffs", j}};
        return domain_from_json(dom).radius;
    }
    const std::vector<double> v = parse_list(text);
    if (v.empty()) throw ConfigError("--radius-coeffs needs at least a0");
    r.a0 = v[0];
    for (std::size_t k = 1; k < v.size(); k += 2) {
        r.cos.push_back(v[k]);
        r.sin.push_back(k + 1 < v.size() ? v[k + 1] : 0.0);
    }
    return r;
}

std::vector<Resolution> parse_levels(const std::string& text, int dim) {
    std::vector<Resolution> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        Resolution r;
        const auto x = item.find('x');
        try {
            if (x == std::string::npos) {
                r.n_r = std::stoi(item);
                r.n_theta = dim == 1 ? 1 : 2 * r.n_r;
            } else {
                r.n_r = std::stoi(item.substr(0, x));
                r.n_theta = std::stoi(item.substr(x + 1));
            }
        } catch (const std::exception&) {
            throw ConfigError("bad refinement level '" + item + "'");
        }
        out.push_back(r);
    }
    if (out.empty()) throw ConfigError("--levels must name at least one level");
    return out;
}

ProblemConfig resolve_problem(const Common& c) {
    ProblemConfig p;
    if (c.given("--problem")) p = load_problem(c.problem);
    if (c.given("--domain")) p.domain = parse_domain(c.domain, &p.resolution);
    if (c.given("--radius-coeffs")) {
        p.domain.kind = DomainKind::star_shaped;
        p.domain.radius = parse_radius(c.radius_coeffs);
        validate(p.domain);
    }
    if (c.given("--f")) p.f = c.f;
    if (c.given("--g")) p.g = c.g;
    if (c.given("--alpha")) p.alpha = c.alpha;
    if (c.given("--strategy")) p.strategy = parse_strategy(c.strategy);
    if (c.given("--compat")) p.compat = parse_compat_policy(c.compat);
    if (p.domain.dim() == 1) {
        if (c.given("--n")) p.resolution.n_r = c.n;
        else if (c.given("--nr")) p.resolution.n_r = c.nr;
        else if (!c.given("--problem")) p.resolution.n_r = c.n;
        p.resolution.n_theta = 1;
    } else {
        if (c.given("--nr")) p.resolution.n_r = c.nr;
        if (c.given("--ntheta")) p.resolution.n_theta = c.ntheta;
    }
    if (!(p.alpha > 0.0 && p.alpha < 1.0)) throw InvalidExponent("--alpha must lie in (0, 1)");
    return p;
}

SolverOptions solver_options(const Common& c) {
    SolverOptions o;
    o.tol_linear = c.tol_linear;
    o.tol_compat = c.tol_compat;
    if (!(o.tol_linear > 0.0) || !(o.tol_compat > 0.0)) throw ConfigError("tolerances must be positive");
    return o;
}

std::string path_in(const Common& c, const std::string& name) { return (fs::path(c.out) / name).string(); }

Json problem_json(const ProblemConfig& p) {
    Json j{{"domain", to_json(p.domain, p.resolution)},
           {"f", p.f},
           {"g", p.g},
           {"alpha", p.alpha},
           {"strategy", to_string(p.strategy)},
           {"compat_policy", to_string(p.compat)}};
    if (p.exact) j["exact"] = *p.exact;
    return j;
}

// Observed orders between consecutive levels, or "exact" once every error is
// at rounding level.
Json observed_orders(const std::vector<double>& h, const std::vector<double>& errors) {
    if (errors.size() < 2) return Json::array();
    if (*std::max_element(errors.begin(), errors.end()) <= 1e-10) return "exact";
    Json orders = Json::array();
    for (std::size_t k = 1; k < errors.size(); ++k) {
        orders.push_back(std::log(errors[k - 1] / errors[k]) / std::log(h[k - 1] / h[k]));
    }
    return orders;
}

// ---------------------------------------------------------------------------

int cmd_solve(const Common& c, const std::string& exact_text, std::ostream& out, std::ostream& err) {
    ProblemConfig p = resolve_problem(c);
    if (!exact_text.empty()) p.exact = exact_text;
    SolverOptions opts = solver_options(c);
    opts.compat = p.compat;
    const MeshPtr mesh = build_mesh(p.domain, p.resolution);
    const GridFunction f = sample(mesh, Expr::parse(p.f));
    const BoundaryFunction g = sample_boundary(mesh, Expr::parse(p.g));
    std::optional<GridFunction> exact;
    if (p.exact) exact = sample(mesh, Expr::parse(*p.exact));

    Json j{{"problem", problem_json(p)}};
    SolveReport rep{GridFunction(mesh)};
    try {
        rep = NeumannSolver(mesh, opts).neumann(f, g, p.strategy);
    } catch (const IncompatibleData& e) {
        j["status"] = "incompatible";
        j["compatibility_defect"] = e.defect();
        write_atomic(path_in(c, "solve_report.json"), j.dump(2) + "\n");
        err << "error: " << e.what() << "\n";
        err << "compatibility defect delta = " << fmt(e.defect()) << " (use --compat project to remove it)\n";
        return incompatible_data;
    }
    j["status"] = "ok";
    j.update(to_json(rep, exact));
    if (c.want_json()) write_atomic(path_in(c, "solve_report.json"), j.dump(2) + "\n");
    if (c.want_csv()) {
        std::ostringstream csv;
        write_csv(rep.solution, csv);
        write_atomic(path_in(c, "solution.csv"), csv.str());
    }
    out << "solved " << to_string(rep.strategy) << " on " << mesh->size() << " nodes: residual "
        << fmt(rep.residual) << ", iterations " << rep.iterations << ", delta " << fmt(rep.compatibility_defect)
        << ", sup|u| " << fmt(rep.solution.sup_norm());
    if (exact) out << ", error vs exact " << fmt(j["error_vs_exact"].get<double>());
    out << "\n";
    return ok;
}

struct VerifyExtras {
    std::string family = "random_trigonometric";
    int count = 20;
    double amplitude = 1.0;
    int threads = 0;
    std::string alphas;
};

int cmd_verify(const Common& c, const VerifyExtras& v, std::ostream& out, std::ostream& err) {
    SuiteConfig cfg;
    if (c.given("--problem") || c.given("--domain") || c.given("--radius-coeffs")) {
        cfg.domain = resolve_problem(c).domain;
    }
    if (c.given("--levels")) cfg.levels = parse_levels(c.levels, cfg.domain.dim());
    cfg.family.kind = parse_family_kind(v.family);
    cfg.family.seed = c.seed;
    cfg.family.count = v.count;
    cfg.family.amplitude = v.amplitude;
    if (c.given("--alpha")) cfg.alpha = c.alpha;
    if (!v.alphas.empty()) cfg.alphas = parse_list(v.alphas);
    cfg.solver = solver_options(c);
    cfg.threads = v.threads;

    const EstimateReport rep = run_suite(cfg);
    for (const std::string& w : rep.warnings) err << "warning: " << w << "\n";
    const Json j = to_json(rep);
    if (c.want_json()) write_atomic(path_in(c, "estimate_report.json"), j.dump(2) + "\n");
    if (c.want_csv()) write_atomic(path_in(c, "estimate_report.csv"), estimate_csv(j));
    std::vector<int> failing;
    for (const CriterionResult& k : rep.criteria) {
        out << "[" << (k.skipped ? "SKIP" : k.passed ? "PASS" : "FAIL") << "] " << k.id << " " << k.name
            << ": " << k.detail << "\n";
        if (!k.passed) failing.push_back(k.id);
    }
    if (failing.empty()) return ok;
    err << "failing criteria:";
    for (int id : failing) err << " " << id;
    err << "\n";
    return criteria_failed;
}

int cmd_sweep(const Common& c, const std::string& exact_text, std::ostream& out, std::ostream&) {
    ProblemConfig p = resolve_problem(c);
    if (!exact_text.empty()) p.exact = exact_text;
    SolverOptions opts = solver_options(c);
    opts.compat = p.compat;
    const std::vector<Resolution> levels =
        c.given("--levels") ? parse_levels(c.levels, p.domain.dim())
                            : parse_levels(p.domain.dim() == 1 ? "32,64,128" : "32x64,64x128,128x256", p.domain.dim());
    const Expr fe = Expr::parse(p.f), ge = Expr::parse(p.g);

    Json rows = Json::array();
    std::vector<double> hs, errors;
    for (const Resolution& r : levels) {
        const MeshPtr mesh = build_mesh(p.domain, r);
        const GridFunction f = sample(mesh, fe);
        const BoundaryFunction g = sample_boundary(mesh, ge);
        const SolveReport rep = NeumannSolver(mesh, opts).neumann(f, g, p.strategy);
        GridFunction fp = f;
        fp -= check_compatibility(f, g) / mesh->area();
        Json row{{"n_r", r.n_r}, {"n_theta", r.n_theta}, {"h", mesh->h_s()}, {"nodes", mesh->size()},
                 {"residual", rep.residual}, {"iterations", rep.iterations},
                 {"compatibility_defect", rep.compatibility_defect},
                 {"sup_norm", rep.solution.sup_norm()},
                 {"energy_defect", energy_identity_defect(rep.solution, rep.projected ? fp : f, g)}};
        if (p.strategy != Strategy::regularized && mesh->dim() == 2) {
            row["schauder_ratio"] = schauder_ratio(rep.solution, rep.projected ? fp : f, g, p.alpha);
        }
        if (p.exact) {
            const GridFunction ex = sample(mesh, Expr::parse(*p.exact));
            const double e = (rep.solution - subtract_mean(ex)).sup_norm();
            row["error_vs_exact"] = e;
            hs.push_back(mesh->h_s());
            errors.push_back(e);
        }
        out << "level " << r.n_r << "x" << r.n_theta << ": sup|u| " << fmt(rep.solution.sup_norm());
        if (row.contains("error_vs_exact")) out << ", error " << fmt(row["error_vs_exact"].get<double>());
        out << "\n";
        rows.push_back(row);
    }
    const Json orders = observed_orders(hs, errors);
    if (!orders.empty()) out << "observed orders " << orders.dump() << "\n";
    const Json j{{"problem", problem_json(p)}, {"levels", rows}, {"orders", orders}};
    if (c.want_json()) write_atomic(path_in(c, "sweep_report.json"), j.dump(2) + "\n");
    if (c.want_csv()) {
        std::ostringstream csv;
        csv << "n_r,n_theta,h,residual,iterations,sup_norm,energy_defect,error_vs_exact\n";
        for (const Json& r : rows) {
            csv << r["n_r"] << ',' << r["n_theta"] << ',' << r["h"] << ',' << r["residual"] << ','
                << r["iterations"] << ',' << r["sup_norm"] << ',' << r["energy_defect"] << ','
                << (r.contains("error_vs_exact") ? r["error_vs_exact"].dump() : "") << "\n";
        }
        write_atomic(path_in(c, "sweep_report.csv"), csv.str());
    }
    return ok;
}

int cmd_oracle1d(const Common& c, std::ostream& out, std::ostream&) {
    struct Case {
        std::string name;
        Polynomial f;
        double g0, g1;
    };
    std::vector<Case> cases;
    if (c.given("--f") || c.given("--g")) {
        const std::vector<double> coeffs = parse_list(c.given("--f") ? c.f : "0");
        const std::vector<double> g = parse_list(c.given("--g") ? c.g : "0,0");
        if (g.size() != 2) throw ConfigError("--g for oracle1d takes two values g0,g1");
        cases.push_back({"custom", Polynomial{coeffs}, g[0], g[1]});
    } else {
        cases.push_back({"quadratic f=2 g=(1,1)", Polynomial{{2.0}}, 1.0, 1.0});
        cases.push_back({"cubic f=6x-3 g=(0,0)", Polynomial{{-3.0, 6.0}}, 0.0, 0.0});
    }
    double a = 0.0, b = 1.0;
    if (c.given("--domain")) {
        const DomainSpec d = parse_domain(c.domain, nullptr);
        if (d.dim() != 1) throw ConfigError("oracle1d needs an interval domain");
        a = d.a;
        b = d.b;
    }
    std::vector<int> sizes;
    if (c.given("--levels")) {
        for (const Resolution& r : parse_levels(c.levels, 1)) sizes.push_back(r.n_r);
    } else if (c.given("--n")) {
        sizes.push_back(c.n);
    } else {
        sizes = {32, 64, 128};
    }
    SolverOptions opts = solver_options(c);

    Json results = Json::array();
    double worst = 0.0;
    for (const Case& k : cases) {
        Json levels = Json::array();
        std::vector<double> errs;
        for (int n : sizes) {
            const double d = oracle1d_discrepancy(k.f, k.g0, k.g1, n, a, b, opts);
            errs.push_back(d);
            worst = std::max(worst, d);
            levels.push_back({{"n", n}, {"discrepancy", d}});
        }
        std::vector<double> hs;
        for (int n : sizes) hs.push_back((b - a) / n);
        const Json orders = observed_orders(hs, errs);
        out << k.name << ": discrepancy per level";
        for (double e : errs) out << " " << fmt(e);
        if (!orders.empty()) out << ", orders " << orders.dump();
        out << "\n";
        results.push_back({{"case", k.name}, {"f", k.f.coeffs}, {"g", {k.g0, k.g1}}, {"levels", levels}, {"orders", orders}});
    }
    out << "max discrepancy " << fmt(worst) << "\n";
    const Json j{{"interval", {a, b}}, {"cases", results}, {"max_discrepancy", worst}};
    if (c.want_json()) write_atomic(path_in(c, "oracle1d_report.json"), j.dump(2) + "\n");
    if (c.want_csv()) {
        std::ostringstream csv;
        csv << "case,n,discrepancy\n";
        for (const Json& r : results) {
            for (const Json& l : r["levels"]) csv << r["case"].get<std::string>() << ',' << l["n"] << ',' << l["discrepancy"] << "\n";
        }
        write_atomic(path_in(c, "oracle1d_report.csv"), csv.str());
    }
    return ok;
}

int cmd_report(const Common& c, const std::string& in, const std::string& compare, std::ostream& out,
               std::ostream& err) {
    if (in.empty()) throw ConfigError("report needs --in <estimate_report.json>");
    const Json j = read_json_file(in);
    if (!compare.empty()) {
        const Json other = read_json_file(compare);
        if (strip_metadata(j) == strip_metadata(other)) {
            out << "reports match (metadata ignored)\n";
            return ok;
        }
        err << "reports differ\n";
        return criteria_failed;
    }
    if (!j.contains("records")) throw ConfigError("'" + in + "' is not an estimate report");
    if (c.want_json()) write_atomic(path_in(c, "estimate_report.json"), j.dump(2) + "\n");
    if (c.want_csv()) write_atomic(path_in(c, "estimate_report.csv"), estimate_csv(j));
    for (const Json& k : j.at("criteria")) {
        out << "[" << (k.value("skipped", false) ? "SKIP" : k.at("passed").get<bool>() ? "PASS" : "FAIL") << "] "
            << k.at("id") << " " << k.at("name").get<std::string>() << "\n";
    }
    return ok;
}

}  // namespace

std::string grammar_help() {
    return R"(Expressions for --f and --g:
  expr   := term (('+' | '-') term)*
  term   := factor (('*' | '/') factor)*
  factor := base ('^' factor)?
  base   := number | ident | '(' expr ')' | '-' factor | func '(' expr ')'
  ident  := x | y | r | theta | s | pi | e
  func   := sin | cos | exp | log | abs | sqrt
'^' is right-associative and binds tighter than unary minus ("-2^2" = -4).
There is no implicit multiplication ("2x" is an error). r and theta are polar
coordinates; s in [0, 1] is the mapped radial coordinate (s = 1 on the boundary).

For oracle1d, --f lists ascending polynomial coefficients (e.g. "-3,6" is
6x - 3) and --g lists the outward fluxes "g0,g1".

Exit codes: 0 ok, 1 failing criteria, 2 incompatible data, 3 solver failure,
4 configuration or input error.)";
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"neumann_lab: finite-volume Neumann problems and a priori estimate checks"};
    app.footer(grammar_help());
    app.require_subcommand(1);

    Common solve_c, verify_c, sweep_c, oracle_c, report_c;
    std::string solve_exact, sweep_exact, report_in, report_compare;
    VerifyExtras extras;

    CLI::App* solve = app.add_subcommand("solve", "solve one Neumann problem");
    add_common(solve, solve_c);
    solve->add_option("--exact", solve_exact, "exact solution (expression) for error reporting");

    CLI::App* verify = app.add_subcommand("verify", "run the estimate suite over a problem family");
    add_common(verify, verify_c);
    verify->add_option("--family", extras.family, "random_trigonometric | manufactured_polynomial | special_cases");
    verify->add_option("--count", extras.count, "instances in the family");
    verify->add_option("--amplitude", extras.amplitude, "coefficient bound of random families");
    verify->add_option("--threads", extras.threads, "worker threads (default NEUMANN_LAB_THREADS or all cores)");
    verify->add_option("--alphas", extras.alphas, "Hölder exponents of the Schauder checks, e.g. 0.3,0.5,0.7");

    CLI::App* sweep = app.add_subcommand("sweep", "refinement ladder for one problem");
    add_common(sweep, sweep_c);
    sweep->add_option("--exact", sweep_exact, "exact solution (expression) for observed orders");

    CLI::App* oracle = app.add_subcommand("oracle1d", "compare the 1D solver with the closed-form oracle");
    add_common(oracle, oracle_c);

    CLI::App* report = app.add_subcommand("report", "re-render or compare estimate reports");
    add_common(report, report_c);
    report->add_option("--in", report_in, "estimate_report.json to read");
    report->add_option("--compare", report_compare, "second report; exit 0 iff equal outside metadata");

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return config_error;
    }

    try {
        if (*solve) return cmd_solve(solve_c, solve_exact, out, err);
        if (*verify) return cmd_verify(verify_c, extras, out, err);
        if (*sweep) return cmd_sweep(sweep_c, sweep_exact, out, err);
        if (*oracle) return cmd_oracle1d(oracle_c, out, err);
        if (*report) return cmd_report(report_c, report_in, report_compare, out, err);
    } catch (const IncompatibleData& e) {
        err << "error: " << e.what() << "\n";
        return incompatible_data;
    } catch (const LinearSolveFailure& e) {
        err << "solver failure: " << e.what() << "\n";
        return solver_failure;
    } catch (const NonConvergence& e) {
        err << "solver failure: " << e.what() << "\n";
        return solver_failure;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return config_error;
    }
    return config_error;
}

}  // namespace neumann::cli
