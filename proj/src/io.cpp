#include "neumann/io.hpp"

#include "neumann/errors.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace neumann {

namespace fs = std::filesystem;

namespace {

template <class T>
T get_or(const Json& j, const char* key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("field '") + key + "': " + e.what());
    }
}

Json vec_json(const Eigen::Vector2d& v) { return Json::array({v(0), v(1)}); }

std::string csv_num(const Json& v) {
    if (v.is_null()) return "";
    if (v.is_boolean()) return v.get<bool>() ? "1" : "0";
    if (v.is_number_integer()) return std::to_string(v.get<long long>());
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v.get<double>());
    return buf;
}

}  // namespace

Json to_json(const DomainSpec& spec, const Resolution& res) {
    Json j;
    if (spec.kind == DomainKind::interval) {
        j["kind"] = "interval";
        j["a"] = spec.a;
        j["b"] = spec.b;
        j["resolution"] = Json::array({res.n_r});
        return j;
    }
    j["kind"] = "star";
    j["radius_coeffs"] = {{"a0", spec.radius.a0}, {"cos", spec.radius.cos}, {"sin", spec.radius.sin}};
    j["resolution"] = Json::array({res.n_r, res.n_theta});
    return j;
}

DomainSpec domain_from_json(const Json& j, Resolution* res) {
    if (j.is_string()) {
        const std::string name = j.get<std::string>();
        if (name == "disk") return DomainSpec::disk();
        if (name == "interval") return DomainSpec::interval(0.0, 1.0);
        throw ConfigError("unknown domain '" + name + "'");
    }
    if (!j.is_object()) throw ConfigError("domain must be an object or a name");
    const std::string kind = get_or<std::string>(j, "kind", "star");
    DomainSpec spec;
    if (kind == "interval") {
        spec = DomainSpec::interval(get_or(j, "a", 0.0), get_or(j, "b", 1.0));
    } else if (kind == "disk" || kind == "star" || kind == "star_shaped") {
        spec = DomainSpec::disk(get_or(j, "radius", 1.0));
        if (j.contains("radius_coeffs")) {
            const Json& rc = j.at("radius_coeffs");
            spec.radius.a0 = get_or(rc, "a0", 1.0);
            spec.radius.cos = get_or(rc, "cos", std::vector<double>{});
            spec.radius.sin = get_or(rc, "sin", std::vector<double>{});
        }
    } else {
        throw ConfigError("unknown domain kind '" + kind + "'");
    }
    if (res && j.contains("resolution")) {
        const auto r = get_or(j, "resolution", std::vector<int>{});
        if (r.empty() || r.size() > 2) throw ConfigError("resolution must be [n_r] or [n_r, n_theta]");
        res->n_r = r[0];
        if (r.size() == 2) res->n_theta = r[1];
    }
    validate(spec);
    return spec;
}

ProblemConfig problem_from_json(const Json& j) {
    if (!j.is_object()) throw ConfigError("problem file must hold a JSON object");
    ProblemConfig p;
    if (j.contains("domain")) p.domain = domain_from_json(j.at("domain"), &p.resolution);
    p.f = get_or(j, "f", p.f);
    p.g = get_or(j, "g", p.g);
    if (j.contains("exact")) p.exact = get_or<std::string>(j, "exact", "");
    p.alpha = get_or(j, "alpha", p.alpha);
    if (j.contains("strategy")) p.strategy = parse_strategy(get_or<std::string>(j, "strategy", ""));
    if (j.contains("compat_policy")) p.compat = parse_compat_policy(get_or<std::string>(j, "compat_policy", ""));
    return p;
}

ProblemConfig load_problem(const std::string& path) { return problem_from_json(read_json_file(path)); }

Json to_json(const HolderReport& r) {
    return {{"order", r.order},
            {"alpha", r.alpha},
            {"sup_norms", r.sup_norms},
            {"seminorm", r.seminorm},
            {"witness", Json::array({vec_json(r.witness[0]), vec_json(r.witness[1])})},
            {"total", r.total},
            {"pairs_evaluated", r.pairs_evaluated}};
}

Json to_json(const SolveReport& r, const std::optional<GridFunction>& exact) {
    const GridFunction& u = r.solution;
    Json j{{"strategy", to_string(r.strategy)},
           {"residual", r.residual},
           {"iterations", r.iterations},
           {"compatibility_defect", r.compatibility_defect},
           {"projected", r.projected},
           {"multiplier", r.multiplier},
           {"solution", {{"nodes", u.mesh().size()},
                         {"sup_norm", u.sup_norm()},
                         {"l2_norm", l2_norm(u)},
                         {"mean", mean(u)}}}};
    if (exact) j["error_vs_exact"] = (u - subtract_mean(*exact)).sup_norm();
    j["metadata"] = {{"wall_time_seconds", r.wall_time_seconds}};
    return j;
}

Json to_json(const EstimateReport& r) {
    const SuiteConfig& c = r.config;
    Json levels = Json::array();
    for (const Resolution& l : c.levels) levels.push_back({l.n_r, l.n_theta});
    Json j;
    j["config"] = {{"domain", to_json(c.domain, c.levels.front())},
                   {"levels", levels},
                   {"family", {{"kind", to_string(c.family.kind)},
                               {"seed", c.family.seed},
                               {"count", c.family.count},
                               {"amplitude", c.family.amplitude}}},
                   {"alpha", c.alpha},
                   {"alphas", c.alphas},
                   {"serrin_radii", c.serrin_radii},
                   {"frontier_eps", c.frontier_eps},
                   {"solver", {{"tol_linear", c.solver.tol_linear},
                               {"tol_compat", c.solver.tol_compat},
                               {"krylov_restart", c.solver.krylov_restart},
                               {"krylov_max_iterations", c.solver.krylov_max_iterations},
                               {"krylov_tol", c.solver.krylov_tol}}}};
    Json inst = Json::array();
    for (const InstanceInfo& i : r.instances) {
        inst.push_back({{"index", i.index}, {"label", i.label}, {"f", i.f_text}, {"g", i.g_text}});
    }
    j["instances"] = inst;

    Json recs = Json::array();
    for (const InstanceRecord& x : r.records) {
        const Resolution& res = c.levels[x.level];
        Json row{{"instance", x.instance}, {"level", x.level}, {"n_r", res.n_r},
                 {"n_theta", res.n_theta}, {"h", x.h}};
        Json sch, inter, ser;
        for (std::size_t a = 0; a < c.alphas.size(); ++a) {
            sch.push_back(x.schauder[a]);
            inter.push_back(x.intermediate[a]);
        }
        for (double v : x.serrin) ser.push_back(v);
        row["ratio_schauder"] = sch;
        row["ratio_intermediate"] = inter;
        row["ratio_l2"] = x.l2_ratio;
        row["energy_defect"] = x.energy_defect;
        row["serrin_ratio"] = ser;
        row["max_principle_ratio"] = x.max_principle_ratio;
        row["uniqueness_spread"] = x.uniqueness_spread;
        row["strategy_disagreement"] = x.strategy_disagreement;
        row["krylov_iterations"] = x.krylov_iterations;
        row["frontier_margin"] = x.frontier_margin;
        row["passed"] = x.passed;
        recs.push_back(row);
    }
    j["records"] = recs;

    Json lv = Json::array();
    for (const LevelSummary& s : r.levels) {
        lv.push_back({{"n_r", s.resolution.n_r},
                      {"n_theta", s.resolution.n_theta},
                      {"h", s.h},
                      {"family_max", s.family_max},
                      {"family_median", s.family_median}});
    }
    j["levels"] = lv;
    j["measured_constants"] = r.measured_constants;
    Json crit = Json::array();
    for (const CriterionResult& k : r.criteria) {
        crit.push_back({{"id", k.id}, {"name", k.name}, {"passed", k.passed}, {"skipped", k.skipped}, {"detail", k.detail}});
    }
    j["criteria"] = crit;
    j["warnings"] = r.warnings;
    j["all_passed"] = r.all_passed();

    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char stamp[32];
    std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    j["metadata"] = {{"generated_at", stamp}, {"wall_time_seconds", r.wall_time_seconds}, {"timings", r.timings}};
    return j;
}

std::string estimate_csv(const Json& report) {
    const Json& cfg = report.at("config");
    const auto alphas = cfg.at("alphas").get<std::vector<double>>();
    const auto radii = cfg.at("serrin_radii").get<std::vector<double>>();
    const std::string seed = csv_num(cfg.at("family").at("seed"));
    auto suffix = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%g", v);
        return std::string(buf);
    };

    std::ostringstream os;
    os << "seed,instance,level,n_r,n_theta,h";
    for (double a : alphas) os << ",ratio_schauder_a" << suffix(a);
    for (double a : alphas) os << ",ratio_intermediate_a" << suffix(a);
    os << ",ratio_l2,energy_defect";
    for (double R : radii) os << ",serrin_ratio_R" << suffix(R);
    os << ",max_principle_ratio,uniqueness_spread,strategy_disagreement,krylov_iterations,frontier_margin,passed\n";
    for (const Json& r : report.at("records")) {
        os << seed << ',' << csv_num(r.at("instance")) << ',' << csv_num(r.at("level")) << ','
           << csv_num(r.at("n_r")) << ',' << csv_num(r.at("n_theta")) << ',' << csv_num(r.at("h"));
        for (const Json& v : r.at("ratio_schauder")) os << ',' << csv_num(v);
        for (const Json& v : r.at("ratio_intermediate")) os << ',' << csv_num(v);
        os << ',' << csv_num(r.at("ratio_l2")) << ',' << csv_num(r.at("energy_defect"));
        for (const Json& v : r.at("serrin_ratio")) os << ',' << csv_num(v);
        for (const char* k : {"max_principle_ratio", "uniqueness_spread", "strategy_disagreement",
                              "krylov_iterations", "frontier_margin", "passed"}) {
            os << ',' << csv_num(r.at(k));
        }
        os << '\n';
    }
    return os.str();
}

Json strip_metadata(Json report) {
    report.erase("metadata");
    return report;
}

Json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open '" + path + "'");
    try {
        return Json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("invalid JSON in '" + path + "': " + e.what());
    }
}

void write_atomic(const std::string& path, const std::string& content) {
    const fs::path target(path);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    fs::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw ConfigError("cannot write '" + tmp.string() + "'");
        out << content;
        out.flush();
        if (!out) throw ConfigError("write failed for '" + tmp.string() + "'");
    }
    fs::rename(tmp, target);
}

}  // namespace neumann
