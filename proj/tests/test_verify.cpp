#include "support.hpp"

#include "neumann/errors.hpp"
#include "neumann/verify.hpp"

#include <doctest.h>

#include <atomic>
#include <cmath>
#include <stdexcept>

using namespace neumann;
using neumann::test::pi;

namespace {

const std::vector<Resolution> kLadder{{16, 32}, {32, 64}, {64, 128}};

Poly2 poly(std::initializer_list<std::pair<const std::pair<int, int>, double>> terms) { return Poly2{terms}; }

SolveReport solve_projected(const GridFunction& f, const BoundaryFunction& g) {
    SolverOptions opt;
    opt.compat = CompatPolicy::project;
    return solve_neumann(f, g, Strategy::direct_augmented, opt);
}

struct Triple {
    GridFunction u, f;
    BoundaryFunction g;
};

Triple disk_case(int n_r) {
    const MeshPtr m = test::disk(n_r, 2 * n_r);
    const GridFunction f = GridFunction::constant(m, 1.0);
    const BoundaryFunction g = BoundaryFunction::constant(m, 0.5);
    return {solve_projected(f, g).solution, f, g};
}

}  // namespace

TEST_CASE("polynomial helper") {
    const Poly2 p = poly({{{3, 0}, 1.0}, {{1, 2}, -3.0}});
    CHECK(p(2.0, 1.0) == 2.0);
    for (double x : {0.3, -1.2}) CHECK(p.laplacian()(x, 0.7) == 0.0);
    CHECK(p.dx()(1.0, 1.0) == 0.0);  // 3x^2 - 3y^2
    CHECK(p.dy()(1.0, 1.0) == -6.0);
    const Poly2 q = poly({{{2, 0}, 0.25}, {{0, 2}, 0.25}});
    CHECK(q.domain_mean(DomainSpec::disk()) == doctest::Approx(0.125).epsilon(1e-14));
    // mean of x^2 over R = 1 + 0.2 cos 2 theta: (1/|O|) int R^4/4 cos^2
    const DomainSpec star = DomainSpec::star(1.0, {0.0, 0.2}, {});
    const double area = pi * (1.0 + 0.02);
    const int n = 1 << 14;
    double acc = 0.0;
    for (int k = 0; k < n; ++k) {
        const double t = 2.0 * pi * k / n;
        acc += std::pow(1.0 + 0.2 * std::cos(2.0 * t), 4) / 4.0 * std::cos(t) * std::cos(t);
    }
    acc *= 2.0 * pi / n;
    CHECK(poly({{{2, 0}, 1.0}}).domain_mean(star) == doctest::Approx(acc / area).epsilon(1e-12));
}

TEST_CASE("energy identity") {
    SUBCASE("zero triple") {
        const MeshPtr m = test::disk(8, 16);
        CHECK(energy_identity_defect(GridFunction::constant(m, 0.0), GridFunction::constant(m, 0.0),
                                     BoundaryFunction::constant(m, 0.0)) == 0.0);
    }
    SUBCASE("disk case: both sides equal pi/8") {
        const Triple t = disk_case(64);
        const auto du = gradient(t.u);
        GridFunction e2 = du[0];
        e2.interior() = du[0].interior().cwiseAbs2() + du[1].interior().cwiseAbs2();
        CHECK(std::abs(integrate_volume(e2) - pi / 8.0) <= 1e-3);
        CHECK(std::abs(integrate_boundary(BoundaryFunction(t.u.mesh_ptr(), t.u.boundary().cwiseProduct(t.g.values()))) -
                       pi / 8.0) <= 1e-3);
        CHECK(energy_identity_defect(t.u, t.f, t.g) <= 1e-3);
    }
    SUBCASE("defect decreases under refinement") {
        double prev = 0.0;
        for (int n_r : {16, 32, 64}) {
            const Triple t = disk_case(n_r);
            const double d = energy_identity_defect(t.u, t.f, t.g);
            if (n_r > 16 && prev > 1e-13) CHECK(test::log2_ratio(prev, d) >= 1.9);
            prev = d;
        }
    }
}

TEST_CASE("estimate ratios") {
    const Triple t = disk_case(64);
    const MeshPtr m = t.u.mesh_ptr();
    const GridFunction z = GridFunction::constant(m, 0.0);
    const BoundaryFunction zb = BoundaryFunction::constant(m, 0.0);

    SUBCASE("zero data is zero by convention") {
        CHECK(l2_lemma_ratio(z, z, zb, 0.5) == 0.0);
        CHECK(schauder_ratio(z, z, zb, 0.5) == 0.0);
        CHECK(intermediate_ratio(z, z, zb, 0.5) == 0.0);
        CHECK_THROWS_AS(schauder_ratio(t.u, z, zb, 0.5), DegenerateData);
    }
    SUBCASE("disk case") {
        const double s = schauder_ratio(t.u, t.f, t.g, 0.5);
        CHECK(std::abs(s - 0.75) <= 0.05 * 0.75);
        const double l2 = l2_lemma_ratio(t.u, t.f, t.g, 0.5);
        CHECK(std::isfinite(l2));
        CHECK(l2 > 0.0);
        CHECK(intermediate_ratio(t.u, t.f, t.g, 0.5) <= s);
        const DataNorms dn = data_norms(t.f, t.g, 0.5);
        CHECK(dn.f_c0alpha == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(dn.g_c1alpha == doctest::Approx(0.5).epsilon(1e-12));
    }
    SUBCASE("scaling invariance") {
        const double s1 = schauder_ratio(t.u, t.f, t.g, 0.5);
        const double s2 = schauder_ratio(2.0 * t.u, 2.0 * t.f, 2.0 * t.g, 0.5);
        CHECK(std::abs(s1 - s2) <= 1e-8);
        CHECK(std::abs(l2_lemma_ratio(t.u, t.f, t.g, 0.5) - l2_lemma_ratio(2.0 * t.u, 2.0 * t.f, 2.0 * t.g, 0.5)) <= 1e-8);
    }
}

TEST_CASE("local sup estimate") {
    const Triple t = disk_case(64);
    const MeshPtr m = t.u.mesh_ptr();
    const Eigen::Vector2d c = m->interior_points().row(0).transpose();
    const double r = serrin_local_ratio(t.u, t.f, c, 0.2, 3.0);
    CHECK(std::isfinite(r));
    CHECK(r > 0.0);
    CHECK(std::abs(serrin_local_ratio(-3.0 * t.u, -3.0 * t.f, c, 0.2, 3.0) - r) <= 1e-8);
    CHECK(serrin_local_ratio(GridFunction::constant(m, 0.0), GridFunction::constant(m, 0.0), c, 0.2, 3.0) == 0.0);
    CHECK_THROWS_AS(serrin_local_ratio(t.u, t.f, c, 0.2, 1.0), InvalidExponent);
    CHECK_THROWS_AS(serrin_local_ratio(t.u, t.f, c, 0.6, 3.0), BallNotContained);
}

TEST_CASE("boundary sup from the interior") {
    const Triple t = disk_case(32);
    for (double eps : {0.05, 0.1, 0.3}) CHECK(frontier_margin(t.u, eps) >= 0.0);
}

TEST_CASE("manufactured convergence") {
    SUBCASE("linear data is reproduced") {
        const ConvergenceStudy s = convergence_study(poly({{{1, 0}, 1.0}, {{0, 1}, -2.0}}), DomainSpec::disk(), kLadder);
        CHECK(s.exact);
        CHECK_FALSE(s.nonconvergence);
    }
    SUBCASE("r^2/4 on the disk") {
        const ConvergenceStudy s = convergence_study(poly({{{2, 0}, 0.25}, {{0, 2}, 0.25}}), DomainSpec::disk(), kLadder);
        CHECK_FALSE(s.nonconvergence);
        CHECK(s.orders.back() == doctest::Approx(2.0).epsilon(0.05));
    }
    SUBCASE("cubic on the disk") {
        const ConvergenceStudy s =
            convergence_study(poly({{{3, 0}, 1.0}, {{1, 2}, 1.0}, {{0, 2}, -0.5}}), DomainSpec::disk(), kLadder);
        CHECK_FALSE(s.exact);
        CHECK(s.orders.back() >= 1.8);
        CHECK(s.orders.back() <= 2.3);
    }
    SUBCASE("cubic on a star domain") {
        const DomainSpec star = DomainSpec::star(1.0, {0.1, 0.15}, {0.0, 0.05});
        const ConvergenceStudy s = convergence_study(poly({{{3, 0}, 1.0}, {{1, 2}, -3.0}, {{1, 1}, 0.5}}), star, kLadder);
        CHECK_FALSE(s.exact);
        CHECK(s.orders.back() >= 1.8);
        CHECK(s.orders.back() <= 2.3);
    }
}

TEST_CASE("incompatibility probe") {
    const MeshPtr m = test::disk(32, 64);
    const GridFunction f = GridFunction::constant(m, 1.0);
    const BoundaryFunction g = BoundaryFunction::constant(m, 0.0);
    const ProbeResult p = incompatibility_probe(f, g);
    CHECK(p.rejected);
    CHECK(std::abs(p.delta - pi) <= 1e-3);
    CHECK(p.projected_residual <= 1e-10);
    const ProbeResult p2 = incompatibility_probe(2.0 * f, g);
    CHECK(std::abs(p2.delta - 2.0 * p.delta) <= 1e-12);
    CHECK_FALSE(incompatibility_probe(GridFunction::constant(m, 0.0), g).rejected);
}

TEST_CASE("1D oracle comparison") {
    CHECK(oracle1d_discrepancy({{2.0}}, 1.0, 1.0, 128) <= 1e-10);
    const double e1 = oracle1d_discrepancy({{-3.0, 6.0}}, 0.0, 0.0, 32);
    const double e2 = oracle1d_discrepancy({{-3.0, 6.0}}, 0.0, 0.0, 64);
    CHECK(test::log2_ratio(e1, e2) == doctest::Approx(2.0).epsilon(0.075));
    CHECK_THROWS_AS(oracle1d_discrepancy({{1.0}}, 0.0, 0.0, 32), IncompatibleData);
}

TEST_CASE("problem families") {
    ProblemFamily fam;
    fam.seed = 42;
    fam.count = 5;
    const auto a = fam.instances();
    const auto b = fam.instances();
    REQUIRE(a.size() == 5);
    for (std::size_t k = 0; k < a.size(); ++k) {
        CHECK(a[k].f_text == b[k].f_text);
        CHECK(a[k].g_text == b[k].g_text);
    }
    fam.seed = 43;
    CHECK(fam.instances()[0].f_text != a[0].f_text);

    fam.count = 0;
    CHECK_THROWS_AS(fam.instances(), ConfigError);
    CHECK(parse_family_kind(to_string(FamilyKind::special_cases)) == FamilyKind::special_cases);

    ProblemFamily mf;
    mf.kind = FamilyKind::manufactured_polynomial;
    mf.count = 4;
    const MeshPtr m = test::disk(64, 128);
    for (const ProblemInstance& inst : mf.instances()) {
        REQUIRE(inst.exact.has_value());
        const GridFunction f = inst.make_f(m);
        const BoundaryFunction g = inst.make_g(m);
        CHECK(std::abs(check_compatibility(f, g)) <= 1e-2 * (1.0 + f.sup_norm() + g.sup_norm()));
    }
}

TEST_CASE("seminorm oracle and norm axioms") {
    const SeminormOracleResult s = seminorm_oracle_check(1, 10, 1500);
    CHECK(s.fields == 10);
    CHECK(s.mismatches == 0);
    const NormAxiomResult n = norm_axiom_check(1, 20);
    CHECK(n.pairs == 20);
    CHECK(n.homogeneity_failures == 0);
    CHECK(n.triangle_failures == 0);
    CHECK(n.monotonicity_failures == 0);
}

TEST_CASE("parallel_for") {
    std::atomic<int> sum{0};
    parallel_for(100, 4, [&](int i) { sum += i; });
    CHECK(sum == 4950);
    try {
        parallel_for(10, 3, [](int i) {
            if (i == 3 || i == 7) throw std::runtime_error(std::to_string(i));
        });
        FAIL("exception swallowed");
    } catch (const std::runtime_error& e) {
        CHECK(std::string(e.what()) == "3");
    }
}

TEST_CASE("suite configuration errors") {
    SuiteConfig c;
    c.levels = {{32, 64}, {16, 32}};
    CHECK_THROWS_AS(run_suite(c), ConfigError);
    c.levels = {{16, 32}};
    c.domain = DomainSpec::interval(0.0, 1.0);
    CHECK_THROWS_AS(run_suite(c), ConfigError);
    c.domain = DomainSpec::disk();
    c.family.count = 0;
    CHECK_THROWS_AS(run_suite(c), ConfigError);
}

TEST_CASE("small suite run") {
    SuiteConfig c;
    c.levels = {{16, 32}, {32, 64}};
    c.family.count = 3;
    c.oracle_points = 6;
    c.oracle_max_nodes = 1500;
    c.axiom_pairs = 10;
    const EstimateReport r = run_suite(c);
    CHECK(r.records.size() == 6);
    CHECK(r.levels.size() == 2);
    for (const InstanceRecord& x : r.records) {
        for (double v : x.schauder) CHECK(v >= 0.0);
        CHECK(x.l2_ratio >= 0.0);
    }
    CHECK(r.criteria.size() >= 13);
    for (int id : {2, 3, 4, 11, 12, 13}) CHECK_MESSAGE(r.criteria[id - 1].passed, r.criteria[id - 1].detail);

    c.levels = {{16, 32}};
    const EstimateReport single = run_suite(c);
    CHECK(single.criteria[0].skipped);
    CHECK_FALSE(single.warnings.empty());
}
