#include "support.hpp"

#include "neumann/errors.hpp"
#include "neumann/solver.hpp"

#include <doctest.h>

#include <cmath>

using namespace neumann;
using neumann::test::pi;

namespace {

double quarter_r2_shifted(const NodeCoords& c) { return c.r * c.r / 4.0 - 0.125; }

// Exact integral of an ascending-coefficient polynomial over [a, b].
double integral(const std::vector<double>& c, double a, double b) {
    double s = 0.0;
    for (std::size_t k = 0; k < c.size(); ++k) {
        s += c[k] * (std::pow(b, k + 1.0) - std::pow(a, k + 1.0)) / (k + 1.0);
    }
    return s;
}

}  // namespace

TEST_CASE("compatibility defect") {
    const MeshPtr m = test::disk(64, 128);
    const GridFunction one = GridFunction::constant(m, 1.0);
    CHECK(std::abs(check_compatibility(one, BoundaryFunction::constant(m, 0.5))) <= 1e-3);
    CHECK(check_compatibility(GridFunction::constant(m, 0.0), BoundaryFunction::constant(m, 0.0)) == 0.0);
    const double delta = check_compatibility(one, BoundaryFunction::constant(m, 0.0));
    CHECK(std::abs(delta - pi) <= 1e-3);
    CHECK(std::abs(check_compatibility(2.0 * one, BoundaryFunction::constant(m, 0.0)) - 2.0 * delta) <= 1e-12);
}

TEST_CASE("regularized problem") {
    const MeshPtr m = test::disk(32, 64);
    SUBCASE("zero data") {
        const SolveReport r = solve_regularized(GridFunction::constant(m, 0.0), BoundaryFunction::constant(m, 0.0));
        CHECK(r.solution.sup_norm() == 0.0);
    }
    SUBCASE("constant solution") {
        const SolveReport r = solve_regularized(GridFunction::constant(m, -1.0), BoundaryFunction::constant(m, 0.0));
        CHECK((r.solution.interior().array() - 1.0).abs().maxCoeff() <= 1e-10);
        CHECK(r.residual <= 1e-10);
    }
    SUBCASE("manufactured") {
        const GridFunction f = GridFunction::sample(m, [](const NodeCoords& c) { return 9.0 / 8.0 - c.r * c.r / 4.0; });
        const SolveReport r = solve_regularized(f, BoundaryFunction::constant(m, 0.5));
        const GridFunction exact = GridFunction::sample(m, quarter_r2_shifted);
        CHECK(test::interior_gap(r.solution, exact) <= 1e-3);
    }
}

TEST_CASE("regularized mean equals the compatibility gap") {
    // integrating Lap u - u = f with the exact discrete divergence theorem:
    // |Omega| mean(u) = oint g - int f, whether or not the data are compatible
    const MeshPtr m = build_mesh(DomainSpec::star(1.0, {0.1}, {0.0, 0.1}), {24, 48});
    const GridFunction f = GridFunction::sample(m, [](const NodeCoords& c) { return std::exp(c.x) - c.y * c.y; });
    const BoundaryFunction g = BoundaryFunction::sample(m, [](const NodeCoords& c) { return std::sin(2.0 * c.theta) + 0.3; });
    const GridFunction u = solve_regularized(f, g).solution;
    const double gap = integrate_boundary(g) - integrate_volume(f);
    CHECK(std::abs(m->area() * mean(u) - gap) <= 1e-10 * (1.0 + std::abs(gap)));
}

TEST_CASE("compact operator T") {
    const MeshPtr m = test::disk(32, 64);
    const NeumannSolver solver(m);
    CHECK(solver.apply_T(GridFunction::constant(m, 0.0)).sup_norm() == 0.0);

    const GridFunction f = subtract_mean(GridFunction::sample(m, [](const NodeCoords& c) { return c.x; }));
    const GridFunction Tf = solver.apply_T(f);
    CHECK(std::abs(mean(Tf)) <= 1e-9);
    CHECK((solver.apply_T(2.0 * f) - 2.0 * Tf).sup_norm() <= 1e-9);

    CHECK_THROWS_AS(solver.apply_T(GridFunction::constant(m, 1.0)), NonZeroMeanInput);
}

TEST_CASE("Neumann problem on the disk") {
    const MeshPtr m = test::disk(64, 128);
    const GridFunction f = GridFunction::constant(m, 1.0);
    const BoundaryFunction g = BoundaryFunction::constant(m, 0.5);
    const GridFunction exact = subtract_mean(GridFunction::sample(m, quarter_r2_shifted));

    SolverOptions opt;
    opt.compat = CompatPolicy::project;
    const NeumannSolver solver(m, opt);
    for (Strategy s : {Strategy::direct_augmented, Strategy::fredholm_iteration}) {
        const SolveReport r = solver.neumann(f, g, s);
        CHECK(r.strategy == s);
        CHECK((r.solution - exact).sup_norm() <= 1e-3);
        CHECK(std::abs(mean(r.solution)) <= 1e-10 * (1.0 + r.solution.sup_norm()));
    }
    const SolveReport zero = solver.neumann(GridFunction::constant(m, 0.0), BoundaryFunction::constant(m, 0.0),
                                            Strategy::direct_augmented);
    CHECK(zero.solution.sup_norm() <= 1e-14);
}

TEST_CASE("strategies agree on a star domain") {
    const MeshPtr m = build_mesh(DomainSpec::star(1.0, {0.1, 0.15}, {0.05}), {24, 48});
    GridFunction f = GridFunction::sample(m, [](const NodeCoords& c) { return std::sin(2.0 * c.x) + c.y; });
    const BoundaryFunction g = BoundaryFunction::sample(m, [](const NodeCoords& c) { return std::cos(c.theta); });
    f -= check_compatibility(f, g) / m->area();
    const NeumannSolver solver(m);
    const SolveReport a = solver.neumann(f, g, Strategy::direct_augmented);
    const SolveReport b = solver.neumann(f, g, Strategy::fredholm_iteration);
    CHECK((a.solution - b.solution).sup_norm() <= 1e-8 * a.solution.sup_norm());
    CHECK(b.iterations > 0);
    CHECK(b.iterations <= 100);
}

TEST_CASE("compatibility policies") {
    const MeshPtr m = test::disk(32, 64);
    const GridFunction f = GridFunction::constant(m, 1.0);
    const BoundaryFunction g = BoundaryFunction::constant(m, 0.0);
    try {
        solve_neumann(f, g, Strategy::direct_augmented);
        FAIL("incompatible data accepted");
    } catch (const IncompatibleData& e) {
        CHECK(std::abs(e.defect() - pi) <= 1e-3);
    }
    SolverOptions opt;
    opt.compat = CompatPolicy::project;
    const SolveReport r = solve_neumann(f, g, Strategy::direct_augmented, opt);
    CHECK(r.projected);
    CHECK(std::abs(r.compatibility_defect - pi) <= 1e-3);
    CHECK(r.solution.sup_norm() <= 1e-10);
}

TEST_CASE("pinned solve differs from the mean-zero solve by a constant") {
    const MeshPtr m = test::disk(32, 64);
    const GridFunction f = GridFunction::constant(m, 1.0);
    const BoundaryFunction g = BoundaryFunction::constant(m, 0.5);
    SolverOptions opt;
    opt.compat = CompatPolicy::project;
    const NeumannSolver solver(m, opt);
    const GridFunction u = solver.neumann(f, g, Strategy::direct_augmented).solution;
    for (Eigen::Index node : {Eigen::Index{0}, Eigen::Index{500}}) {
        const GridFunction v = solver.pinned(f, g, node, 3.0).solution;
        CHECK(v.interior()(node) == doctest::Approx(3.0).epsilon(1e-12));
        const Eigen::VectorXd diff = (v - u).stacked();
        CHECK((diff.array() - diff.mean()).abs().maxCoeff() <= 1e-8);
    }
}

TEST_CASE("1D discrete solve matches the closed form") {
    const MeshPtr m = test::unit_interval(128);
    const GridFunction f = GridFunction::constant(m, 2.0);
    BoundaryFunction g(m, Eigen::Vector2d(1.0, 1.0));
    const SolveReport r = solve_neumann(f, g, Strategy::direct_augmented);
    const GridFunction exact =
        subtract_mean(GridFunction::sample(m, [](const NodeCoords& c) { return c.x * c.x - c.x + 1.0 / 6.0; }));
    CHECK((r.solution - exact).sup_norm() <= 1e-10);
}

TEST_CASE("closed-form 1D oracle") {
    SUBCASE("f = 2") {
        const Polynomial u = solve_1d_oracle({{2.0}}, 1.0, 1.0);
        CHECK(u(0.3) == doctest::Approx(0.09 - 0.3 + 1.0 / 6.0).epsilon(1e-14));
    }
    SUBCASE("zero data") {
        const Polynomial u = solve_1d_oracle({{0.0}}, 0.0, 0.0);
        for (double x : {0.0, 0.5, 1.0}) CHECK(u(x) == 0.0);
    }
    SUBCASE("f = 6x - 3") {
        const Polynomial u = solve_1d_oracle({{-3.0, 6.0}}, 0.0, 0.0);
        for (double x : {0.0, 0.2, 0.7, 1.0}) {
            CHECK(u(x) == doctest::Approx(x * x * x - 1.5 * x * x + 0.25).epsilon(1e-14));
        }
    }
    SUBCASE("general interval, independent checks") {
        const Polynomial f{{1.0, -2.0, 0.5}};
        const double a = -0.5, b = 2.0;
        const double total = integral(f.coeffs, a, b);
        const Polynomial u = solve_1d_oracle(f, 0.25, total - 0.25, a, b);
        const Polynomial u2 = u.derivative().derivative();
        for (double x : {-0.5, 0.1, 1.3}) CHECK(u2(x) == doctest::Approx(f(x)).epsilon(1e-12));
        CHECK(-u.derivative()(a) == doctest::Approx(0.25).epsilon(1e-12));
        CHECK(std::abs(integral(u.coeffs, a, b)) <= 1e-12);
    }
    CHECK_THROWS_AS(solve_1d_oracle({{1.0}}, 0.0, 0.0), IncompatibleData);
}

TEST_CASE("names round-trip") {
    for (Strategy s : {Strategy::direct_augmented, Strategy::fredholm_iteration, Strategy::regularized}) {
        CHECK(parse_strategy(to_string(s)) == s);
    }
    CHECK(parse_compat_policy("project") == CompatPolicy::project);
    CHECK_THROWS_AS(parse_strategy("nope"), ConfigError);
}
