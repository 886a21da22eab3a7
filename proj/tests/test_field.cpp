#include "support.hpp"

#include "neumann/errors.hpp"

#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

using namespace neumann;
using neumann::test::pi;

namespace {

double x_of(const NodeCoords& c) { return c.x; }
double quarter_r2(const NodeCoords& c) { return c.r * c.r / 4.0; }

// Smooth non-polynomial field with random coefficients.
Sampler random_smooth(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    const double a = U(rng), b = U(rng), c = U(rng), d = U(rng);
    return [=](const NodeCoords& p) {
        return a * std::sin(2.0 * p.x + b) + c * std::cos(3.0 * p.y - d) + a * d * p.x * p.y;
    };
}

}  // namespace

TEST_CASE("gradient of a constant vanishes") {
    const MeshPtr m = test::disk(16, 32);
    for (const GridFunction& d : gradient(GridFunction::constant(m, 3.5))) {
        CHECK(d.sup_norm() <= 1e-12);
    }
}

TEST_CASE("gradient of u = x") {
    for (int nt : {16, 128, 256}) {
        const MeshPtr m = test::disk(nt / 2, nt);
        const auto g = gradient(GridFunction::sample(m, x_of));
        CHECK((g[0].interior().array() - 1.0).abs().maxCoeff() <= 1e-10);
        CHECK(g[1].interior().cwiseAbs().maxCoeff() <= 1e-10);
        CHECK((g[0].boundary().array() - 1.0).abs().maxCoeff() <= 1e-10);
    }
}

TEST_CASE("gradient of r^2/4 has radial component r/2") {
    double prev = 0.0;
    for (int level = 0; level < 3; ++level) {
        const MeshPtr m = test::disk(16 << level, 32 << level);
        const auto g = gradient(GridFunction::sample(m, quarter_r2));
        double err = 0.0;
        for (Eigen::Index k = 0; k < m->interior_size(); ++k) {
            const NodeCoords c = interior_coords(*m, k);
            const double radial = g[0].interior()(k) * std::cos(c.theta) + g[1].interior()(k) * std::sin(c.theta);
            err = std::max(err, std::abs(radial - c.r / 2.0));
        }
        CHECK(err <= 0.1 * std::pow(0.5, 2 * level));
        if (level > 0 && prev > 1e-12) CHECK(test::log2_ratio(prev, err) >= 1.8);
        prev = err;
    }
}

TEST_CASE("laplacian") {
    SUBCASE("constant") {
        const MeshPtr m = test::disk(16, 32);
        CHECK(laplacian(GridFunction::constant(m, 2.0)).interior().cwiseAbs().maxCoeff() <= 1e-11);
    }
    SUBCASE("r^2/4 on the disk") {
        const MeshPtr m = test::disk(32, 64);
        const GridFunction L = laplacian(GridFunction::sample(m, quarter_r2));
        CHECK((L.interior().array() - 1.0).abs().maxCoeff() <= 1e-2);
    }
    SUBCASE("x^2 on an interval is exact") {
        const MeshPtr m = test::unit_interval(32);
        const GridFunction L = laplacian(GridFunction::sample(m, [](const NodeCoords& c) { return c.x * c.x; }));
        CHECK((L.interior().array() - 2.0).abs().maxCoeff() <= 1e-10);
    }
}

TEST_CASE("normal derivative") {
    SUBCASE("r^2/4 on the disk is 1/2") {
        const MeshPtr m = test::disk(64, 128);
        const BoundaryFunction d = normal_derivative(GridFunction::sample(m, quarter_r2));
        CHECK((d.values().array() - 0.5).abs().maxCoeff() <= 1e-2);
    }
    SUBCASE("constant") {
        const MeshPtr m = test::disk(16, 32);
        CHECK(normal_derivative(GridFunction::constant(m, 1.0)).sup_norm() <= 1e-11);
    }
    SUBCASE("x^2 - x on an interval") {
        const MeshPtr m = test::unit_interval(16);
        const BoundaryFunction d =
            normal_derivative(GridFunction::sample(m, [](const NodeCoords& c) { return c.x * c.x - c.x; }));
        CHECK(d.values()(0) == doctest::Approx(1.0).epsilon(1e-10));
        CHECK(d.values()(1) == doctest::Approx(1.0).epsilon(1e-10));
    }
}

TEST_CASE("integrals and means") {
    const MeshPtr m = test::disk(64, 128);
    CHECK(std::abs(integrate_volume(GridFunction::constant(m, 1.0)) - pi) <= 1e-3);
    CHECK(std::abs(integrate_boundary(BoundaryFunction::constant(m, 0.5)) - pi) <= 1e-3);

    const GridFunction u = GridFunction::sample(m, quarter_r2);
    const GridFunction shifted = GridFunction::sample(m, [](const NodeCoords& c) { return c.r * c.r / 4.0 - 0.125; });
    CHECK((subtract_mean(u) - shifted).sup_norm() <= 1e-4);
    CHECK(std::abs(mean(subtract_mean(u))) <= 1e-15);
}

TEST_CASE("discrete divergence theorem holds for any field") {
    std::mt19937_64 rng(7);
    for (const DomainSpec& spec : {DomainSpec::disk(), DomainSpec::star(1.0, {0.1, 0.2}, {0.05})}) {
        const MeshPtr m = build_mesh(spec, {24, 48});
        for (int trial = 0; trial < 10; ++trial) {
            GridFunction u = GridFunction::sample(m, random_smooth(rng));
            if (trial % 2) u.interior() += Eigen::VectorXd::Random(m->interior_size());
            const double lhs = integrate_volume(laplacian(u));
            const double rhs = integrate_boundary(normal_derivative(u));
            const double scale = 1.0 + (laplacian(u).interior().cwiseAbs().array() *
                                        m->volume_weights().array()).sum();
            CHECK(std::abs(lhs - rhs) <= 1e-12 * scale);
        }
    }
}

TEST_CASE("mesh identity is enforced") {
    const MeshPtr a = test::disk(8, 16);
    const MeshPtr b = test::disk(8, 16);
    const GridFunction u = GridFunction::constant(a, 1.0);
    const GridFunction v = GridFunction::constant(b, 1.0);
    CHECK_THROWS_AS(u + v, MeshMismatch);
    CHECK_THROWS_AS(BoundaryFunction::constant(a, 1.0) + BoundaryFunction::constant(b, 1.0), MeshMismatch);
    CHECK_NOTHROW(u + GridFunction::constant(a, 2.0));
}

TEST_CASE("arithmetic keeps values finite") {
    std::mt19937_64 rng(3);
    const MeshPtr m = test::disk(12, 24);
    GridFunction u = GridFunction::sample(m, random_smooth(rng));
    const GridFunction v = GridFunction::sample(m, random_smooth(rng));
    u += v;
    u *= -2.5;
    u -= 1.0;
    const GridFunction w = 0.5 * u - v;
    CHECK(w.all_finite());
    CHECK(w.stacked().size() == m->size());
    CHECK(GridFunction::from_stacked(m, w.stacked()).stacked() == w.stacked());
}

TEST_CASE("csv output") {
    const MeshPtr m = test::unit_interval(4);
    std::ostringstream os;
    write_csv(GridFunction::constant(m, 1.0), os);
    const std::string text = os.str();
    CHECK(text.rfind("x,value,is_boundary\n", 0) == 0);
    CHECK(std::count(text.begin(), text.end(), '\n') == 1 + 4 + 2);
}
