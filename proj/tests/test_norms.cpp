#include "support.hpp"

#include "neumann/errors.hpp"
#include "neumann/norms.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace neumann;
using neumann::test::pi;

namespace {

struct Oracle {
    double value = -1.0;
    Eigen::Index i = 0, j = 0;
};

// Straight double loop; strict improvement keeps the lexicographically first
// maximizing pair.
Oracle brute(const Eigen::MatrixX2d& pts, const Eigen::VectorXd& v, double alpha) {
    Oracle o;
    for (Eigen::Index i = 0; i < pts.rows(); ++i) {
        for (Eigen::Index j = i + 1; j < pts.rows(); ++j) {
            const double d2 = (pts.row(i) - pts.row(j)).squaredNorm();
            if (d2 == 0.0) continue;
            const double q = std::abs(v(i) - v(j)) / std::pow(d2, 0.5 * alpha);
            if (q > o.value) o = {q, i, j};
        }
    }
    return o;
}

Eigen::MatrixX2d line_points(int n) {
    Eigen::MatrixX2d p = Eigen::MatrixX2d::Zero(n + 1, 2);
    for (int k = 0; k <= n; ++k) p(k, 0) = static_cast<double>(k) / n;
    return p;
}

}  // namespace

TEST_CASE("seminorm of a constant is zero") {
    const PointSet ps = PointSet::euclidean(line_points(8));
    const auto r = holder_seminorm(ps, Eigen::VectorXd::Constant(9, 2.0), {0.5, 0, PairStrategy::pruned});
    CHECK(r.value == 0.0);
}

TEST_CASE("seminorm of v = x on [0, 1]") {
    const Eigen::MatrixX2d pts = line_points(10);
    const auto r = holder_seminorm(PointSet::euclidean(pts), pts.col(0), {0.5, 0, PairStrategy::brute_force});
    CHECK(r.value == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(r.witness[0] == 0);
    CHECK(r.witness[1] == 10);
}

TEST_CASE("seminorm of v = x^2 at h = 1/4") {
    const Eigen::MatrixX2d pts = line_points(4);
    const Eigen::VectorXd v = pts.col(0).array().square();
    const Oracle o = brute(pts, v, 0.5);
    // attained by the pair x = 1/4, y = 1: (x + y) |x - y|^(1/2)
    CHECK(o.value == doctest::Approx(1.25 * std::sqrt(0.75)).epsilon(1e-14));
    CHECK(o.value == doctest::Approx(1.0825317547305484).epsilon(1e-15));
    CHECK(o.i == 1);
    CHECK(o.j == 4);
    for (PairStrategy s : {PairStrategy::brute_force, PairStrategy::pruned}) {
        const auto r = holder_seminorm(PointSet::euclidean(pts), v, {0.5, 0, s});
        CHECK(r.value == o.value);
        CHECK(r.witness[0] == o.i);
        CHECK(r.witness[1] == o.j);
    }
}

TEST_CASE("pruned equals brute force bitwise on random fields") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 50 + 37 * trial;
        Eigen::MatrixX2d pts(n, 2);
        Eigen::VectorXd v(n);
        for (int k = 0; k < n; ++k) {
            pts(k, 0) = U(rng);
            pts(k, 1) = U(rng);
            v(k) = trial % 2 ? U(rng) : std::sin(3.0 * pts(k, 0)) + pts(k, 1) * pts(k, 1);
        }
        const double alpha = 0.1 + 0.04 * trial;
        const Oracle o = brute(pts, v, alpha);
        const PairIndex index(PointSet::euclidean(pts), 16);
        const auto p = index.seminorm(v, alpha, PairStrategy::pruned);
        const auto b = index.seminorm(v, alpha, PairStrategy::brute_force);
        CHECK(p.value == o.value);
        CHECK(b.value == o.value);
        CHECK(p.witness == b.witness);
        CHECK(p.witness[0] == o.i);
        CHECK(p.witness[1] == o.j);
        CHECK(p.pairs_evaluated <= b.pairs_evaluated);
    }
}

TEST_CASE("periodic metric uses the shorter arc") {
    const MeshPtr m = test::disk(8, 16);
    const PointSet ps = boundary_point_set(*m);
    const Eigen::Index last = ps.size() - 1;
    const double h = m->perimeter() / static_cast<double>(ps.size());
    CHECK(std::sqrt(ps.distance_squared(0, last)) == doctest::Approx(h).epsilon(1e-12));
}

TEST_CASE("witness attains the reported value") {
    std::mt19937_64 rng(5);
    const MeshPtr m = test::disk(16, 32);
    const PointSet ps = node_points(*m);
    std::normal_distribution<double> N;
    Eigen::VectorXd v(ps.size());
    for (auto& x : v) x = N(rng);
    const auto r = holder_seminorm(ps, v, {0.3, 0, PairStrategy::pruned});
    const auto [i, j] = r.witness;
    CHECK(r.value >= 0.0);
    CHECK(std::abs(v(i) - v(j)) / std::pow(ps.distance_squared(i, j), 0.15) == r.value);
}

TEST_CASE("argument validation") {
    const PointSet ps = PointSet::euclidean(line_points(4));
    const Eigen::VectorXd v = Eigen::VectorXd::LinSpaced(5, 0.0, 1.0);
    CHECK_THROWS_AS(holder_seminorm(ps, v, {0.0, 0, PairStrategy::pruned}), InvalidExponent);
    CHECK_THROWS_AS(holder_seminorm(ps, v, {1.0, 0, PairStrategy::pruned}), InvalidExponent);
    CHECK_THROWS_AS(holder_seminorm(PointSet::euclidean(Eigen::MatrixX2d::Zero(1, 2)), Eigen::VectorXd::Zero(1),
                                    {0.5, 0, PairStrategy::pruned}),
                    DegenerateInput);
    CHECK_THROWS_AS(holder_seminorm(PointSet::euclidean(Eigen::MatrixX2d::Zero(3, 2)), Eigen::VectorXd::Zero(3),
                                    {0.5, 0, PairStrategy::pruned}),
                    DegenerateInput);
    Eigen::VectorXd bad = v;
    bad(2) = std::nan("");
    CHECK_THROWS_AS(holder_seminorm(ps, bad, {0.5, 0, PairStrategy::pruned}), DegenerateInput);
}

TEST_CASE("C^{k,alpha} norms of simple fields") {
    const MeshPtr m = test::disk(64, 128);
    SUBCASE("constant") {
        const HolderReport r = c_k_alpha_norm(GridFunction::constant(m, 5.0), 2, 0.5);
        CHECK(r.total == 5.0);
        CHECK(r.sup_norms.size() == 3);
    }
    SUBCASE("u = x") {
        const HolderReport r = c_k_alpha_norm(GridFunction::sample(m, [](const NodeCoords& c) { return c.x; }), 1, 0.5);
        CHECK(r.sup_norms[0] == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(std::abs(r.sup_norms[1] - 1.0) <= 1e-3);
        CHECK(r.seminorm <= 1e-2);
        CHECK(std::abs(r.total - 2.0) <= 1e-2);
    }
    SUBCASE("u = r^2/4 - 1/8") {
        const HolderReport r =
            c_k_alpha_norm(GridFunction::sample(m, [](const NodeCoords& c) { return c.r * c.r / 4.0 - 0.125; }), 2, 0.5);
        CHECK(r.sup_norms[0] == doctest::Approx(0.125).epsilon(1e-12));
        CHECK(std::abs(r.sup_norms[1] - 0.5) <= 1e-3);
        CHECK(std::abs(r.sup_norms[2] - 0.5) <= 1e-2);
        CHECK(std::abs(r.total - 9.0 / 8.0) <= 0.05);
        CHECK(r.total >= r.sup_norms[0]);
    }
}

TEST_CASE("boundary norms") {
    const MeshPtr m = test::disk(16, 64);
    const BoundaryFunction g = BoundaryFunction::sample(m, [](const NodeCoords& c) { return std::cos(c.theta); });
    const HolderReport r = c_k_alpha_norm(g, 1, 0.5);
    CHECK(r.sup_norms[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(r.sup_norms[1] - 1.0) <= 1e-2);
    const BoundaryFunction dg = tangential_derivative(g);
    CHECK(std::abs(dg.values()(16) + 1.0) <= 1e-2);  // -sin(pi/2)
}

TEST_CASE("L2 norms") {
    const MeshPtr m = test::disk(64, 128);
    CHECK(l2_norm(GridFunction::constant(m, 0.0)) == 0.0);
    CHECK(std::abs(l2_norm(GridFunction::constant(m, 1.0)) - std::sqrt(pi)) <= 1e-3);
    const GridFunction u = GridFunction::sample(m, [](const NodeCoords& c) { return c.r * c.r / 4.0 - 0.125; });
    CHECK(std::abs(l2_norm(u) - std::sqrt(pi / 192.0)) <= 1e-3);
    CHECK(lp_norm(u, 2.0) == doctest::Approx(l2_norm(u)).epsilon(1e-12));
    CHECK_THROWS_AS(lp_norm(u, 0.5), InvalidExponent);
}
