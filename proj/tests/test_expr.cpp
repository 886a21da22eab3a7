#include "support.hpp"

#include "neumann/errors.hpp"
#include "neumann/expr.hpp"

#include <doctest.h>

#include <cmath>
#include <random>
#include <string>

using namespace neumann;
using neumann::test::pi;

namespace {

double at_origin(const char* text) { return Expr::parse(text).eval({}); }

NodeCoords polar(double r, double theta) {
    return {r * std::cos(theta), r * std::sin(theta), r, theta, r};
}

std::string random_expr(std::mt19937_64& rng, int depth) {
    static const char* leaves[] = {"x", "y", "r", "theta", "s", "pi", "e", "2", "0.5", "1e-3", "3.25"};
    static const char* funcs[] = {"sin", "cos", "exp", "log", "abs", "sqrt"};
    static const char* ops[] = {"+", "-", "*", "/", "^"};
    std::uniform_int_distribution<int> pick(0, 9);
    const int k = depth <= 0 ? 0 : pick(rng);
    if (k < 3) return leaves[rng() % std::size(leaves)];
    if (k < 5) return std::string(funcs[rng() % std::size(funcs)]) + "(" + random_expr(rng, depth - 1) + ")";
    if (k == 5) return "-" + random_expr(rng, depth - 1);
    if (k == 6) return "(" + random_expr(rng, depth - 1) + ")";
    return random_expr(rng, depth - 1) + " " + ops[rng() % std::size(ops)] + " " + random_expr(rng, depth - 1);
}

}  // namespace

TEST_CASE("precedence and associativity") {
    CHECK(at_origin("2 + 3 * 4") == 14.0);
    CHECK(at_origin("2^3^2") == 512.0);
    CHECK(at_origin("-2^2") == -4.0);
    CHECK(at_origin("8 / 4 / 2") == 1.0);
    CHECK(at_origin("10 - 4 - 3") == 3.0);
    CHECK(at_origin("(2 + 3) * 4") == 20.0);
    CHECK(at_origin("--3") == 3.0);
    CHECK(at_origin("2 * -3") == -6.0);
}

TEST_CASE("evaluation") {
    CHECK(at_origin("1") == 1.0);
    CHECK(Expr::parse("r^2/4 - 1/8").eval(polar(1.0, 0.3)) == doctest::Approx(0.125).epsilon(1e-15));
    CHECK(std::abs(Expr::parse("sin(theta)*cos(theta) - sin(theta)^2").eval(polar(0.5, pi / 4))) <= 1e-15);
    CHECK(at_origin("pi") == pi);
    CHECK(at_origin("log(e)") == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(at_origin("abs(-2) + sqrt(9) + exp(0)") == 6.0);
    CHECK(at_origin("1.5e2") == 150.0);
}

TEST_CASE("sampling on a mesh") {
    const MeshPtr m = test::disk(8, 16);
    const GridFunction u = sample(m, Expr::parse("x + 2*y"));
    for (Eigen::Index k = 0; k < m->interior_size(); ++k) {
        const auto p = m->interior_points().row(k);
        CHECK(u.interior()(k) == doctest::Approx(p(0) + 2.0 * p(1)).epsilon(1e-15));
    }
    const BoundaryFunction g = sample_boundary(m, Expr::parse("r"));
    CHECK((g.values().array() - 1.0).abs().maxCoeff() <= 1e-14);
}

TEST_CASE("print is a fixed point of parse") {
    std::mt19937_64 rng(2024);
    for (int trial = 0; trial < 500; ++trial) {
        const std::string text = random_expr(rng, 5);
        const Expr e = Expr::parse(text);
        const Expr again = Expr::parse(e.print());
        CHECK_MESSAGE(again == e, text);
        CHECK(again.print() == e.print());
    }
    CHECK(Expr::parse("0.1").print() == Expr::parse(Expr::parse("0.1").print()).print());
    CHECK_FALSE(Expr::parse("x + y") == Expr::parse("y + x"));
}

TEST_CASE("random input never escapes the error hierarchy") {
    std::mt19937_64 rng(99);
    const std::string alphabet = "xyr0123456789.e+-*/^() sincoqtlgbapm\t,";
    int parsed = 0;
    for (int trial = 0; trial < 5000; ++trial) {
        std::string text(1 + rng() % 24, ' ');
        for (char& c : text) c = alphabet[rng() % alphabet.size()];
        try {
            const Expr e = Expr::parse(text);
            ++parsed;
            try {
                const double v = e.eval(polar(0.7, 1.1));
                CHECK(std::isfinite(v));
            } catch (const DomainError&) {
            }
        } catch (const SyntaxError&) {
        } catch (const UnknownIdentifier&) {
        }
    }
    CHECK(parsed > 0);
}

TEST_CASE("syntax errors carry byte offsets") {
    auto offset_of = [](const char* text) -> std::size_t {
        try {
            Expr::parse(text);
        } catch (const SyntaxError& e) {
            return e.offset();
        }
        return std::string::npos;
    };
    CHECK(offset_of("2 + * 3") == 4);
    CHECK(offset_of("(1 + 2") == 6);
    CHECK(offset_of("1 + 2)") == 5);
    CHECK(offset_of("2x") == 1);
    CHECK(offset_of("") == 0);
    CHECK(offset_of("sin 2") == 4);
    CHECK_THROWS_AS(Expr::parse("z + 1"), UnknownIdentifier);
    CHECK_THROWS_AS(Expr::parse("tan(x)"), UnknownIdentifier);
    CHECK_THROWS_AS(Expr::parse(std::string(1000, '(') + "1" + std::string(1000, ')')), SyntaxError);
}

TEST_CASE("evaluation errors are typed") {
    CHECK_THROWS_AS(at_origin("log(0)"), DomainError);
    CHECK_THROWS_AS(at_origin("log(-1)"), DomainError);
    CHECK_THROWS_AS(at_origin("sqrt(-1)"), DomainError);
    CHECK_THROWS_AS(at_origin("1 / 0"), DomainError);
    CHECK_THROWS_AS(at_origin("exp(1000)"), DomainError);
    CHECK_THROWS_AS(sample(test::disk(4, 8), Expr::parse("log(x - 2)")), DomainError);
}
