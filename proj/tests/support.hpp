#pragma once

#include "neumann/domain.hpp"
#include "neumann/field.hpp"

#include <cmath>
#include <numbers>

namespace neumann::test {

inline constexpr double pi = std::numbers::pi;

inline MeshPtr disk(int n_r = 64, int n_theta = 128) {
    return build_mesh(DomainSpec::disk(), {n_r, n_theta});
}

inline MeshPtr unit_interval(int n) { return build_mesh(DomainSpec::interval(0.0, 1.0), {n, 0}); }

// Max over interior nodes of |a - b|.
inline double interior_gap(const GridFunction& a, const GridFunction& b) {
    return (a.interior() - b.interior()).cwiseAbs().maxCoeff();
}

inline double log2_ratio(double coarse, double fine) { return std::log2(coarse / fine); }

}  // namespace neumann::test
