#pragma once

#include "neumann/field.hpp"

#include <Eigen/SparseLU>

#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

namespace neumann {

enum class Strategy { direct_augmented, fredholm_iteration, regularized };
enum class CompatPolicy { reject, project };

std::string to_string(Strategy s);
std::string to_string(CompatPolicy p);
Strategy parse_strategy(const std::string& name);
CompatPolicy parse_compat_policy(const std::string& name);

struct SolverOptions {
    double tol_linear = 1e-10;
    /// Reject when |delta| > tol_compat (1 + ||f||_C0 + ||g||_C0).
    double tol_compat = 1e-8;
    CompatPolicy compat = CompatPolicy::reject;
    int krylov_restart = 30;
    int krylov_max_iterations = 500;
    double krylov_tol = 1e-10;
};

struct SolveReport {
    GridFunction solution;
    Strategy strategy = Strategy::direct_augmented;
    /// Normwise backward error ||r|| / (||A|| ||x|| + ||b||) (max norms) of the
    /// linear system actually solved; for the Fredholm strategy the relative
    /// Krylov residual of (I - T) u = T[f, g].
    double residual = 0.0;
    int iterations = 0;
    /// delta = int f - oint g of the data as given (before any projection).
    double compatibility_defect = 0.0;
    bool projected = false;
    /// Lagrange multiplier of the bordered system; equals delta / |Omega| of
    /// the data that reached the solve.
    double multiplier = 0.0;
    double wall_time_seconds = 0.0;
};

/// delta = integrate_volume(f) - integrate_boundary(g).
double check_compatibility(const GridFunction& f, const BoundaryFunction& g);

/// Factorizations for one mesh, built on first use and reused across solves.
///
/// regularized(f, g) solves (Lap_h - I) u = f, d_n u = g (always nonsingular).
/// neumann(f, g, s) solves Lap_h u = f, d_n u = g in the mean-zero class
/// either through the bordered system
///     [ A    c ] [u]   [f; g]
///     [ w^T  0 ] [l] = [0]
/// with c = 1 on interior rows and w the normalized volume weights, or by
/// GMRES on u - T u = T[f, g] with T u = regularized(-u, 0).
class NeumannSolver {
public:
    explicit NeumannSolver(MeshPtr mesh, SolverOptions options = {});

    const Mesh& mesh() const { return *mesh_; }
    const SolverOptions& options() const { return options_; }

    SolveReport regularized(const GridFunction& f, const BoundaryFunction& g) const;
    /// T f = regularized(-f, 0) for mean-zero f.
    GridFunction apply_T(const GridFunction& f) const;
    SolveReport neumann(const GridFunction& f, const BoundaryFunction& g, Strategy strategy) const;
    /// Bordered solve with the mean constraint replaced by u(node) = value.
    SolveReport pinned(const GridFunction& f, const BoundaryFunction& g, Eigen::Index node,
                       double value) const;

private:
    using Sparse = Eigen::SparseMatrix<double>;
    using LU = Eigen::SparseLU<Sparse, Eigen::COLAMDOrdering<int>>;

    struct Factored {
        Sparse matrix;
        double norm_inf = 0.0;
        LU lu;
    };

    const Factored& regularized_factor() const;
    const Factored& bordered_factor() const;
    const Factored& pinned_factor(Eigen::Index node) const;
    std::unique_ptr<Factored> factor(Sparse matrix) const;
    Eigen::VectorXd solve_checked(const Factored& f, const Eigen::VectorXd& rhs, double& residual) const;

    /// Applies the compatibility policy; returns the forcing that reaches the solve.
    GridFunction prepare(const GridFunction& f, const BoundaryFunction& g, SolveReport& report) const;

    MeshPtr mesh_;
    SolverOptions options_;

    mutable std::once_flag regularized_once_, bordered_once_;
    mutable std::unique_ptr<Factored> regularized_, bordered_;
    mutable std::mutex pinned_mutex_;
    mutable std::map<Eigen::Index, std::unique_ptr<Factored>> pinned_;
};

SolveReport solve_regularized(const GridFunction& f, const BoundaryFunction& g,
                              const SolverOptions& options = {});
GridFunction apply_T(const GridFunction& f, const SolverOptions& options = {});
SolveReport solve_neumann(const GridFunction& f, const BoundaryFunction& g, Strategy strategy,
                          const SolverOptions& options = {});

/// Polynomial with ascending coefficients c0 + c1 x + ...
struct Polynomial {
    std::vector<double> coeffs;

    double operator()(double x) const;
    Polynomial derivative() const;
    /// Antiderivative vanishing at x = 0.
    Polynomial antiderivative() const;
};

/// Closed-form mean-zero solution of u'' = f on (a, b) with outward normal
/// derivatives -u'(a) = g0 and u'(b) = g1. Throws IncompatibleData unless
/// int_a^b f = g0 + g1.
Polynomial solve_1d_oracle(const Polynomial& f, double g0, double g1, double a = 0.0,
                           double b = 1.0);

}  // namespace neumann
