#include "neumann/solver.hpp"

#include "neumann/errors.hpp"
#include "neumann/gmres.hpp"

#include <chrono>
#include <cmath>
#include <sstream>

namespace neumann {

using Eigen::Index;
using Eigen::VectorXd;

std::string to_string(Strategy s) {
    switch (s) {
        case Strategy::direct_augmented: return "direct_augmented";
        case Strategy::fredholm_iteration: return "fredholm_iteration";
        case Strategy::regularized: return "regularized";
    }
    return "unknown";
}

std::string to_string(CompatPolicy p) { return p == CompatPolicy::reject ? "reject" : "project"; }

Strategy parse_strategy(const std::string& name) {
    if (name == "direct_augmented" || name == "direct") return Strategy::direct_augmented;
    if (name == "fredholm_iteration" || name == "fredholm") return Strategy::fredholm_iteration;
    if (name == "regularized") return Strategy::regularized;
    throw ConfigError("unknown strategy '" + name + "'");
}

CompatPolicy parse_compat_policy(const std::string& name) {
    if (name == "reject") return CompatPolicy::reject;
    if (name == "project") return CompatPolicy::project;
    throw ConfigError("unknown compatibility policy '" + name + "'");
}

double check_compatibility(const GridFunction& f, const BoundaryFunction& g) {
    require_same_mesh(f.mesh(), g.mesh());
    return integrate_volume(f) - integrate_boundary(g);
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

VectorXd stack_rhs(const GridFunction& f, const BoundaryFunction& g, Index extra = 0) {
    const Index n_int = f.mesh().interior_size();
    const Index n_b = f.mesh().boundary_size();
    VectorXd rhs = VectorXd::Zero(n_int + n_b + extra);
    rhs.head(n_int) = f.interior();
    rhs.segment(n_int, n_b) = g.values();
    return rhs;
}

// A with one extra row and column: column c = 1 on interior rows, row `last`.
Eigen::SparseMatrix<double> bordered(const Mesh& mesh, const VectorXd& last_row) {
    const auto& A = mesh.operators().system;
    const Index N = mesh.size();
    const Index n_int = mesh.interior_size();
    std::vector<Eigen::Triplet<double>> t;
    t.reserve(A.nonZeros() + n_int + N);
    for (Index r = 0; r < A.outerSize(); ++r) {
        for (FieldOperators::Sparse::InnerIterator it(A, r); it; ++it) t.emplace_back(it.row(), it.col(), it.value());
    }
    for (Index k = 0; k < n_int; ++k) t.emplace_back(k, N, 1.0);
    for (Index k = 0; k < N; ++k) {
        if (last_row(k) != 0.0) t.emplace_back(N, k, last_row(k));
    }
    Eigen::SparseMatrix<double> m(N + 1, N + 1);
    m.setFromTriplets(t.begin(), t.end());
    return m;
}

}  // namespace

NeumannSolver::NeumannSolver(MeshPtr mesh, SolverOptions options)
    : mesh_(std::move(mesh)), options_(options) {}

std::unique_ptr<NeumannSolver::Factored> NeumannSolver::factor(Sparse matrix) const {
    auto f = std::make_unique<Factored>();
    f->matrix = std::move(matrix);
    f->matrix.makeCompressed();
    Eigen::VectorXd row_sums = Eigen::VectorXd::Zero(f->matrix.rows());
    for (Index c = 0; c < f->matrix.outerSize(); ++c) {
        for (Sparse::InnerIterator it(f->matrix, c); it; ++it) row_sums(it.row()) += std::abs(it.value());
    }
    f->norm_inf = row_sums.maxCoeff();
    f->lu.analyzePattern(f->matrix);
    f->lu.factorize(f->matrix);
    if (f->lu.info() != Eigen::Success) {
        throw LinearSolveFailure("sparse LU factorization failed: " + f->lu.lastErrorMessage());
    }
    return f;
}

const NeumannSolver::Factored& NeumannSolver::regularized_factor() const {
    std::call_once(regularized_once_, [this] {
        Sparse m = mesh_->operators().system;
        for (Index k = 0; k < mesh_->interior_size(); ++k) m.coeffRef(k, k) -= 1.0;
        regularized_ = factor(std::move(m));
    });
    return *regularized_;
}

const NeumannSolver::Factored& NeumannSolver::bordered_factor() const {
    std::call_once(bordered_once_, [this] {
        VectorXd w = VectorXd::Zero(mesh_->size());
        w.head(mesh_->interior_size()) = mesh_->volume_weights() / mesh_->area();
        bordered_ = factor(bordered(*mesh_, w));
    });
    return *bordered_;
}

const NeumannSolver::Factored& NeumannSolver::pinned_factor(Index node) const {
    if (node < 0 || node >= mesh_->size()) throw std::out_of_range("pinned node out of range");
    std::lock_guard lock(pinned_mutex_);
    auto& slot = pinned_[node];
    if (!slot) {
        VectorXd e = VectorXd::Zero(mesh_->size());
        e(node) = 1.0;
        slot = factor(bordered(*mesh_, e));
    }
    return *slot;
}

VectorXd NeumannSolver::solve_checked(const Factored& f, const VectorXd& rhs, double& residual) const {
    // normwise backward error ||r|| / (||A|| ||x|| + ||b||) in the max norm
    const auto backward_error = [&](const VectorXd& x, const VectorXd& r) {
        const double denom = f.norm_inf * x.lpNorm<Eigen::Infinity>() + rhs.lpNorm<Eigen::Infinity>();
        return denom == 0.0 ? 0.0 : r.lpNorm<Eigen::Infinity>() / denom;
    };
    VectorXd x = f.lu.solve(rhs);
    VectorXd r = rhs - f.matrix * x;
    residual = backward_error(x, r);
    if (residual > options_.tol_linear) {
        x += f.lu.solve(r);
        r = rhs - f.matrix * x;
        residual = backward_error(x, r);
    }
    if (!x.allFinite() || residual > options_.tol_linear) {
        std::ostringstream msg;
    msg << "linear solve residual " << residual << " exceeds tolerance " << options_.tol_linear;
    throw LinearSolveFailure(msg.str());
    }
    return x;
}

SolveReport NeumannSolver::regularized(const GridFunction& f, const BoundaryFunction& g) const {
    require_same_mesh(*mesh_, f.mesh());
    require_same_mesh(*mesh_, g.mesh());
    const auto start = Clock::now();
    SolveReport report{GridFunction(mesh_)};
    report.strategy = Strategy::regularized;
    report.compatibility_defect = check_compatibility(f, g);
    const VectorXd x = solve_checked(regularized_factor(), stack_rhs(f, g), report.residual);
    report.solution = GridFunction::from_stacked(mesh_, x);
    report.iterations = 1;
    report.wall_time_seconds = seconds_since(start);
    return report;
}

GridFunction NeumannSolver::apply_T(const GridFunction& f) const {
    require_same_mesh(*mesh_, f.mesh());
    const double m = mean(f);
    if (std::abs(m) > 1e-10 * std::max(f.sup_norm(), 1.0)) {
        throw NonZeroMeanInput("apply_T needs mean-zero input, mean = " + std::to_string(m));
    }
    return regularized(-f, BoundaryFunction(mesh_)).solution;
}

GridFunction NeumannSolver::prepare(const GridFunction& f, const BoundaryFunction& g,
                                    SolveReport& report) const {
    require_same_mesh(*mesh_, f.mesh());
    require_same_mesh(*mesh_, g.mesh());
    const double delta = check_compatibility(f, g);
    report.compatibility_defect = delta;
    if (options_.compat == CompatPolicy::project) {
        report.projected = true;
        GridFunction projected = f;
        projected -= delta / mesh_->area();
        return projected;
    }
    const double limit = options_.tol_compat * (1.0 + f.sup_norm() + g.sup_norm());
    if (std::abs(delta) > limit) {
        throw IncompatibleData(delta, "incompatible Neumann data: int f - oint g = " +
                                          std::to_string(delta));
    }
    return f;
}

SolveReport NeumannSolver::neumann(const GridFunction& f, const BoundaryFunction& g,
                                   Strategy strategy) const {
    if (strategy == Strategy::regularized) return regularized(f, g);
    const auto start = Clock::now();
    SolveReport report{GridFunction(mesh_)};
    report.strategy = strategy;
    const GridFunction forcing = prepare(f, g, report);

    if (strategy == Strategy::direct_augmented) {
        const VectorXd x = solve_checked(bordered_factor(), stack_rhs(forcing, g, 1), report.residual);
        report.solution = GridFunction::from_stacked(mesh_, x);
        report.multiplier = x(mesh_->size());
        report.iterations = 1;
    } else {
        // u - T u = T[f, g], with T u = T[-u, 0] applied matrix-free
        const Factored& reg = regularized_factor();
        double residual = 0.0;
        const VectorXd v = solve_checked(reg, stack_rhs(forcing, g), residual);
        const Index n_int = mesh_->interior_size();
        auto apply = [&](const VectorXd& x) -> VectorXd {
            VectorXd rhs = VectorXd::Zero(x.size());
            rhs.head(n_int) = -x.head(n_int);
            double r = 0.0;
            return x - solve_checked(reg, rhs, r);
        };
        const KrylovResult k = gmres(apply, v, options_.krylov_restart,
                                     options_.krylov_max_iterations, options_.krylov_tol);
        if (!k.converged) {
            throw NonConvergence(k.iterations, k.relative_residual,
                                 "GMRES on (I - T) u = v did not converge in " +
                                     std::to_string(k.iterations) + " iterations");
        }
        report.solution = GridFunction::from_stacked(mesh_, k.x);
        report.residual = k.relative_residual;
        report.iterations = k.iterations;
        report.multiplier = (integrate_volume(forcing) - integrate_boundary(g)) / mesh_->area();
    }
    report.solution = subtract_mean(report.solution);
    report.wall_time_seconds = seconds_since(start);
    return report;
}

SolveReport NeumannSolver::pinned(const GridFunction& f, const BoundaryFunction& g, Index node,
                                  double value) const {
    const auto start = Clock::now();
    SolveReport report{GridFunction(mesh_)};
    report.strategy = Strategy::direct_augmented;
    const GridFunction forcing = prepare(f, g, report);
    VectorXd rhs = stack_rhs(forcing, g, 1);
    rhs(mesh_->size()) = value;
    const VectorXd x = solve_checked(pinned_factor(node), rhs, report.residual);
    report.solution = GridFunction::from_stacked(mesh_, x);
    report.multiplier = x(mesh_->size());
    report.iterations = 1;
    report.wall_time_seconds = seconds_since(start);
    return report;
}

SolveReport solve_regularized(const GridFunction& f, const BoundaryFunction& g,
                              const SolverOptions& options) {
    return NeumannSolver(f.mesh_ptr(), options).regularized(f, g);
}

GridFunction apply_T(const GridFunction& f, const SolverOptions& options) {
    return NeumannSolver(f.mesh_ptr(), options).apply_T(f);
}

SolveReport solve_neumann(const GridFunction& f, const BoundaryFunction& g, Strategy strategy,
                          const SolverOptions& options) {
    return NeumannSolver(f.mesh_ptr(), options).neumann(f, g, strategy);
}

// ---------------------------------------------------------------------------
// 1D closed form

double Polynomial::operator()(double x) const {
    double v = 0.0;
    for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) v = v * x + *it;
    return v;
}

Polynomial Polynomial::derivative() const {
    Polynomial d;
    for (std::size_t k = 1; k < coeffs.size(); ++k) d.coeffs.push_back(static_cast<double>(k) * coeffs[k]);
    return d;
}

Polynomial Polynomial::antiderivative() const {
    Polynomial p;
    p.coeffs.push_back(0.0);
    for (std::size_t k = 0; k < coeffs.size(); ++k) p.coeffs.push_back(coeffs[k] / static_cast<double>(k + 1));
    return p;
}

Polynomial solve_1d_oracle(const Polynomial& f, double g0, double g1, double a, double b) {
    if (!(a < b)) throw DegenerateInput("interval requires a < b");
    const Polynomial F = f.antiderivative();
    const double total = F(b) - F(a);
    double scale = 1.0 + std::abs(g0) + std::abs(g1);
    for (double c : f.coeffs) scale += std::abs(c);
    const double delta = total - (g0 + g1);
    if (std::abs(delta) > 1e-12 * scale) {
        throw IncompatibleData(delta, "1D data incompatible: int f - (g0 + g1) = " + std::to_string(delta));
    }
    // u'(x) = -g0 + int_a^x f
    Polynomial du = F;
    du.coeffs[0] += -F(a) - g0;
    Polynomial u = du.antiderivative();
    const Polynomial U = u.antiderivative();
    const double avg = (U(b) - U(a)) / (b - a);
    u.coeffs[0] -= avg;
    return u;
}

}  // namespace neumann
