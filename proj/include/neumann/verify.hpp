#pragma once

#include "neumann/domain.hpp"
#include "neumann/field.hpp"
#include "neumann/norms.hpp"
#include "neumann/solver.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace neumann {

/// Polynomial in (x, y): sum of c * x^p * y^q keyed by (p, q).
struct Poly2 {
    std::map<std::pair<int, int>, double> terms;

    double operator()(double x, double y) const;
    Poly2 dx() const;
    Poly2 dy() const;
    Poly2 laplacian() const;
    /// Exact average over a star-shaped domain (periodic quadrature in theta
    /// of the radial antiderivative).
    double domain_mean(const DomainSpec& domain) const;
    std::string print() const;
};

/// One problem of a family. `make_f` and `make_g` discretize the data on a
/// given mesh; `exact` is set for manufactured problems (f = Lap u*, g = d_n u*).
struct ProblemInstance {
    int index = 0;
    std::string label;
    std::string f_text;
    std::string g_text;
    std::function<GridFunction(const MeshPtr&)> make_f;
    std::function<BoundaryFunction(const MeshPtr&)> make_g;
    std::optional<Poly2> exact;
};

enum class FamilyKind { manufactured_polynomial, random_trigonometric, special_cases };

std::string to_string(FamilyKind k);
FamilyKind parse_family_kind(const std::string& name);

struct ProblemFamily {
    FamilyKind kind = FamilyKind::random_trigonometric;
    std::uint64_t seed = 0;
    int count = 20;
    /// Coefficients are drawn uniformly from [-amplitude, amplitude].
    double amplitude = 1.0;

    /// Throws ConfigError for an empty family or a non-positive amplitude.
    std::vector<ProblemInstance> instances() const;
};

/// Disk case f = 1, g = 1/2 with u* = r^2/4 - 1/8 (on a disk of radius 1).
ProblemInstance disk_manufactured_instance();

/// Forcing and boundary data sampled from a manufactured polynomial.
GridFunction manufactured_forcing(const MeshPtr& mesh, const Poly2& u);
BoundaryFunction manufactured_flux(const MeshPtr& mesh, const Poly2& u);

// Individual checks. All are pure functions of their arguments.

/// |int |Du|^2 - (oint u g - int u f)| / (1 + int |Du|^2).
double energy_identity_defect(const GridFunction& u, const GridFunction& f,
                              const BoundaryFunction& g);

/// ||u - mean u||_L2 / (||f||_{C^{0,a}} + ||g||_{C^{1,a}}).
double l2_lemma_ratio(const GridFunction& u, const GridFunction& f, const BoundaryFunction& g,
                      double alpha);

/// ||u - mean u||_{C^{2,a}} / (||f||_{C^{0,a}} + ||g||_{C^{1,a}}).
double schauder_ratio(const GridFunction& u, const GridFunction& f, const BoundaryFunction& g,
                      double alpha, PairStrategy strategy = PairStrategy::pruned);

/// ||u||_{C^{2,a}} / (||u||_C0 + ||f||_{C^{0,a}} + ||g||_{C^{1,a}}).
double intermediate_ratio(const GridFunction& u, const GridFunction& f,
                          const BoundaryFunction& g, double alpha,
                          PairStrategy strategy = PairStrategy::pruned);

/// Data norms shared by the ratios above.
struct DataNorms {
    double f_c0alpha = 0.0;
    double g_c1alpha = 0.0;
    double sum() const { return f_c0alpha + g_c1alpha; }
};
DataNorms data_norms(const GridFunction& f, const BoundaryFunction& g, double alpha,
                     PairStrategy strategy = PairStrategy::pruned);

/// sup_{B(c,R)} |u| / (R^{-N/2} ||u||_{L2(B(c,2R))} + R^{2-N/p} ||f||_{Lp}).
/// Throws BallNotContained unless B(c, 2R) stays one cell inside the domain,
/// InvalidExponent unless p > N/2.
double serrin_local_ratio(const GridFunction& u, const GridFunction& f,
                          const Eigen::Vector2d& center, double radius, double p);

/// sup_{boundary}|u| <= sup_{Omega_eps}|u| + d sup|Du| with Omega_eps the
/// nodes at distance >= eps from the boundary and d >= eps the largest
/// distance from a boundary node to Omega_eps (the discrete strip width).
/// Returns rhs - lhs.
double frontier_margin(const GridFunction& u, double eps);

struct ConvergenceStudy {
    std::vector<double> h;
    std::vector<double> errors;
    /// log2(e_h / e_{h/2}) for consecutive levels.
    std::vector<double> orders;
    /// Every error is at rounding level; orders are not meaningful.
    bool exact = false;
    /// The finest observed order is not finite or errors grow.
    bool nonconvergence = false;
};

/// C0 error of the mean-zero discrete solution against u* - mean(u*).
ConvergenceStudy convergence_study(const Poly2& exact, const DomainSpec& domain,
                                   const std::vector<Resolution>& levels,
                                   const SolverOptions& options = {});

struct ProbeResult {
    double delta = 0.0;
    bool rejected = false;
    /// Residual and multiplier of the follow-up solve under the project policy.
    double projected_residual = 0.0;
    double projected_multiplier = 0.0;
};

/// Runs reject then project on the same data; the reject path is expected to
/// raise IncompatibleData, which is captured.
ProbeResult incompatibility_probe(const GridFunction& f, const BoundaryFunction& g,
                                  const SolverOptions& options = {});

/// max |u_h - (u* - mean_h u*)| over all nodes of the 1D grid with n cells,
/// u* the closed-form oracle.
double oracle1d_discrepancy(const Polynomial& f, double g0, double g1, int n, double a = 0.0,
                            double b = 1.0, const SolverOptions& options = {});

struct SeminormOracleResult {
    int fields = 0;
    int mismatches = 0;
    double brute_seconds = 0.0;
    double pruned_seconds = 0.0;
    int benchmark_nodes = 0;
    double speedup() const { return pruned_seconds > 0.0 ? brute_seconds / pruned_seconds : 0.0; }
};

/// Compares pruned and brute-force seminorms on random fields over disk grids
/// of up to `max_nodes` nodes, then times both on the largest grid.
SeminormOracleResult seminorm_oracle_check(std::uint64_t seed, int fields = 50,
                                           int max_nodes = 10000);

struct NormAxiomResult {
    int pairs = 0;
    int homogeneity_failures = 0;
    int triangle_failures = 0;
    int monotonicity_failures = 0;
    double worst_homogeneity = 0.0;
    /// Largest relative amount by which a lower-order norm exceeded a higher one.
    double worst_monotonicity = 0.0;
};

NormAxiomResult norm_axiom_check(std::uint64_t seed, int pairs = 100, double tol = 1e-12);

/// Pass thresholds of the suite.
struct Thresholds {
    double convergence_order = 1.9;
    double convergence_finest_error = 5e-4;
    double oracle_quadratic = 1e-10;
    double oracle_cubic_order = 2.0;
    double oracle_cubic_order_band = 0.15;
    double probe_delta = 1e-3;
    double probe_residual = 1e-10;
    double uniqueness_spread = 1e-8;
    double max_principle_factor = 1.01;
    double energy_defect = 1e-3;
    double energy_order = 1.9;
    double refinement_band = 2.0;
    double scaling_invariance = 1e-8;
    double manufactured_ratio = 0.75;
    double manufactured_ratio_band = 0.05;
    double fredholm_agreement = 1e-8;
    int fredholm_iterations = 100;
    double seminorm_speedup = 2.0;
    double norm_axiom_tol = 1e-12;
    double frontier_slack = 1e-8;
};

struct SuiteConfig {
    DomainSpec domain = DomainSpec::disk();
    std::vector<Resolution> levels{{32, 64}, {64, 128}, {128, 256}};
    ProblemFamily family;
    /// Exponent of the single-alpha checks (L2 estimate, scaling, manufactured case).
    double alpha = 0.5;
    std::vector<double> alphas{0.3, 0.5, 0.7};
    std::vector<double> serrin_radii{0.1, 0.2};
    std::vector<double> frontier_eps{0.05, 0.1};
    int oracle_points = 50;
    int oracle_max_nodes = 10000;
    int axiom_pairs = 100;
    SolverOptions solver;
    Thresholds thresholds;
    /// 0 means NEUMANN_LAB_THREADS or the hardware concurrency.
    int threads = 0;
};

/// Per-instance, per-level measurements (one CSV row).
struct InstanceRecord {
    int instance = 0;
    int level = 0;
    double h = 0.0;
    std::vector<double> schauder;      // per alpha
    std::vector<double> intermediate;  // per alpha
    double l2_ratio = 0.0;
    double energy_defect = 0.0;
    std::vector<double> serrin;  // per radius
    double max_principle_ratio = 0.0;
    double uniqueness_spread = 0.0;
    double strategy_disagreement = 0.0;
    int krylov_iterations = 0;
    double frontier_margin = 0.0;  // min over eps
    bool passed = true;
};

struct LevelSummary {
    Resolution resolution;
    double h = 0.0;
    std::map<std::string, double> family_max;
    std::map<std::string, double> family_median;
};

struct CriterionResult {
    int id = 0;
    std::string name;
    bool passed = false;
    bool skipped = false;
    std::string detail;
};

struct InstanceInfo {
    int index = 0;
    std::string label;
    std::string f_text;
    std::string g_text;
};

struct EstimateReport {
    SuiteConfig config;
    std::vector<InstanceInfo> instances;
    std::vector<InstanceRecord> records;
    std::vector<LevelSummary> levels;
    /// Family maxima on the finest level, named after the estimate they bound.
    std::map<std::string, double> measured_constants;
    std::vector<CriterionResult> criteria;
    std::vector<std::string> warnings;
    /// Timing-dependent measurements (kept apart so reports are reproducible).
    std::map<std::string, double> timings;
    double wall_time_seconds = 0.0;

    bool all_passed() const;
};

/// Runs every check over the family and refinement ladder. With a single
/// level, order and stability checks are skipped with a warning.
/// Throws ConfigError for an empty family, unordered levels or a 1D domain.
EstimateReport run_suite(const SuiteConfig& config);

/// NEUMANN_LAB_THREADS if set and positive, else the hardware concurrency.
int default_thread_count();

/// Runs body(i) for i in [0, n) on up to `threads` workers; rethrows the
/// first exception in index order.
void parallel_for(int n, int threads, const std::function<void(int)>& body);

}  // namespace neumann
