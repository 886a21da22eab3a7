#pragma once

#include "neumann/field.hpp"

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <vector>

namespace neumann {

enum class PairStrategy { brute_force, pruned };

struct HolderParams {
    double alpha = 0.5;
    int derivative_order = 0;
    PairStrategy pair_strategy = PairStrategy::pruned;
};

/// Distance used between sample points: Euclidean in the plane, or the
/// arclength distance min(|a - b|, P - |a - b|) on a closed curve of length P
/// (coordinates in column 0).
struct PointSet {
    enum class Metric { euclidean, periodic };

    Eigen::MatrixX2d coords;
    Metric metric = Metric::euclidean;
    double period = 0.0;

    Eigen::Index size() const { return coords.rows(); }
    double distance_squared(Eigen::Index i, Eigen::Index j) const;

    static PointSet euclidean(Eigen::MatrixX2d coords);
    static PointSet periodic(const Eigen::VectorXd& arclength, double period);
};

struct SeminormResult {
    double value = 0.0;
    /// Lexicographically smallest node-index pair (i < j) attaining `value`.
    std::array<Eigen::Index, 2> witness{0, 0};
    std::int64_t pairs_evaluated = 0;
};

/// Spatial partition of a point set reused across many value fields.
class PairIndex {
public:
    explicit PairIndex(PointSet points, int leaf_size = 64);

    const PointSet& points() const { return points_; }

    /// max over unordered node pairs of |v(x) - v(y)| / |x - y|^alpha.
    SeminormResult seminorm(const Eigen::VectorXd& values, double alpha,
                            PairStrategy strategy) const;

private:
    struct Leaf {
        std::vector<Eigen::Index> nodes;  // ascending
        Eigen::Vector2d lo, hi;
    };

    double box_distance_squared(const Leaf& a, const Leaf& b) const;
    SeminormResult brute_force(const Eigen::VectorXd& values, double alpha) const;
    SeminormResult pruned(const Eigen::VectorXd& values, double alpha) const;

    PointSet points_;
    std::vector<Leaf> leaves_;
    // all leaf pairs (a <= b) with squared box distance
    std::vector<std::array<int, 2>> leaf_pairs_;
    std::vector<double> leaf_pair_d2_;
};

/// Exact pairwise Hölder seminorm of `values` sampled at `points`.
/// Throws InvalidExponent unless 0 < alpha < 1, DegenerateInput for fewer
/// than two nodes, coincident nodes only, or non-finite values.
SeminormResult holder_seminorm(const PointSet& points, const Eigen::VectorXd& values,
                               const HolderParams& params);

struct HolderReport {
    int order = 0;
    double alpha = 0.5;
    /// sup_norms[j] = max over |beta| = j of sup |D^beta u|.
    std::vector<double> sup_norms;
    /// max over |beta| = order of [D^beta u]_alpha.
    double seminorm = 0.0;
    std::array<Eigen::Vector2d, 2> witness{Eigen::Vector2d::Zero(), Eigen::Vector2d::Zero()};
    double total = 0.0;
    std::int64_t pairs_evaluated = 0;
};

/// Nodes of a mesh (interior then boundary) with Euclidean distance.
PointSet node_points(const Mesh& mesh);
/// Boundary nodes with arclength distance (2D) or Euclidean distance (1D).
PointSet boundary_point_set(const Mesh& mesh);

/// Discrete C^{k,alpha} norm of a volume field over interior and boundary nodes:
///   sum_{j <= k} max_{|beta| = j} sup |D^beta u| + max_{|beta| = k} [D^beta u]_alpha.
HolderReport c_k_alpha_norm(const GridFunction& u, int k, double alpha,
                            PairStrategy strategy = PairStrategy::pruned);

/// Same for boundary data, differentiating along arclength. On the two-point
/// boundary of an interval only the sup term is defined for k >= 1.
HolderReport c_k_alpha_norm(const BoundaryFunction& g, int k, double alpha,
                            PairStrategy strategy = PairStrategy::pruned);

/// Arclength derivative of boundary data (centered in theta).
BoundaryFunction tangential_derivative(const BoundaryFunction& g);

double l2_norm(const GridFunction& u);
/// (sum_i w_i |u_i|^p)^(1/p) over interior nodes.
double lp_norm(const GridFunction& u, double p);

}  // namespace neumann
