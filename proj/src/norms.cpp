#include "neumann/norms.hpp"

#include "neumann/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace neumann {

using Eigen::Index;
using Eigen::VectorXd;

double PointSet::distance_squared(Index i, Index j) const {
    if (metric == Metric::periodic) {
        double d = std::abs(coords(i, 0) - coords(j, 0));
        d = std::min(d, period - d);
        return d * d;
    }
    const double dx = coords(i, 0) - coords(j, 0);
    const double dy = coords(i, 1) - coords(j, 1);
    return dx * dx + dy * dy;
}

PointSet PointSet::euclidean(Eigen::MatrixX2d coords) {
    PointSet p;
    p.coords = std::move(coords);
    return p;
}

PointSet PointSet::periodic(const VectorXd& arclength, double period) {
    PointSet p;
    p.coords = Eigen::MatrixX2d::Zero(arclength.size(), 2);
    p.coords.col(0) = arclength;
    p.metric = Metric::periodic;
    p.period = period;
    return p;
}

namespace {

void check_alpha(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw InvalidExponent("Hölder exponent must lie in (0, 1), got " + std::to_string(alpha));
    }
}

// Running maximum with the lexicographic tie-break on (i, j).
struct Best {
    double value = -1.0;
    Index i = 0, j = 0;
    std::int64_t pairs = 0;

    void offer(double r, Index a, Index b) {
        if (r > value || (r == value && (a < i || (a == i && b < j)))) {
            value = r;
            i = a;
            j = b;
        }
    }
};

}  // namespace

PairIndex::PairIndex(PointSet points, int leaf_size) : points_(std::move(points)) {
    const Index n = points_.size();
    std::vector<Index> order(n);
    std::iota(order.begin(), order.end(), Index{0});

    // median splits on the wider axis until leaves are small
    struct Range {
        Index begin, end;
    };
    std::vector<Range> stack{{0, n}};
    while (!stack.empty()) {
        const Range r = stack.back();
        stack.pop_back();
        Eigen::Vector2d lo = Eigen::Vector2d::Constant(std::numeric_limits<double>::infinity());
        Eigen::Vector2d hi = -lo;
        for (Index q = r.begin; q < r.end; ++q) {
            lo = lo.cwiseMin(points_.coords.row(order[q]).transpose());
            hi = hi.cwiseMax(points_.coords.row(order[q]).transpose());
        }
        if (r.end - r.begin <= leaf_size) {
            Leaf leaf;
            leaf.nodes.assign(order.begin() + r.begin, order.begin() + r.end);
            std::sort(leaf.nodes.begin(), leaf.nodes.end());
            leaf.lo = lo;
            leaf.hi = hi;
            leaves_.push_back(std::move(leaf));
            continue;
        }
        const int axis = (hi.x() - lo.x()) >= (hi.y() - lo.y()) ? 0 : 1;
        const Index mid = r.begin + (r.end - r.begin) / 2;
        std::nth_element(order.begin() + r.begin, order.begin() + mid, order.begin() + r.end,
                         [&](Index a, Index b) {
                             const double ca = points_.coords(a, axis), cb = points_.coords(b, axis);
                             return ca < cb || (ca == cb && a < b);
                         });
        stack.push_back({mid, r.end});
        stack.push_back({r.begin, mid});
    }

    const int nl = static_cast<int>(leaves_.size());
    leaf_pairs_.reserve(static_cast<std::size_t>(nl) * (nl + 1) / 2);
    for (int a = 0; a < nl; ++a) {
        for (int b = a; b < nl; ++b) {
            leaf_pairs_.push_back({a, b});
            leaf_pair_d2_.push_back(a == b ? 0.0 : box_distance_squared(leaves_[a], leaves_[b]));
        }
    }
}

double PairIndex::box_distance_squared(const Leaf& a, const Leaf& b) const {
    if (points_.metric == PointSet::Metric::periodic) {
        const double gap = std::max({0.0, b.lo.x() - a.hi.x(), a.lo.x() - b.hi.x()});
        const double span = std::max(b.hi.x() - a.lo.x(), a.hi.x() - b.lo.x());
        const double d = std::max(0.0, std::min(gap, points_.period - span));
        return d * d;
    }
    const double gx = std::max({0.0, b.lo.x() - a.hi.x(), a.lo.x() - b.hi.x()});
    const double gy = std::max({0.0, b.lo.y() - a.hi.y(), a.lo.y() - b.hi.y()});
    return gx * gx + gy * gy;
}

SeminormResult PairIndex::seminorm(const VectorXd& values, double alpha,
                                   PairStrategy strategy) const {
    check_alpha(alpha);
    if (values.size() != points_.size()) throw DegenerateInput("values and points differ in size");
    if (points_.size() < 2) throw DegenerateInput("Hölder seminorm needs at least two nodes");
    if (!values.allFinite()) throw DegenerateInput("non-finite values in Hölder seminorm");
    return strategy == PairStrategy::brute_force ? brute_force(values, alpha) : pruned(values, alpha);
}

SeminormResult PairIndex::brute_force(const VectorXd& v, double alpha) const {
    const Index n = points_.size();
    const double half = 0.5 * alpha;
    Best best;
    for (Index i = 0; i < n; ++i) {
        for (Index j = i + 1; j < n; ++j) {
            ++best.pairs;
            const double d2 = points_.distance_squared(i, j);
            if (d2 == 0.0) continue;
            best.offer(std::abs(v(i) - v(j)) / std::pow(d2, half), i, j);
        }
    }
    if (best.value < 0.0) throw DegenerateInput("all nodes coincide");
    return {best.value, {best.i, best.j}, best.pairs};
}

SeminormResult PairIndex::pruned(const VectorXd& v, double alpha) const {
    const Index n = points_.size();
    const double half = 0.5 * alpha;
    Best best;

    if (v.maxCoeff() == v.minCoeff()) {
        // every ratio is zero: the witness is the first non-degenerate pair
        for (Index i = 0; i < n; ++i) {
            for (Index j = i + 1; j < n; ++j) {
                ++best.pairs;
                if (points_.distance_squared(i, j) > 0.0) return {0.0, {i, j}, best.pairs};
            }
        }
        throw DegenerateInput("all nodes coincide");
    }

    // d^alpha >= min(d, 1) for alpha in (0, 1): pairs with
    // |dv| < best * min(d, 1) cannot reach the running maximum.
    constexpr double kShrink = 1.0 - 1e-12;
    auto consider = [&](Index a, Index b) {
        if (a > b) std::swap(a, b);
        ++best.pairs;
        const double d2 = points_.distance_squared(a, b);
        if (d2 == 0.0) return;
        const double dv = std::abs(v(a) - v(b));
        if (best.value > 0.0) {
            const double m = d2 < 1.0 ? std::sqrt(d2) : 1.0;
            if (dv < best.value * m * kShrink) return;
        }
        best.offer(dv / std::pow(d2, half), a, b);
    };

    // seed the maximum with pairs anchored at the extreme values
    Index imax = 0, imin = 0;
    v.maxCoeff(&imax);
    v.minCoeff(&imin);
    for (Index j = 0; j < n; ++j) {
        if (j != imax) consider(imax, j);
        if (j != imin) consider(imin, j);
    }

    const std::size_t nl = leaves_.size();
    std::vector<double> lmin(nl), lmax(nl);
    for (std::size_t a = 0; a < nl; ++a) {
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        for (Index k : leaves_[a].nodes) {
            lo = std::min(lo, v(k));
            hi = std::max(hi, v(k));
        }
        lmin[a] = lo;
        lmax[a] = hi;
    }

    const std::size_t np = leaf_pairs_.size();
    std::vector<double> bound(np);
    constexpr double kInf = std::numeric_limits<double>::infinity();
    for (std::size_t p = 0; p < np; ++p) {
        const auto [a, b] = leaf_pairs_[p];
        const double spread = std::max(lmax[a] - lmin[b], lmax[b] - lmin[a]);
        if (spread <= 0.0) {
            bound[p] = 0.0;
        } else if (leaf_pair_d2_[p] == 0.0) {
            bound[p] = kInf;
        } else {
            bound[p] = spread / std::pow(leaf_pair_d2_[p], half) * (1.0 + 1e-12);
        }
    }
    std::vector<std::size_t> order(np);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
        return bound[x] > bound[y] || (bound[x] == bound[y] && x < y);
    });

    for (std::size_t p : order) {
        if (bound[p] < best.value) break;
        const auto [a, b] = leaf_pairs_[p];
        const auto& na = leaves_[a].nodes;
        const auto& nb = leaves_[b].nodes;
        if (a == b) {
            for (std::size_t x = 0; x < na.size(); ++x) {
                for (std::size_t y = x + 1; y < na.size(); ++y) consider(na[x], na[y]);
            }
        } else {
            for (Index i : na) {
                for (Index j : nb) consider(i, j);
            }
        }
    }
    return {best.value, {best.i, best.j}, best.pairs};
}

SeminormResult holder_seminorm(const PointSet& points, const VectorXd& values,
                               const HolderParams& params) {
    check_alpha(params.alpha);
    return PairIndex(points).seminorm(values, params.alpha, params.pair_strategy);
}

PointSet node_points(const Mesh& mesh) {
    Eigen::MatrixX2d coords(mesh.size(), 2);
    coords << mesh.interior_points(), mesh.boundary_points();
    return PointSet::euclidean(std::move(coords));
}

PointSet boundary_point_set(const Mesh& mesh) {
    if (mesh.dim() == 1) return PointSet::euclidean(mesh.boundary_points());
    return PointSet::periodic(mesh.arclength(), mesh.perimeter());
}

namespace {

void check_order(int k) {
    if (k < 0 || k > 2) throw DegenerateInput("derivative order must be 0, 1 or 2");
}

}  // namespace

HolderReport c_k_alpha_norm(const GridFunction& u, int k, double alpha, PairStrategy strategy) {
    check_order(k);
    check_alpha(alpha);
    HolderReport report;
    report.order = k;
    report.alpha = alpha;

    std::vector<std::vector<GridFunction>> by_order;
    by_order.push_back({u});
    if (k >= 1) by_order.push_back(gradient(u));
    if (k >= 2) by_order.push_back(hessian(u));
    for (const auto& fields : by_order) {
        double sup = 0.0;
        for (const auto& f : fields) sup = std::max(sup, f.sup_norm());
        report.sup_norms.push_back(sup);
    }

    const PairIndex index(node_points(u.mesh()));
    SeminormResult top;
    top.value = -1.0;
    for (const auto& f : by_order.back()) {
        const SeminormResult r = index.seminorm(f.stacked(), alpha, strategy);
        report.pairs_evaluated += r.pairs_evaluated;
        if (r.value > top.value) top = r;
    }
    report.seminorm = top.value;
    for (int q = 0; q < 2; ++q) report.witness[q] = index.points().coords.row(top.witness[q]).transpose();
    report.total = std::accumulate(report.sup_norms.begin(), report.sup_norms.end(), 0.0) + report.seminorm;
    return report;
}

BoundaryFunction tangential_derivative(const BoundaryFunction& g) {
    const Mesh& m = g.mesh();
    BoundaryFunction out(g.mesh_ptr());
    if (m.dim() == 1) return out;
    const Index n = m.boundary_size();
    const double ht = m.h_theta();
    for (Index i = 0; i < n; ++i) {
        const double speed = m.boundary_weights()(i) / ht;
        const double diff = g.values()((i + 1) % n) - g.values()((i + n - 1) % n);
        out.values()(i) = diff / (2.0 * std::sin(ht) * speed);  // same fitting as the volume stencils
    }
    return out;
}

HolderReport c_k_alpha_norm(const BoundaryFunction& g, int k, double alpha, PairStrategy strategy) {
    check_order(k);
    check_alpha(alpha);
    const Mesh& m = g.mesh();
    HolderReport report;
    report.order = k;
    report.alpha = alpha;

    if (m.dim() == 1) {
        // two isolated points: no tangential derivatives
        report.sup_norms.assign(k + 1, 0.0);
        report.sup_norms[0] = g.sup_norm();
        if (k == 0) {
            const SeminormResult r = holder_seminorm(boundary_point_set(m), g.values(), {alpha, 0, strategy});
            report.seminorm = r.value;
            report.pairs_evaluated = r.pairs_evaluated;
            report.witness[0] = m.boundary_points().row(0).transpose();
            report.witness[1] = m.boundary_points().row(1).transpose();
        }
        report.total = std::accumulate(report.sup_norms.begin(), report.sup_norms.end(), 0.0) + report.seminorm;
        return report;
    }

    BoundaryFunction current = g;
    report.sup_norms.push_back(current.sup_norm());
    for (int j = 1; j <= k; ++j) {
        current = tangential_derivative(current);
        report.sup_norms.push_back(current.sup_norm());
    }
    const SeminormResult r = holder_seminorm(boundary_point_set(m), current.values(), {alpha, k, strategy});
    report.seminorm = r.value;
    report.pairs_evaluated = r.pairs_evaluated;
    for (int q = 0; q < 2; ++q) report.witness[q] = m.boundary_points().row(r.witness[q]).transpose();
    report.total = std::accumulate(report.sup_norms.begin(), report.sup_norms.end(), 0.0) + report.seminorm;
    return report;
}

double l2_norm(const GridFunction& u) {
    return std::sqrt(u.mesh().volume_weights().dot(u.interior().cwiseAbs2()));
}

double lp_norm(const GridFunction& u, double p) {
    if (!(p >= 1.0)) throw InvalidExponent("L^p norm needs p >= 1");
    const VectorXd powered = u.interior().cwiseAbs().array().pow(p).matrix();
    return std::pow(u.mesh().volume_weights().dot(powered), 1.0 / p);
}

}  // namespace neumann
