#include "neumann/field.hpp"

#include "neumann/errors.hpp"

#include <array>
#include <cmath>
#include <iomanip>
#include <numbers>
#include <ostream>
#include <utility>

namespace neumann {

using Eigen::Index;
using Eigen::VectorXd;
using Sparse = FieldOperators::Sparse;
using Triplet = Eigen::Triplet<double>;

NodeCoords interior_coords(const Mesh& mesh, Index k) {
    NodeCoords c;
    c.x = mesh.interior_points()(k, 0);
    c.y = mesh.interior_points()(k, 1);
    c.s = mesh.s()(k);
    if (mesh.dim() == 1) {
        c.r = std::abs(c.x);
    } else {
        c.r = std::hypot(c.x, c.y);
        c.theta = mesh.theta()(k);
    }
    return c;
}

NodeCoords boundary_coords(const Mesh& mesh, Index b) {
    NodeCoords c;
    c.x = mesh.boundary_points()(b, 0);
    c.y = mesh.boundary_points()(b, 1);
    if (mesh.dim() == 1) {
        c.r = std::abs(c.x);
        c.s = b == 0 ? 0.0 : 1.0;
    } else {
        c.r = std::hypot(c.x, c.y);
        c.theta = mesh.boundary_theta()(b);
        c.s = 1.0;
    }
    return c;
}

void require_same_mesh(const Mesh& a, const Mesh& b) {
    if (&a != &b) throw MeshMismatch();
}

// ---------------------------------------------------------------------------
// GridFunction / BoundaryFunction

GridFunction::GridFunction(MeshPtr mesh)
    : mesh_(std::move(mesh)),
      interior_(VectorXd::Zero(mesh_->interior_size())),
      boundary_(VectorXd::Zero(mesh_->boundary_size())) {}

GridFunction::GridFunction(MeshPtr mesh, VectorXd interior, VectorXd boundary)
    : mesh_(std::move(mesh)), interior_(std::move(interior)), boundary_(std::move(boundary)) {
    if (interior_.size() != mesh_->interior_size() || boundary_.size() != mesh_->boundary_size()) {
        throw DegenerateInput("grid function size does not match its mesh");
    }
}

GridFunction GridFunction::constant(MeshPtr mesh, double value) {
    GridFunction u(std::move(mesh));
    u.interior_.setConstant(value);
    u.boundary_.setConstant(value);
    return u;
}

GridFunction GridFunction::sample(MeshPtr mesh, const Sampler& fn) {
    GridFunction u(std::move(mesh));
    const Mesh& m = *u.mesh_;
    for (Index k = 0; k < m.interior_size(); ++k) u.interior_(k) = fn(interior_coords(m, k));
    for (Index b = 0; b < m.boundary_size(); ++b) u.boundary_(b) = fn(boundary_coords(m, b));
    return u;
}

GridFunction GridFunction::from_stacked(MeshPtr mesh, const VectorXd& stacked) {
    const Index n_int = mesh->interior_size();
    const Index n_b = mesh->boundary_size();
    if (stacked.size() < n_int + n_b) throw DegenerateInput("stacked vector too short");
    return GridFunction(mesh, stacked.head(n_int), stacked.segment(n_int, n_b));
}

VectorXd GridFunction::stacked() const {
    VectorXd out(interior_.size() + boundary_.size());
    out << interior_, boundary_;
    return out;
}

double GridFunction::sup_norm() const {
    double m = interior_.size() ? interior_.cwiseAbs().maxCoeff() : 0.0;
    if (boundary_.size()) m = std::max(m, boundary_.cwiseAbs().maxCoeff());
    return m;
}

bool GridFunction::all_finite() const { return interior_.allFinite() && boundary_.allFinite(); }

GridFunction& GridFunction::operator+=(const GridFunction& other) {
    require_same_mesh(*mesh_, *other.mesh_);
    interior_ += other.interior_;
    boundary_ += other.boundary_;
    return *this;
}

GridFunction& GridFunction::operator-=(const GridFunction& other) {
    require_same_mesh(*mesh_, *other.mesh_);
    interior_ -= other.interior_;
    boundary_ -= other.boundary_;
    return *this;
}

GridFunction& GridFunction::operator*=(double c) {
    interior_ *= c;
    boundary_ *= c;
    return *this;
}

GridFunction& GridFunction::operator+=(double c) {
    interior_.array() += c;
    boundary_.array() += c;
    return *this;
}

GridFunction operator+(GridFunction a, const GridFunction& b) { return a += b; }
GridFunction operator-(GridFunction a, const GridFunction& b) { return a -= b; }
GridFunction operator*(double c, GridFunction a) { return a *= c; }
GridFunction operator*(GridFunction a, double c) { return a *= c; }
GridFunction operator-(GridFunction a) { return a *= -1.0; }

BoundaryFunction::BoundaryFunction(MeshPtr mesh)
    : mesh_(std::move(mesh)), values_(VectorXd::Zero(mesh_->boundary_size())) {}

BoundaryFunction::BoundaryFunction(MeshPtr mesh, VectorXd values)
    : mesh_(std::move(mesh)), values_(std::move(values)) {
    if (values_.size() != mesh_->boundary_size()) {
        throw DegenerateInput("boundary function size does not match its mesh");
    }
}

BoundaryFunction BoundaryFunction::constant(MeshPtr mesh, double value) {
    BoundaryFunction g(std::move(mesh));
    g.values_.setConstant(value);
    return g;
}

BoundaryFunction BoundaryFunction::sample(MeshPtr mesh, const Sampler& fn) {
    BoundaryFunction g(std::move(mesh));
    for (Index b = 0; b < g.mesh_->boundary_size(); ++b) g.values_(b) = fn(boundary_coords(*g.mesh_, b));
    return g;
}

double BoundaryFunction::sup_norm() const {
    return values_.size() ? values_.cwiseAbs().maxCoeff() : 0.0;
}

BoundaryFunction& BoundaryFunction::operator+=(const BoundaryFunction& other) {
    require_same_mesh(*mesh_, *other.mesh_);
    values_ += other.values_;
    return *this;
}

BoundaryFunction& BoundaryFunction::operator*=(double c) {
    values_ *= c;
    return *this;
}

BoundaryFunction operator+(BoundaryFunction a, const BoundaryFunction& b) { return a += b; }
BoundaryFunction operator*(double c, BoundaryFunction a) { return a *= c; }

// ---------------------------------------------------------------------------
// Operator assembly

namespace {

// Weights of the derivative at t of the quadratic through (t0, t1, t2).
std::array<double, 3> lagrange_d1(double t, double t0, double t1, double t2) {
    return {((t - t1) + (t - t2)) / ((t0 - t1) * (t0 - t2)),
            ((t - t0) + (t - t2)) / ((t1 - t0) * (t1 - t2)),
            ((t - t0) + (t - t1)) / ((t2 - t0) * (t2 - t1))};
}

// Weights of the value at t of the quadratic through (t0, t1, t2).
std::array<double, 3> lagrange_d0(double t, double t0, double t1, double t2) {
    return {(t - t1) * (t - t2) / ((t0 - t1) * (t0 - t2)),
            (t - t0) * (t - t2) / ((t1 - t0) * (t1 - t2)),
            (t - t0) * (t - t1) / ((t2 - t0) * (t2 - t1))};
}

// A sparse row under construction: (column, coefficient) pairs, duplicates allowed.
using Row = std::vector<std::pair<Index, double>>;

void add_row(Row& dst, const Sparse& m, Index row, double scale) {
    for (Sparse::InnerIterator it(m, row); it; ++it) dst.emplace_back(it.col(), scale * it.value());
}

void emit(std::vector<Triplet>& triplets, Index row, const Row& entries, double scale = 1.0) {
    for (const auto& [col, v] : entries) triplets.emplace_back(row, col, scale * v);
}

Sparse from_triplets(Index rows, Index cols, const std::vector<Triplet>& t) {
    Sparse m(rows, cols);
    m.setFromTriplets(t.begin(), t.end());
    m.prune(0.0);
    return m;
}

FieldOperators build_1d(const Mesh& mesh) {
    const int n = mesh.n_r();
    const double h = (mesh.spec().b - mesh.spec().a) / n;
    const Index N = n + 2;
    const Index left = n, right = n + 1;
    // offsets measured from a, in units of physical length
    auto x = [&](int j) { return (j + 0.5) * h; };
    const double xb = n * h;

    std::vector<Triplet> t;
    auto put = [&](Index row, std::array<Index, 3> cols, std::array<double, 3> w) {
        for (int q = 0; q < 3; ++q) t.emplace_back(row, cols[q], w[q]);
    };
    for (int j = 0; j < n; ++j) {
        if (j == 0) {
            put(j, {left, 0, 1}, lagrange_d1(x(0), 0.0, x(0), x(1)));
        } else if (j == n - 1) {
            put(j, {n - 2, n - 1, right}, lagrange_d1(x(n - 1), x(n - 2), x(n - 1), xb));
        } else {
            put(j, {j - 1, j, j + 1}, lagrange_d1(x(j), x(j - 1), x(j), x(j + 1)));
        }
    }
    put(left, {left, 0, 1}, lagrange_d1(0.0, 0.0, x(0), x(1)));
    put(right, {n - 2, n - 1, right}, lagrange_d1(xb, x(n - 2), x(n - 1), xb));

    FieldOperators ops;
    ops.ds = from_triplets(N, N, t);
    ops.gx = ops.ds;
    ops.gy = Sparse(N, N);
    ops.dtheta = Sparse(N, N);

    std::vector<Triplet> tn;
    Row r;
    add_row(r, ops.ds, left, -1.0);
    emit(tn, 0, r);
    r.clear();
    add_row(r, ops.ds, right, 1.0);
    emit(tn, 1, r);
    ops.normal = from_triplets(2, N, tn);

    // Flux form: (F_{j+1/2} - F_{j-1/2}) / h with F = u' on faces.
    std::vector<Triplet> ts;
    for (int j = 0; j < n; ++j) {
        Row flux;
        if (j + 1 < n) {
            flux.emplace_back(j + 1, 1.0 / h);
            flux.emplace_back(j, -1.0 / h);
        } else {
            add_row(flux, ops.ds, right, 1.0);
        }
        if (j > 0) {
            flux.emplace_back(j, -1.0 / h);
            flux.emplace_back(j - 1, 1.0 / h);
        } else {
            add_row(flux, ops.ds, left, -1.0);
        }
        emit(ts, j, flux, 1.0 / h);
    }
    for (Sparse::InnerIterator it(ops.normal, 0); it; ++it) ts.emplace_back(left, it.col(), it.value());
    for (Sparse::InnerIterator it(ops.normal, 1); it; ++it) ts.emplace_back(right, it.col(), it.value());
    ops.system = from_triplets(N, N, ts);

    std::vector<Triplet> te;
    auto w = lagrange_d0(0.0, x(0), x(1), x(2));
    for (int q = 0; q < 3; ++q) te.emplace_back(0, q, w[q]);
    w = lagrange_d0(xb, x(n - 1), x(n - 2), x(n - 3));
    for (int q = 0; q < 3; ++q) te.emplace_back(1, n - 1 - q, w[q]);
    ops.extrapolate = from_triplets(2, N, te);
    return ops;
}

FieldOperators build_2d(const Mesh& mesh) {
    const int nr = mesh.n_r();
    const int nt = mesh.n_theta();
    const double hs = mesh.h_s();
    const double ht = mesh.h_theta();
    const Index n_int = mesh.interior_size();
    const Index N = mesh.size();
    const auto& radius = mesh.spec().radius;

    auto node = [&](int j, int i) { return mesh.index(j, ((i % nt) + nt) % nt); };
    auto bnode = [&](int i) { return n_int + ((i % nt) + nt) % nt; };
    auto s_of = [&](int j) { return (j + 0.5) * hs; };

    std::vector<Triplet> t;
    auto put = [&](Index row, std::array<Index, 3> cols, std::array<double, 3> w) {
        for (int q = 0; q < 3; ++q) t.emplace_back(row, cols[q], w[q]);
    };

    // d/ds along each ray. At j = 0 the ray is continued through the origin
    // onto the opposite ray; its first node sits at signed position
    // -(R(theta + pi) / R(theta)) h_s / 2 in the logical units of this ray.
    for (int i = 0; i < nt; ++i) {
        const double theta = i * ht;
        const double ratio = radius(theta + std::numbers::pi) / radius(theta);
        for (int j = 0; j < nr; ++j) {
            const Index row = node(j, i);
            if (j == 0) {
                put(row, {node(0, i + nt / 2), node(0, i), node(1, i)},
                    lagrange_d1(s_of(0), -ratio * s_of(0), s_of(0), s_of(1)));
            } else if (j == nr - 1) {
                put(row, {node(j - 1, i), node(j, i), bnode(i)},
                    lagrange_d1(s_of(j), s_of(j - 1), s_of(j), 1.0));
            } else {
                put(row, {node(j - 1, i), node(j, i), node(j + 1, i)},
                    lagrange_d1(s_of(j), s_of(j - 1), s_of(j), s_of(j + 1)));
            }
        }
        put(bnode(i), {bnode(i), node(nr - 1, i), node(nr - 2, i)},
            lagrange_d1(1.0, 1.0, s_of(nr - 1), s_of(nr - 2)));
    }

    FieldOperators ops;
    ops.ds = from_triplets(N, N, t);

    // Angular differences are fitted to the first Fourier mode: 2 sin(h)
    // replaces 2h in the centered difference and (2 sin(h/2))^2 / h replaces
    // h across cell faces. Both stay second order, and cos/sin(theta) are
    // differentiated exactly, so linear fields on the disk are reproduced.
    const double d_theta = 0.5 / std::sin(ht);
    const double face_theta = ht / std::pow(2.0 * std::sin(0.5 * ht), 2);

    std::vector<Triplet> tt;
    for (int j = 0; j < nr; ++j) {
        for (int i = 0; i < nt; ++i) {
            tt.emplace_back(node(j, i), node(j, i + 1), d_theta);
            tt.emplace_back(node(j, i), node(j, i - 1), -d_theta);
        }
    }
    for (int i = 0; i < nt; ++i) {
        tt.emplace_back(bnode(i), bnode(i + 1), d_theta);
        tt.emplace_back(bnode(i), bnode(i - 1), -d_theta);
    }
    ops.dtheta = from_triplets(N, N, tt);

    const VectorXd sx = mesh.grad_s().col(0), sy = mesh.grad_s().col(1);
    const VectorXd tx = mesh.grad_theta().col(0), ty = mesh.grad_theta().col(1);
    ops.gx = Sparse(sx.asDiagonal() * ops.ds + tx.asDiagonal() * ops.dtheta);
    ops.gy = Sparse(sy.asDiagonal() * ops.ds + ty.asDiagonal() * ops.dtheta);

    // Metric coefficients of the divergence form
    //   J Lap u = d_s(s a u_s - b u_theta) + d_theta(-b u_s + u_theta / s),
    // with a = 1 + (R'/R)^2, b = R'/R, J = R^2 s.
    auto coef_a = [&](double theta) {
        const double q = radius.derivative(theta) / radius(theta);
        return 1.0 + q * q;
    };
    auto coef_b = [&](double theta) { return radius.derivative(theta) / radius(theta); };

    // Boundary flux per unit theta: F = a u_s - b u_theta = L du/dn, L = |x_theta|.
    std::vector<Triplet> tn;
    std::vector<Row> outer_flux(nt);
    for (int i = 0; i < nt; ++i) {
        const double theta = i * ht;
        const double speed = std::hypot(radius(theta), radius.derivative(theta));
        Row& f = outer_flux[i];
        add_row(f, ops.ds, bnode(i), coef_a(theta));
        add_row(f, ops.dtheta, bnode(i), -coef_b(theta));
        emit(tn, i, f, 1.0 / speed);
    }
    ops.normal = from_triplets(nt, N, tn);

    std::vector<Triplet> ts;
    for (int j = 0; j < nr; ++j) {
        const double s = s_of(j);
        for (int i = 0; i < nt; ++i) {
            const double theta = i * ht;
            const double r = radius(theta);
            const Index row = node(j, i);
            const double cell = r * r * s * hs * ht;
            Row acc;

            // radial faces, integrated over the theta extent h_theta
            if (j + 1 < nr) {
                const double sf = (j + 1) * hs;
                Row flux;
                flux.emplace_back(node(j + 1, i), coef_a(theta) * sf / hs);
                flux.emplace_back(node(j, i), -coef_a(theta) * sf / hs);
                add_row(flux, ops.dtheta, node(j, i), -0.5 * coef_b(theta));
                add_row(flux, ops.dtheta, node(j + 1, i), -0.5 * coef_b(theta));
                for (auto& e : flux) acc.emplace_back(e.first, ht * e.second);
            } else {
                for (auto& e : outer_flux[i]) acc.emplace_back(e.first, ht * e.second);
            }
            if (j > 0) {
                const double sf = j * hs;
                Row flux;
                flux.emplace_back(node(j, i), coef_a(theta) * sf / hs);
                flux.emplace_back(node(j - 1, i), -coef_a(theta) * sf / hs);
                add_row(flux, ops.dtheta, node(j - 1, i), -0.5 * coef_b(theta));
                add_row(flux, ops.dtheta, node(j, i), -0.5 * coef_b(theta));
                for (auto& e : flux) acc.emplace_back(e.first, -ht * e.second);
            }
            // the inner face of the first ring has zero length: no flux

            // angular faces, integrated over the radial extent h_s
            for (int side : {+1, -1}) {
                const double tf = theta + 0.5 * side * ht;
                const int i_out = side > 0 ? i + 1 : i - 1;
                Row flux;
                // u_theta across the face, oriented in +theta
                flux.emplace_back(side > 0 ? node(j, i + 1) : node(j, i), face_theta / s);
                flux.emplace_back(side > 0 ? node(j, i) : node(j, i - 1), -face_theta / s);
                add_row(flux, ops.ds, node(j, i), -0.5 * coef_b(tf));
                add_row(flux, ops.ds, node(j, i_out), -0.5 * coef_b(tf));
                for (auto& e : flux) acc.emplace_back(e.first, side * hs * e.second);
            }
            emit(ts, row, acc, 1.0 / cell);
        }
    }
    for (int i = 0; i < nt; ++i) {
        for (Sparse::InnerIterator it(ops.normal, i); it; ++it) ts.emplace_back(bnode(i), it.col(), it.value());
    }
    ops.system = from_triplets(N, N, ts);

    std::vector<Triplet> te;
    const auto w = lagrange_d0(1.0, s_of(nr - 1), s_of(nr - 2), s_of(nr - 3));
    for (int i = 0; i < nt; ++i) {
        for (int q = 0; q < 3; ++q) te.emplace_back(i, node(nr - 1 - q, i), w[q]);
    }
    ops.extrapolate = from_triplets(nt, N, te);
    return ops;
}

}  // namespace

FieldOperators FieldOperators::build(const Mesh& mesh) {
    return mesh.dim() == 1 ? build_1d(mesh) : build_2d(mesh);
}

const FieldOperators& Mesh::operators() const {
    std::call_once(operators_once_, [this] {
        operators_ = std::make_shared<const FieldOperators>(FieldOperators::build(*this));
    });
    return *operators_;
}

// ---------------------------------------------------------------------------
// Calculus

namespace {

// Every operator here annihilates constants. Shifting by one nodal value
// first makes that exact in floating point too, so derivatives of a constant
// come out as exact zeros instead of rounding noise scaled by 1/h.
VectorXd shifted(const GridFunction& u) {
    VectorXd v = u.stacked();
    return v.array() - v(0);
}

GridFunction apply(const GridFunction& u, const Sparse& op) {
    return GridFunction::from_stacked(u.mesh_ptr(), op * shifted(u));
}

}  // namespace

std::vector<GridFunction> gradient(const GridFunction& u) {
    const auto& ops = u.mesh().operators();
    std::vector<GridFunction> out;
    out.push_back(apply(u, ops.gx));
    if (u.mesh().dim() == 2) out.push_back(apply(u, ops.gy));
    return out;
}

std::vector<GridFunction> hessian(const GridFunction& u) {
    const auto& ops = u.mesh().operators();
    const auto grad = gradient(u);
    std::vector<GridFunction> out;
    out.push_back(apply(grad[0], ops.gx));
    if (u.mesh().dim() == 2) {
        out.push_back(0.5 * (apply(grad[0], ops.gy) + apply(grad[1], ops.gx)));
        out.push_back(apply(grad[1], ops.gy));
    }
    return out;
}

GridFunction laplacian(const GridFunction& u) {
    const auto& ops = u.mesh().operators();
    const VectorXd stacked = shifted(u);
    const VectorXd lap = ops.system * stacked;
    GridFunction out(u.mesh_ptr());
    out.interior() = lap.head(u.mesh().interior_size());
    VectorXd interior_only = VectorXd::Zero(stacked.size());
    interior_only.head(u.mesh().interior_size()) = out.interior();
    out.boundary() = ops.extrapolate * interior_only;
    return out;
}

BoundaryFunction normal_derivative(const GridFunction& u) {
    return BoundaryFunction(u.mesh_ptr(), u.mesh().operators().normal * shifted(u));
}

double integrate_volume(const GridFunction& f) {
    return f.mesh().volume_weights().dot(f.interior());
}

double integrate_boundary(const BoundaryFunction& g) {
    return g.mesh().boundary_weights().dot(g.values());
}

double mean(const GridFunction& u) { return integrate_volume(u) / u.mesh().area(); }

GridFunction subtract_mean(const GridFunction& u) {
    GridFunction out = u;
    out -= mean(u);
    return out;
}

void write_csv(const GridFunction& u, std::ostream& os) {
    const Mesh& m = u.mesh();
    const bool two_d = m.dim() == 2;
    os << (two_d ? "x,y,value,is_boundary\n" : "x,value,is_boundary\n");
    os << std::setprecision(17);
    auto line = [&](const Eigen::MatrixX2d& pts, Index k, double v, int flag) {
        os << pts(k, 0) << ',';
        if (two_d) os << pts(k, 1) << ',';
        os << v << ',' << flag << '\n';
    };
    for (Index k = 0; k < m.interior_size(); ++k) line(m.interior_points(), k, u.interior()(k), 0);
    for (Index b = 0; b < m.boundary_size(); ++b) line(m.boundary_points(), b, u.boundary()(b), 1);
}

}  // namespace neumann
