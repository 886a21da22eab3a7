#pragma once

#include "neumann/domain.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <functional>
#include <iosfwd>
#include <vector>

namespace neumann {

/// Coordinates handed to samplers: Cartesian (x, y) and mapped (r, theta, s).
struct NodeCoords {
    double x = 0.0;
    double y = 0.0;
    double r = 0.0;
    double theta = 0.0;
    double s = 0.0;
};

NodeCoords interior_coords(const Mesh& mesh, Eigen::Index k);
NodeCoords boundary_coords(const Mesh& mesh, Eigen::Index b);

using Sampler = std::function<double(const NodeCoords&)>;

/// Real field on a mesh: one value per interior node plus an explicit trace
/// on the boundary nodes. Value semantics; the mesh is shared.
class GridFunction {
public:
    explicit GridFunction(MeshPtr mesh);
    GridFunction(MeshPtr mesh, Eigen::VectorXd interior, Eigen::VectorXd boundary);

    static GridFunction constant(MeshPtr mesh, double value);
    static GridFunction sample(MeshPtr mesh, const Sampler& fn);
    /// Splits a stacked [interior; boundary] vector.
    static GridFunction from_stacked(MeshPtr mesh, const Eigen::VectorXd& stacked);

    const Mesh& mesh() const { return *mesh_; }
    const MeshPtr& mesh_ptr() const { return mesh_; }

    Eigen::VectorXd& interior() { return interior_; }
    const Eigen::VectorXd& interior() const { return interior_; }
    Eigen::VectorXd& boundary() { return boundary_; }
    const Eigen::VectorXd& boundary() const { return boundary_; }

    Eigen::VectorXd stacked() const;
    /// max |u| over interior and boundary nodes.
    double sup_norm() const;
    bool all_finite() const;

    GridFunction& operator+=(const GridFunction& other);
    GridFunction& operator-=(const GridFunction& other);
    GridFunction& operator*=(double c);
    GridFunction& operator+=(double c);
    GridFunction& operator-=(double c) { return *this += -c; }

private:
    MeshPtr mesh_;
    Eigen::VectorXd interior_;
    Eigen::VectorXd boundary_;
};

GridFunction operator+(GridFunction a, const GridFunction& b);
GridFunction operator-(GridFunction a, const GridFunction& b);
GridFunction operator*(double c, GridFunction a);
GridFunction operator*(GridFunction a, double c);
GridFunction operator-(GridFunction a);

/// Field on boundary nodes only.
class BoundaryFunction {
public:
    explicit BoundaryFunction(MeshPtr mesh);
    BoundaryFunction(MeshPtr mesh, Eigen::VectorXd values);

    static BoundaryFunction constant(MeshPtr mesh, double value);
    static BoundaryFunction sample(MeshPtr mesh, const Sampler& fn);

    const Mesh& mesh() const { return *mesh_; }
    const MeshPtr& mesh_ptr() const { return mesh_; }
    Eigen::VectorXd& values() { return values_; }
    const Eigen::VectorXd& values() const { return values_; }
    double sup_norm() const;

    BoundaryFunction& operator+=(const BoundaryFunction& other);
    BoundaryFunction& operator*=(double c);

private:
    MeshPtr mesh_;
    Eigen::VectorXd values_;
};

BoundaryFunction operator+(BoundaryFunction a, const BoundaryFunction& b);
BoundaryFunction operator*(double c, BoundaryFunction a);

void require_same_mesh(const Mesh& a, const Mesh& b);

/// Sparse discrete operators of a mesh. Columns index stacked unknowns
/// [interior; boundary]; rows of `ds`, `dtheta`, `gx`, `gy` index nodes in
/// the same order.
struct FieldOperators {
    using Sparse = Eigen::SparseMatrix<double, Eigen::RowMajor>;

    Sparse ds;      // d/ds (d/dx in 1D)
    Sparse dtheta;  // d/dtheta, periodic; empty in 1D
    Sparse gx;      // physical d/dx
    Sparse gy;      // physical d/dy; zero in 1D
    /// Outward normal derivative at boundary nodes (N_b x N).
    Sparse normal;
    /// Interior rows: divergence-form Laplacian whose outer flux is the
    /// normal-derivative row. Boundary rows: the normal derivative.
    Sparse system;
    /// Quadratic extrapolation of interior values to the boundary (N_b x N).
    Sparse extrapolate;

    static FieldOperators build(const Mesh& mesh);
};

/// Physical gradient: one component in 1D, (d/dx, d/dy) in 2D.
std::vector<GridFunction> gradient(const GridFunction& u);
/// Second derivatives: [u_xx] in 1D, [u_xx, u_xy, u_yy] in 2D.
std::vector<GridFunction> hessian(const GridFunction& u);
/// Divergence-form Laplacian at interior nodes; the boundary trace is the
/// quadratic extrapolation of the interior values.
GridFunction laplacian(const GridFunction& u);
BoundaryFunction normal_derivative(const GridFunction& u);

double integrate_volume(const GridFunction& f);
double integrate_boundary(const BoundaryFunction& g);
double mean(const GridFunction& u);
GridFunction subtract_mean(const GridFunction& u);

/// CSV with columns x[,y],value,is_boundary.
void write_csv(const GridFunction& u, std::ostream& os);

}  // namespace neumann
