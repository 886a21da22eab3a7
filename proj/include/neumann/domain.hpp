#pragma once

#include <Eigen/Dense>

#include <memory>
#include <mutex>
#include <vector>

namespace neumann {

enum class DomainKind { interval, star_shaped };

/// Trigonometric polynomial R(theta) = a0 + sum_k (cos[k-1] cos k theta + sin[k-1] sin k theta).
struct RadiusCoeffs {
    double a0 = 1.0;
    std::vector<double> cos;
    std::vector<double> sin;

    double operator()(double theta) const;
    double derivative(double theta) const;
    int degree() const;

    bool operator==(const RadiusCoeffs&) const = default;
};

struct DomainSpec {
    DomainKind kind = DomainKind::star_shaped;
    double a = 0.0;  // interval bounds
    double b = 1.0;
    RadiusCoeffs radius;

    int dim() const { return kind == DomainKind::interval ? 1 : 2; }

    static DomainSpec interval(double a, double b);
    static DomainSpec disk(double radius = 1.0);
    static DomainSpec star(double a0, std::vector<double> cos_coeffs,
                           std::vector<double> sin_coeffs);

    bool operator==(const DomainSpec&) const = default;
};

/// Logical grid sizes. In 1D only n_r is used and counts cells of the interval.
struct Resolution {
    int n_r = 64;
    int n_theta = 128;

    bool operator==(const Resolution&) const = default;
};

struct FieldOperators;

/// Boundary-fitted structured grid.
///
/// 2D: interior node (j, i) sits at logical (s_j, theta_i) with
/// s_j = (j + 1/2) h_s and theta_i = i h_theta, mapped to
/// (R(theta) s cos theta, R(theta) s sin theta). Boundary node i sits at
/// s = 1, theta_i. Interior unknowns are ordered j * n_theta + i.
///
/// 1D: interior node j at a + (j + 1/2) h; boundary nodes 0 (left, x = a)
/// and 1 (right, x = b).
///
/// A Mesh is immutable once built and is always handled through
/// std::shared_ptr<const Mesh>; grid functions compare meshes by identity.
class Mesh {
public:
    Mesh(const Mesh&) = delete;
    Mesh& operator=(const Mesh&) = delete;

    const DomainSpec& spec() const { return spec_; }
    const Resolution& resolution() const { return resolution_; }
    int dim() const { return spec_.dim(); }
    int n_r() const { return resolution_.n_r; }
    int n_theta() const { return dim() == 1 ? 1 : resolution_.n_theta; }
    double h_s() const { return h_s_; }
    double h_theta() const { return h_theta_; }

    Eigen::Index interior_size() const { return interior_points_.rows(); }
    Eigen::Index boundary_size() const { return boundary_points_.rows(); }
    Eigen::Index size() const { return interior_size() + boundary_size(); }
    Eigen::Index index(int j, int i) const {
        return static_cast<Eigen::Index>(j) * n_theta() + i;
    }

    /// Physical coordinates, one row per node (y = 0 in 1D).
    const Eigen::MatrixX2d& interior_points() const { return interior_points_; }
    const Eigen::MatrixX2d& boundary_points() const { return boundary_points_; }

    /// Logical coordinates of interior and boundary nodes.
    const Eigen::VectorXd& s() const { return s_; }
    const Eigen::VectorXd& theta() const { return theta_; }
    const Eigen::VectorXd& boundary_theta() const { return boundary_theta_; }

    /// Quadrature weights: area units in 2D, length units in 1D; boundary
    /// weights are arclength in 2D and point masses (1) in 1D.
    const Eigen::VectorXd& volume_weights() const { return volume_weights_; }
    const Eigen::VectorXd& boundary_weights() const { return boundary_weights_; }
    const Eigen::MatrixX2d& normals() const { return normals_; }

    /// det d(x, y)/d(s, theta) = R^2 s at interior nodes (1D: b - a).
    const Eigen::VectorXd& jacobian() const { return jacobian_; }

    /// Physical gradients of the logical coordinates at every node
    /// (interior rows first, then boundary rows). Only grad_s is used in 1D.
    const Eigen::MatrixX2d& grad_s() const { return grad_s_; }
    const Eigen::MatrixX2d& grad_theta() const { return grad_theta_; }

    /// Cumulative arclength of boundary nodes (trapezoid in theta) and the
    /// discrete perimeter, equal to the sum of boundary weights.
    const Eigen::VectorXd& arclength() const { return arclength_; }
    double perimeter() const { return perimeter_; }
    double area() const { return volume_weights_.sum(); }

    /// Distance from p to the boundary, measured against dense boundary samples.
    double boundary_distance(const Eigen::Vector2d& p) const;
    bool contains(const Eigen::Vector2d& p) const;
    /// Largest logical cell extent in physical units; used as a safety margin.
    double cell_size() const { return cell_size_; }

    /// Discrete differential operators, built on first use.
    const FieldOperators& operators() const;

private:
    Mesh() = default;
    friend std::shared_ptr<const Mesh> build_mesh(const DomainSpec&, Resolution);

    DomainSpec spec_;
    Resolution resolution_;
    double h_s_ = 0.0;
    double h_theta_ = 0.0;
    Eigen::MatrixX2d interior_points_;
    Eigen::MatrixX2d boundary_points_;
    Eigen::VectorXd s_;
    Eigen::VectorXd theta_;
    Eigen::VectorXd boundary_theta_;
    Eigen::VectorXd volume_weights_;
    Eigen::VectorXd boundary_weights_;
    Eigen::MatrixX2d normals_;
    Eigen::VectorXd jacobian_;
    Eigen::MatrixX2d grad_s_;
    Eigen::MatrixX2d grad_theta_;
    Eigen::VectorXd arclength_;
    double perimeter_ = 0.0;
    double cell_size_ = 0.0;
    Eigen::MatrixX2d boundary_samples_;

    mutable std::once_flag operators_once_;
    mutable std::shared_ptr<const FieldOperators> operators_;
};

using MeshPtr = std::shared_ptr<const Mesh>;

/// Builds the boundary-fitted grid. Throws NonPositiveRadius when R(theta) <= 0
/// at any of 4 n_theta samples and ResolutionTooSmall below (4) / (4, 8)
/// or for odd n_theta.
MeshPtr build_mesh(const DomainSpec& spec, Resolution resolution);

/// Outward unit normal at boundary node `b`.
Eigen::Vector2d boundary_normal(const Mesh& mesh, Eigen::Index b);

/// Rejects specs whose invariants fail, independent of resolution.
void validate(const DomainSpec& spec, int samples = 512);

}  // namespace neumann
