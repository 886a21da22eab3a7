#include "neumann/domain.hpp"

#include "neumann/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace neumann {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

double RadiusCoeffs::operator()(double theta) const {
    double r = a0;
    for (std::size_t k = 0; k < cos.size(); ++k) r += cos[k] * std::cos((k + 1) * theta);
    for (std::size_t k = 0; k < sin.size(); ++k) r += sin[k] * std::sin((k + 1) * theta);
    return r;
}

double RadiusCoeffs::derivative(double theta) const {
    double dr = 0.0;
    for (std::size_t k = 0; k < cos.size(); ++k) {
        dr -= static_cast<double>(k + 1) * cos[k] * std::sin((k + 1) * theta);
    }
    for (std::size_t k = 0; k < sin.size(); ++k) {
        dr += static_cast<double>(k + 1) * sin[k] * std::cos((k + 1) * theta);
    }
    return dr;
}

int RadiusCoeffs::degree() const {
    return static_cast<int>(std::max(cos.size(), sin.size()));
}

DomainSpec DomainSpec::interval(double a, double b) {
    DomainSpec spec;
    spec.kind = DomainKind::interval;
    spec.a = a;
    spec.b = b;
    return spec;
}

DomainSpec DomainSpec::disk(double radius) {
    DomainSpec spec;
    spec.kind = DomainKind::star_shaped;
    spec.radius.a0 = radius;
    return spec;
}

DomainSpec DomainSpec::star(double a0, std::vector<double> cos_coeffs,
                            std::vector<double> sin_coeffs) {
    DomainSpec spec;
    spec.kind = DomainKind::star_shaped;
    spec.radius.a0 = a0;
    spec.radius.cos = std::move(cos_coeffs);
    spec.radius.sin = std::move(sin_coeffs);
    return spec;
}

void validate(const DomainSpec& spec, int samples) {
    if (spec.kind == DomainKind::interval) {
        if (!(spec.a < spec.b)) throw DegenerateInput("interval requires a < b");
        return;
    }
    if (!(spec.radius.a0 > 0.0)) throw NonPositiveRadius("radius coefficient a0 must be positive");
    for (int k = 0; k < samples; ++k) {
        const double theta = kTwoPi * k / samples;
        const double r = spec.radius(theta);
        if (!(r > 0.0) || !std::isfinite(r)) {
            throw NonPositiveRadius("R(theta) = " + std::to_string(r) +
                                    " at theta = " + std::to_string(theta));
        }
    }
}

MeshPtr build_mesh(const DomainSpec& spec, Resolution resolution) {
    auto mesh = std::shared_ptr<Mesh>(new Mesh());
    mesh->spec_ = spec;

    if (spec.kind == DomainKind::interval) {
        if (resolution.n_r < 4) throw ResolutionTooSmall("1D meshes need at least 4 cells");
        validate(spec);
        resolution.n_theta = 1;
        mesh->resolution_ = resolution;
        const int n = resolution.n_r;
        const double length = spec.b - spec.a;
        const double h = length / n;
        mesh->h_s_ = 1.0 / n;
        mesh->h_theta_ = 0.0;
        mesh->interior_points_ = Eigen::MatrixX2d::Zero(n, 2);
        mesh->s_.resize(n);
        mesh->theta_ = Eigen::VectorXd::Zero(n);
        for (int j = 0; j < n; ++j) {
            mesh->s_(j) = (j + 0.5) / n;
            mesh->interior_points_(j, 0) = spec.a + (j + 0.5) * h;
        }
        mesh->boundary_points_ = Eigen::MatrixX2d::Zero(2, 2);
        mesh->boundary_points_(0, 0) = spec.a;
        mesh->boundary_points_(1, 0) = spec.b;
        mesh->boundary_theta_ = Eigen::VectorXd::Zero(2);
        mesh->volume_weights_ = Eigen::VectorXd::Constant(n, h);
        mesh->boundary_weights_ = Eigen::VectorXd::Ones(2);
        mesh->normals_ = Eigen::MatrixX2d::Zero(2, 2);
        mesh->normals_(0, 0) = -1.0;
        mesh->normals_(1, 0) = 1.0;
        mesh->jacobian_ = Eigen::VectorXd::Constant(n, length);
        mesh->grad_s_ = Eigen::MatrixX2d::Zero(n + 2, 2);
        mesh->grad_s_.col(0).setOnes();
        mesh->grad_theta_ = Eigen::MatrixX2d::Zero(n + 2, 2);
        mesh->arclength_ = Eigen::VectorXd::Zero(2);
        mesh->perimeter_ = 2.0;
        mesh->cell_size_ = h;
        mesh->boundary_samples_ = mesh->boundary_points_;
        return mesh;
    }

    if (resolution.n_r < 4 || resolution.n_theta < 8) {
        throw ResolutionTooSmall("2D meshes need n_r >= 4 and n_theta >= 8");
    }
    if (resolution.n_theta % 2 != 0) {
        throw ResolutionTooSmall("n_theta must be even (the origin stencil pairs opposite rays)");
    }
    validate(spec, 4 * resolution.n_theta);
    mesh->resolution_ = resolution;

    const int nr = resolution.n_r;
    const int nt = resolution.n_theta;
    const double hs = 1.0 / nr;
    const double ht = kTwoPi / nt;
    mesh->h_s_ = hs;
    mesh->h_theta_ = ht;

    const Eigen::Index n_int = static_cast<Eigen::Index>(nr) * nt;
    mesh->interior_points_.resize(n_int, 2);
    mesh->s_.resize(n_int);
    mesh->theta_.resize(n_int);
    mesh->volume_weights_.resize(n_int);
    mesh->jacobian_.resize(n_int);
    mesh->grad_s_.resize(n_int + nt, 2);
    mesh->grad_theta_.resize(n_int + nt, 2);

    Eigen::VectorXd radius(nt), dradius(nt);
    for (int i = 0; i < nt; ++i) {
        const double theta = i * ht;
        radius(i) = spec.radius(theta);
        dradius(i) = spec.radius.derivative(theta);
    }

    auto set_metric = [&](Eigen::Index row, double s, int i) {
        const double theta = i * ht;
        const double c = std::cos(theta), sn = std::sin(theta);
        const double r = radius(i), dr = dradius(i);
        mesh->grad_s_(row, 0) = c / r + dr * sn / (r * r);
        mesh->grad_s_(row, 1) = sn / r - dr * c / (r * r);
        mesh->grad_theta_(row, 0) = -sn / (r * s);
        mesh->grad_theta_(row, 1) = c / (r * s);
    };

    for (int j = 0; j < nr; ++j) {
        const double s = (j + 0.5) * hs;
        for (int i = 0; i < nt; ++i) {
            const Eigen::Index k = mesh->index(j, i);
            const double theta = i * ht;
            const double r = radius(i);
            mesh->s_(k) = s;
            mesh->theta_(k) = theta;
            mesh->interior_points_(k, 0) = r * s * std::cos(theta);
            mesh->interior_points_(k, 1) = r * s * std::sin(theta);
            mesh->jacobian_(k) = r * r * s;
            // midpoint in s, trapezoid (periodic) in theta
            mesh->volume_weights_(k) = r * r * s * hs * ht;
            set_metric(k, s, i);
        }
    }

    mesh->boundary_points_.resize(nt, 2);
    mesh->boundary_theta_.resize(nt);
    mesh->boundary_weights_.resize(nt);
    mesh->normals_.resize(nt, 2);
    Eigen::VectorXd speed(nt);
    double max_r = 0.0, max_speed = 0.0;
    for (int i = 0; i < nt; ++i) {
        const double theta = i * ht;
        const double c = std::cos(theta), sn = std::sin(theta);
        const double r = radius(i), dr = dradius(i);
        speed(i) = std::hypot(r, dr);
        mesh->boundary_theta_(i) = theta;
        mesh->boundary_points_(i, 0) = r * c;
        mesh->boundary_points_(i, 1) = r * sn;
        mesh->boundary_weights_(i) = speed(i) * ht;
        Eigen::Vector2d n(r * c + dr * sn, r * sn - dr * c);
        n /= n.norm();
        mesh->normals_.row(i) = n.transpose();
        set_metric(n_int + i, 1.0, i);
        max_r = std::max(max_r, r);
        max_speed = std::max(max_speed, speed(i));
    }

    mesh->arclength_.resize(nt);
    mesh->arclength_(0) = 0.0;
    for (int i = 1; i < nt; ++i) {
        mesh->arclength_(i) = mesh->arclength_(i - 1) + 0.5 * ht * (speed(i - 1) + speed(i));
    }
    mesh->perimeter_ = mesh->boundary_weights_.sum();
    mesh->cell_size_ = std::max(max_r * hs, max_speed * ht);

    const int ns = 4 * nt;
    mesh->boundary_samples_.resize(ns, 2);
    for (int k = 0; k < ns; ++k) {
        const double theta = kTwoPi * k / ns;
        const double r = spec.radius(theta);
        mesh->boundary_samples_(k, 0) = r * std::cos(theta);
        mesh->boundary_samples_(k, 1) = r * std::sin(theta);
    }
    return mesh;
}

Eigen::Vector2d boundary_normal(const Mesh& mesh, Eigen::Index b) {
    if (b < 0 || b >= mesh.boundary_size()) {
        throw std::out_of_range("boundary index " + std::to_string(b) + " out of range");
    }
    return mesh.normals().row(b).transpose();
}

double Mesh::boundary_distance(const Eigen::Vector2d& p) const {
    if (dim() == 1) return std::min(p.x() - spec_.a, spec_.b - p.x());
    return (boundary_samples_.rowwise() - p.transpose()).rowwise().norm().minCoeff();
}

bool Mesh::contains(const Eigen::Vector2d& p) const {
    if (dim() == 1) return p.x() > spec_.a && p.x() < spec_.b;
    const double theta = std::atan2(p.y(), p.x());
    return p.norm() < spec_.radius(theta);
}

}  // namespace neumann
