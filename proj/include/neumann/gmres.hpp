#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <vector>

namespace neumann {

struct KrylovResult {
    Eigen::VectorXd x;
    int iterations = 0;
    double relative_residual = 0.0;
    bool converged = false;
};

/// Restarted GMRES(m) for A x = b with A given as a callable
/// `Eigen::VectorXd apply(const Eigen::VectorXd&)`. Starts from x = 0 and
/// stops when ||b - A x|| <= tol ||b|| or after `max_iterations` inner steps.
/// Arnoldi uses modified Gram-Schmidt; the least-squares problem is kept
/// triangular with Givens rotations.
template <class Apply>
KrylovResult gmres(const Apply& apply, const Eigen::VectorXd& b, int restart,
                   int max_iterations, double tol) {
    using Eigen::VectorXd;
    KrylovResult out;
    out.x = VectorXd::Zero(b.size());
    const double b_norm = b.norm();
    if (b_norm == 0.0) {
        out.converged = true;
        return out;
    }

    std::vector<VectorXd> basis;
    Eigen::MatrixXd hess(restart + 1, restart);
    VectorXd cs(restart), sn(restart), rhs(restart + 1);

    VectorXd r = b;
    double beta = r.norm();
    while (out.iterations < max_iterations) {
        basis.assign(1, r / beta);
        hess.setZero();
        rhs.setZero();
        rhs(0) = beta;

        int k = 0;
        for (; k < restart && out.iterations < max_iterations; ++k) {
            ++out.iterations;
            VectorXd w = apply(basis[k]);
            for (int q = 0; q <= k; ++q) {
                hess(q, k) = basis[q].dot(w);
                w -= hess(q, k) * basis[q];
            }
            hess(k + 1, k) = w.norm();

            for (int q = 0; q < k; ++q) {
                const double t = cs(q) * hess(q, k) + sn(q) * hess(q + 1, k);
                hess(q + 1, k) = -sn(q) * hess(q, k) + cs(q) * hess(q + 1, k);
                hess(q, k) = t;
            }
            const double denom = std::hypot(hess(k, k), hess(k + 1, k));
            cs(k) = hess(k, k) / denom;
            sn(k) = hess(k + 1, k) / denom;
            hess(k, k) = denom;
            hess(k + 1, k) = 0.0;
            rhs(k + 1) = -sn(k) * rhs(k);
            rhs(k) = cs(k) * rhs(k);

            const double h_next = w.norm();
            const bool breakdown = h_next == 0.0;
            if (!breakdown) basis.push_back(w / h_next);
            if (std::abs(rhs(k + 1)) <= tol * b_norm || breakdown) {
                ++k;
                break;
            }
        }

        const VectorXd y = hess.topLeftCorner(k, k).triangularView<Eigen::Upper>().solve(rhs.head(k));
        for (int q = 0; q < k; ++q) out.x += y(q) * basis[q];

        r = b - apply(out.x);
        beta = r.norm();
        out.relative_residual = beta / b_norm;
        if (out.relative_residual <= tol) {
            out.converged = true;
            return out;
        }
    }
    return out;
}

}  // namespace neumann
