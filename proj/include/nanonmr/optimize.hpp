// SPDX-License-Identifier: Apache-2.0
//
// Bound-constrained Levenberg-Marquardt with a central finite-difference Jacobian.
#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>

namespace nanonmr {

struct LmOptions {
    double relative_tolerance = 1e-10;  ///< stop when an accepted step changes the cost by less than this, relatively
    int max_iterations = 200;
    double fd_relative_step = 1e-6;     ///< finite-difference step as a fraction of each parameter's scale
    double initial_damping = 1e-3;
    double max_damping = 1e12;
};

struct LmResult {
    Eigen::VectorXd x;
    double cost = std::numeric_limits<double>::infinity();  ///< half the residual sum of squares
    int iterations = 0;
    int evaluations = 0;
    bool converged = false;
};

/// Minimises 0.5 * |r(x)|^2 subject to lo <= x <= hi.
///
/// `residual(x, out)` fills `out` (size m) and must be deterministic. `scale` gives each
/// parameter's typical magnitude; finite-difference steps are fd_relative_step * scale.
/// Steps are projected onto the box. Marquardt scaling uses diag(J^T J).
template <class Residual>
LmResult levenberg_marquardt(Residual&& residual, Eigen::Index m, Eigen::VectorXd x, const Eigen::VectorXd& lo,
                             const Eigen::VectorXd& hi, const Eigen::VectorXd& scale, const LmOptions& opt = {}) {
    const Eigen::Index n = x.size();
    LmResult result;
    x = x.cwiseMax(lo).cwiseMin(hi);

    Eigen::VectorXd r(m), r_trial(m), r_plus(m), r_minus(m);
    residual(x, r);
    ++result.evaluations;
    double cost = 0.5 * r.squaredNorm();
    if (!std::isfinite(cost)) {
        result.x = x;
        return result;
    }
    if (n == 0) {
        result.x = x;
        result.cost = cost;
        result.converged = true;
        return result;
    }

    Eigen::MatrixXd J(m, n);
    double lambda = opt.initial_damping;
    bool need_jacobian = true;
    Eigen::MatrixXd JtJ(n, n);
    Eigen::VectorXd Jtr(n);

    for (result.iterations = 0; result.iterations < opt.max_iterations; ++result.iterations) {
        if (cost == 0.0) {
            result.converged = true;
            break;
        }
        if (need_jacobian) {
            for (Eigen::Index j = 0; j < n; ++j) {
                const double h = opt.fd_relative_step * scale[j];
                const double up = std::min(x[j] + h, hi[j]);
                const double down = std::max(x[j] - h, lo[j]);
                if (!(up > down)) {
                    J.col(j).setZero();
                    continue;
                }
                Eigen::VectorXd xp = x;
                xp[j] = up;
                residual(xp, r_plus);
                xp[j] = down;
                residual(xp, r_minus);
                result.evaluations += 2;
                J.col(j) = (r_plus - r_minus) / (up - down);
            }
            JtJ.noalias() = J.transpose() * J;
            Jtr.noalias() = J.transpose() * r;
            need_jacobian = false;
        }

        Eigen::MatrixXd A = JtJ;
        for (Eigen::Index j = 0; j < n; ++j) {
            const double d = JtJ(j, j) > 0.0 ? JtJ(j, j) : 1e-12;
            A(j, j) += lambda * d;
        }
        Eigen::LDLT<Eigen::MatrixXd> ldlt(A);
        Eigen::VectorXd step;
        if (ldlt.info() == Eigen::Success) step = ldlt.solve(-Jtr);
        if (ldlt.info() != Eigen::Success || !step.allFinite()) {
            lambda *= 10.0;
            if (lambda > opt.max_damping) break;
            continue;
        }

        const Eigen::VectorXd x_trial = (x + step).cwiseMax(lo).cwiseMin(hi);
        residual(x_trial, r_trial);
        ++result.evaluations;
        const double trial_cost = 0.5 * r_trial.squaredNorm();
        if (std::isfinite(trial_cost) && trial_cost < cost) {
            const double change = (cost - trial_cost) / cost;
            x = x_trial;
            r = r_trial;
            cost = trial_cost;
            lambda = std::max(lambda / 10.0, 1e-15);
            need_jacobian = true;
            if (change < opt.relative_tolerance) {
                result.converged = true;
                ++result.iterations;
                break;
            }
        } else {
            lambda *= 10.0;
            if (lambda > opt.max_damping) {
                // No downhill step at any damping: a (possibly constrained) stationary point.
                result.converged = true;
                break;
            }
        }
    }
    result.x = x;
    result.cost = cost;
    return result;
}

}  // namespace nanonmr
