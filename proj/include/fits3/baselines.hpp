#pragma once

// Comparator solvers:
//  - ADMM for the convex group lasso 1/2||Ax-b||^2 + alpha sum ||x_g||_2
//  - a few iterations of ADMM on the l1 model, used to warm start FITS^3
// Without extrapolation (ExtrapolationSchedule::zero) fits3_solve is the
// plain ITS^3 iteration, so no separate solver exists for it.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>

#include "errors.hpp"
#include "grouping.hpp"
#include "linalg.hpp"
#include "prox.hpp"
#include "solver.hpp"

namespace fits3 {

struct AdmmConfig {
    double rho = 1.0;
    std::size_t max_iter = 5000;
    double abs_tol = 1e-6;
    double rel_tol = 1e-4;
    double alpha = 0.0;
};

/// Applies (A^T A + rho I)^{-1}. Uses the closed form
/// (1/rho)(I - A^T A / (1 + rho)) when A A^T = I, otherwise conjugate gradients.
class ShiftedNormalSolver {
public:
    ShiftedNormalSolver(const DenseMatrix& A, double rho) : A_(A), rho_(rho) {
        detail::require(rho > 0.0, "ADMM: rho must be > 0");
        orthonormal_ = probe_orthonormal_rows();
    }

    bool uses_closed_form() const noexcept { return orthonormal_; }

    /// Solves (A^T A + rho I) x = v. `x` is the starting guess for CG.
    void solve(std::span<const double> v, Vector& x) const {
        if (orthonormal_) {
            const Vector Av = matvec(A_, v);
            const Vector AtAv = matvec_transpose(A_, Av);
            x.resize(v.size());
            for (std::size_t j = 0; j < v.size(); ++j)
                x[j] = (v[j] - AtAv[j] / (1.0 + rho_)) / rho_;
            return;
        }
        conjugate_gradient(v, x);
    }

private:
    void apply(std::span<const double> x, Vector& out) const {
        const Vector Ax = matvec(A_, x);
        out = matvec_transpose(A_, Ax);
        for (std::size_t j = 0; j < out.size(); ++j) out[j] += rho_ * x[j];
    }

    void conjugate_gradient(std::span<const double> v, Vector& x) const {
        const std::size_t n = v.size();
        if (x.size() != n) x.assign(n, 0.0);
        Vector Ax, r(n), p, Ap;
        apply(x, Ax);
        for (std::size_t j = 0; j < n; ++j) r[j] = v[j] - Ax[j];
        p = r;
        double rr = dot(r, r);
        const double stop = 1e-24 * std::max(dot(v, v), 1e-300);
        for (std::size_t it = 0; it < 10 * n && rr > stop; ++it) {
            apply(p, Ap);
            const double a = rr / dot(p, Ap);
            for (std::size_t j = 0; j < n; ++j) {
                x[j] += a * p[j];
                r[j] -= a * Ap[j];
            }
            const double rr_new = dot(r, r);
            for (std::size_t j = 0; j < n; ++j) p[j] = r[j] + (rr_new / rr) * p[j];
            rr = rr_new;
        }
    }

    bool probe_orthonormal_rows() const {
        // A A^T = I checked on three fixed pseudo-random probes.
        std::mt19937_64 rng(0x5eed);
        std::normal_distribution<double> N;
        for (int k = 0; k < 3; ++k) {
            Vector u(A_.rows());
            for (double& e : u) e = N(rng);
            const Vector AAtu = matvec(A_, matvec_transpose(A_, u));
            if (distance2(AAtu, u) > 1e-10 * norm2(u)) return false;
        }
        return true;
    }

    const DenseMatrix& A_;
    double rho_;
    bool orthonormal_ = false;
};

/// ADMM on min 1/2||Ax - b||^2 + alpha sum_g ||z_g||_2  s.t. x = z, with the
/// primal/dual residual stopping rule of Boyd et al. Returns z.
inline SolveReport admm_group_lasso(const DenseMatrix& A, std::span<const double> b,
                                    const GroupPartition& part, const AdmmConfig& cfg) {
    using clock = std::chrono::steady_clock;
    const auto start = clock::now();
    detail::require(A.rows() == b.size() && A.cols() == part.total_length(),
                    "admm_group_lasso: dimension mismatch");
    detail::require(cfg.alpha >= 0.0, "admm_group_lasso: alpha must be >= 0");
    detail::require(cfg.abs_tol > 0.0 && cfg.rel_tol >= 0.0, "admm_group_lasso: tolerances must be positive");

    const std::size_t n = A.cols();
    const ShiftedNormalSolver solver(A, cfg.rho);
    const Vector Atb = matvec_transpose(A, b);
    Vector x(n, 0.0), z(n, 0.0), u(n, 0.0), v(n), z_old(n);
    const double w = cfg.alpha / cfg.rho;

    auto gl_objective = [&](std::span<const double> xv) {
        Vector r = matvec(A, xv);
        for (std::size_t i = 0; i < r.size(); ++i) r[i] -= b[i];
        double pen = 0.0;
        for (std::size_t g = 0; g < part.group_count(); ++g) pen += norm2(part.group(xv, g));
        const double nr = norm2(r);
        return 0.5 * nr * nr + cfg.alpha * pen;
    };

    SolveReport rep;
    rep.alpha = cfg.alpha;
    rep.fallback_solve = !solver.uses_closed_form();
    rep.initial_objective = gl_objective(z);
    rep.stop_reason = StopReason::MaxIter;
    const double sqrt_n = std::sqrt(static_cast<double>(n));

    for (std::size_t k = 0; k < cfg.max_iter; ++k) {
        const auto t0 = clock::now();
        for (std::size_t j = 0; j < n; ++j) v[j] = Atb[j] + cfg.rho * (z[j] - u[j]);
        solver.solve(v, x);

        z_old = z;
        for (std::size_t j = 0; j < n; ++j) v[j] = x[j] + u[j];
        for (std::size_t g = 0; g < part.group_count(); ++g) {
            const Vector zg = group_prox_p2(part.group(std::span<const double>(v), g), w);
            std::copy(zg.begin(), zg.end(), z.begin() + static_cast<std::ptrdiff_t>(part.offset(g)));
        }
        for (std::size_t j = 0; j < n; ++j) u[j] += x[j] - z[j];

        const double r_norm = distance2(x, z);
        const double s_norm = cfg.rho * distance2(z, z_old);
        const double eps_pri = sqrt_n * cfg.abs_tol + cfg.rel_tol * std::max(norm2(x), norm2(z));
        const double eps_dual = sqrt_n * cfg.abs_tol + cfg.rel_tol * cfg.rho * norm2(u);

        auto& h = rep.histories;
        const double E = gl_objective(z);
        h.objective.push_back(E);
        h.value_function.push_back(E);  // no value function for ADMM; mirrors E
        h.step_norm.push_back(distance2(z, z_old));
        h.extrapolation.push_back(0.0);
        h.support_size.push_back(group_support(z, part).size());
        h.active_size.push_back(part.group_count());
        h.seconds.push_back(std::chrono::duration<double>(clock::now() - t0).count());

        if (r_norm <= eps_pri && s_norm <= eps_dual) {
            rep.stop_reason = StopReason::TolReached;
            break;
        }
    }
    rep.x_final = z;
    rep.iterations = rep.histories.size();
    rep.converged = rep.stop_reason == StopReason::TolReached;
    rep.total_seconds = std::chrono::duration<double>(clock::now() - start).count();
    return rep;
}

struct WarmStartOptions {
    double rho = 1.0;
    /// Standard deviation of the random initial point.
    double init_scale = 0.01;
};

/// x^0 for FITS^3: `iters` ADMM iterations on min 1/2||Ax-b||^2 + alpha||x||_1
/// from a seeded Gaussian start. Returns the sparse (soft-thresholded) iterate.
inline Vector l1_admm_init(const DenseMatrix& A, std::span<const double> b, double alpha,
                           std::size_t iters, std::uint64_t seed,
                           const WarmStartOptions& opt = {}) {
    detail::require(A.rows() == b.size(), "l1_admm_init: dimension mismatch");
    detail::require(alpha >= 0.0, "l1_admm_init: alpha must be >= 0");
    const std::size_t n = A.cols();
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> N;
    Vector z(n);
    for (double& e : z) e = opt.init_scale * N(rng);
    if (iters == 0) return z;

    const ShiftedNormalSolver solver(A, opt.rho);
    const Vector Atb = matvec_transpose(A, b);
    Vector x = z, u(n, 0.0), v(n);
    const double w = alpha / opt.rho;
    for (std::size_t k = 0; k < iters; ++k) {
        for (std::size_t j = 0; j < n; ++j) v[j] = Atb[j] + opt.rho * (z[j] - u[j]);
        solver.solve(v, x);
        for (std::size_t j = 0; j < n; ++j) {
            const double s = x[j] + u[j];
            z[j] = std::max(std::abs(s) - w, 0.0) * detail::sgn(s);
            u[j] += x[j] - z[j];
        }
    }
    return z;
}

} // namespace fits3
