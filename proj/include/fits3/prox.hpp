#pragma once

// Group proximal subproblems
//
//     argmin_x  (beta/2) ||x - y||_2^2 + beta * w * ||x||_p
//
// i.e. the prox of w||.||_p at y. Closed forms exist for p = 1 (soft
// thresholding) and p = 2 (radial shrinkage). For p > 2 we use the Moreau
// decomposition x = y - Proj_{w B_{p*}}(y), projecting onto the dual-norm ball
// by safeguarded Newton on its scalar multiplier. For 1 < p < 2 the dual
// exponent blows up as p -> 1, so the primal optimality conditions are solved
// directly, again through one scalar multiplier.
// Every general-p solve comes with a certificate: the smallest subgradient
// residual of the subproblem at the returned point.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <utility>

#include "errors.hpp"
#include "linalg.hpp"

namespace fits3 {

struct ProxCertificate {
    double residual_norm = 0.0;
    double bound = 0.0;
    bool satisfied = true;
};

struct ProxResult {
    Vector x;
    ProxCertificate certificate;
    std::size_t inner_iterations = 0;
};

class InnerSolverError : public NumericError {
public:
    explicit InnerSolverError(ProxResult best)
        : NumericError("group prox: inner solver exhausted its iteration budget (residual " +
                       std::to_string(best.certificate.residual_norm) + " > bound " +
                       std::to_string(best.certificate.bound) + ")"),
          best_(std::move(best)) {}

    const ProxResult& best() const noexcept { return best_; }

private:
    ProxResult best_;
};

struct InnerOptions {
    double tol = 1e-13;           ///< initial tolerance on the ball-constraint defect
    std::size_t max_iter = 500;   ///< total Newton/bisection steps across refinements
};

namespace detail {

inline double sgn(double v) { return (v > 0.0) - (v < 0.0); }

/// Conjugate exponent with explicit branches at the self-dual and l1 points.
inline double dual_exponent(double p) {
    if (p == 1.0) return std::numeric_limits<double>::infinity();
    if (p == 2.0) return 2.0;
    return p / (p - 1.0);
}

/// Solves v + mu*r*v^(r-1) = a for v in [0, a].
inline double ball_coordinate(double a, double mu, double r, std::size_t& steps) {
    if (a == 0.0) return 0.0;
    if (mu == 0.0) return a;
    double lo = 0.0, hi = a;
    // The root lies below (a / (mu r))^(1/(r-1)); if that underflows, so does the root.
    const double cap = std::pow(a / (mu * r), 1.0 / (r - 1.0));
    if (cap == 0.0) return 0.0;
    double v = std::min(a, cap);
    for (int it = 0; it < 200; ++it) {
        ++steps;
        const double pw = std::pow(v, r - 1.0);
        const double h = v + mu * r * pw - a;
        if (h == 0.0) return v;
        (h > 0.0 ? hi : lo) = v;
        const double dh = 1.0 + mu * r * (r - 1.0) * pw / v;
        double nv = v - h / dh;
        if (!(nv > lo && nv < hi)) nv = 0.5 * (lo + hi);
        if (std::abs(nv - v) <= 4.0 * std::numeric_limits<double>::epsilon() * v) return nv;
        v = nv;
    }
    return v;
}

} // namespace detail

/// Euclidean projection of y onto {u : ||u||_r <= radius}, 1 <= r <= inf.
/// `steps` accumulates scalar Newton/bisection steps.
inline Vector project_lp_ball(std::span<const double> y, double radius, double r, double tol,
                              std::size_t& steps) {
    detail::require(radius >= 0.0, "project_lp_ball: radius must be >= 0");
    detail::require(r >= 1.0, "project_lp_ball: exponent must be >= 1");
    Vector u(y.begin(), y.end());
    if (radius == 0.0) {
        std::fill(u.begin(), u.end(), 0.0);
        return u;
    }
    if (lp_norm(y, r) <= radius) return u;

    if (std::isinf(r)) {
        for (double& e : u) e = std::clamp(e, -radius, radius);
        return u;
    }
    if (r == 2.0) {
        const double s = radius / norm2(y);
        for (double& e : u) e *= s;
        return u;
    }
    if (r == 1.0) {
        // Sort-based simplex projection of |y|.
        Vector a(y.size());
        for (std::size_t i = 0; i < y.size(); ++i) a[i] = std::abs(y[i]);
        Vector s = a;
        std::sort(s.begin(), s.end(), std::greater<>());
        double cum = 0.0, theta = 0.0;
        for (std::size_t k = 0; k < s.size(); ++k) {
            cum += s[k];
            const double cand = (cum - radius) / static_cast<double>(k + 1);
            if (s[k] > cand) theta = cand;
        }
        for (std::size_t i = 0; i < y.size(); ++i)
            u[i] = detail::sgn(y[i]) * std::max(a[i] - theta, 0.0);
        return u;
    }

    // 1 < r < inf: KKT gives v_i + mu r v_i^(r-1) = |y_i| / radius on the unit
    // ball, with sum v_i^r = 1 pinning the multiplier mu > 0.
    Vector a(y.size()), v(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) a[i] = std::abs(y[i]) / radius;

    auto evaluate = [&](double mu, double* slope) {
        double phi = -1.0, dphi = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) {
            v[i] = detail::ball_coordinate(a[i], mu, r, steps);
            if (v[i] == 0.0) continue;
            const double pw = std::pow(v[i], r - 1.0);
            phi += pw * v[i];
            const double dv = -r * pw / (1.0 + mu * r * (r - 1.0) * pw / v[i]);
            dphi += r * pw * dv;
        }
        if (slope) *slope = dphi;
        return phi;
    };

    double lo = 0.0, hi = 1.0;
    while (evaluate(hi, nullptr) > 0.0) {
        lo = hi;
        hi *= 2.0;
        if (hi > 1e300) throw NumericError("project_lp_ball: multiplier bracket overflow");
    }
    double mu = 0.5 * (lo + hi);
    for (int it = 0; it < 300; ++it) {
        double slope = 0.0;
        const double phi = evaluate(mu, &slope);
        if (std::abs(phi) <= tol) break;
        (phi > 0.0 ? lo : hi) = mu;
        double next = slope < 0.0 ? mu - phi / slope : 0.5 * (lo + hi);
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * hi) break;
        mu = next;
    }
    evaluate(mu, nullptr);
    for (std::size_t i = 0; i < y.size(); ++i) u[i] = detail::sgn(y[i]) * radius * v[i];
    return u;
}

namespace detail {

/// Prox of w||.||_p for 1 < p < 2 with ||y||_{p*} > w. The minimizer has
/// |x_i| = v_i(g) solving v + g v^(p-1) = |y_i|, where the multiplier g > 0
/// satisfies g ||v(g)||_p^(p-1) = w. Safeguarded Newton on log g; `tol`
/// bounds the defect |log(g ||v||_p^(p-1) / w)|.
inline Vector prox_primal_lp(std::span<const double> y, double w, double p, double tol,
                             std::size_t& steps) {
    const std::size_t d = y.size();
    Vector a(d), v(d);
    for (std::size_t i = 0; i < d; ++i) a[i] = std::abs(y[i]);
    const double e = p - 1.0;
    const double log_w = std::log(w);

    // phi(log g) = log g + (p-1) log ||v(g)||_p - log w, increasing in g.
    auto evaluate = [&](double lg, double* slope) {
        const double g = std::exp(lg);
        for (std::size_t i = 0; i < d; ++i) v[i] = ball_coordinate(a[i], g / p, p, steps);
        const double nv = lp_norm(v, p);
        if (nv == 0.0) return std::numeric_limits<double>::infinity();
        if (slope) {
            // dv_i/dg = -v_i^(p-1) / (1 + g (p-1) v_i^(p-2))
            double s = 0.0;
            for (std::size_t i = 0; i < d; ++i) {
                if (v[i] == 0.0) continue;
                const double ve = std::pow(v[i] / nv, e);
                s += ve * v[i] / nv * (-std::pow(v[i], e) / (v[i] + g * e * std::pow(v[i], e)));
            }
            *slope = 1.0 + e * g * s;
        }
        return lg + e * std::log(nv) - log_w;
    };

    // At g = w / ||y||_p^(p-1) the iterate is inside y's box, so phi <= 0.
    double lo = log_w - e * std::log(lp_norm(y, p));
    double hi = lo + 1.0;
    while (evaluate(hi, nullptr) < 0.0) {
        lo = hi;
        hi += 2.0;
        if (hi > 700.0) throw NumericError("group prox: multiplier bracket overflow");
    }
    double lg = 0.5 * (lo + hi);
    for (int it = 0; it < 300; ++it) {
        double slope = 0.0;
        const double phi = evaluate(lg, &slope);
        if (std::abs(phi) <= tol) break;
        (phi < 0.0 ? lo : hi) = lg;
        double next = slope > 0.0 && std::isfinite(phi) ? lg - phi / slope : 0.5 * (lo + hi);
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(hi))) break;
        lg = next;
    }
    evaluate(lg, nullptr);
    Vector x(d);
    for (std::size_t i = 0; i < d; ++i) x[i] = sgn(y[i]) * v[i];
    return x;
}

} // namespace detail

/// Soft thresholding: x_j = max(|y_j| - w, 0) sgn(y_j).
inline Vector group_prox_p1(std::span<const double> y, double w) {
    detail::require(w >= 0.0 && std::isfinite(w), "group_prox_p1: weight must be finite and >= 0");
    Vector x(y.size());
    for (std::size_t j = 0; j < y.size(); ++j)
        x[j] = std::max(std::abs(y[j]) - w, 0.0) * detail::sgn(y[j]);
    return x;
}

/// Multi-dimensional shrinkage: x = max(||y||_2 - w, 0) y / ||y||_2, and 0 at y = 0.
inline Vector group_prox_p2(std::span<const double> y, double w) {
    detail::require(w >= 0.0 && std::isfinite(w), "group_prox_p2: weight must be finite and >= 0");
    Vector x(y.size(), 0.0);
    const double ny = norm2(y);
    if (ny == 0.0 || ny <= w) return x;
    const double s = (ny - w) / ny;
    for (std::size_t j = 0; j < y.size(); ++j) x[j] = s * y[j];
    return x;
}

/// min over g in d||.||_p(x) of || beta (x - y) + beta w g ||_2.
inline double prox_residual(std::span<const double> x, std::span<const double> y, double w,
                            double p, double beta) {
    detail::require(x.size() == y.size(), "prox_residual: length mismatch");
    detail::require(p >= 1.0, "prox_residual: p must be >= 1");
    const std::size_t d = x.size();
    Vector r(d);
    const double nx = lp_norm(x, p);

    if (w == 0.0) {
        for (std::size_t j = 0; j < d; ++j) r[j] = x[j] - y[j];
    } else if (nx == 0.0) {
        // Subdifferential at 0 is the dual ball: residual is dist(y, w B_{p*}).
        std::size_t unused = 0;
        const Vector u = project_lp_ball(y, w, detail::dual_exponent(p), 1e-15, unused);
        for (std::size_t j = 0; j < d; ++j) r[j] = u[j] - y[j];
    } else if (p == 1.0) {
        for (std::size_t j = 0; j < d; ++j) {
            if (x[j] != 0.0)
                r[j] = x[j] - y[j] + w * detail::sgn(x[j]);
            else
                r[j] = std::max(std::abs(y[j]) - w, 0.0);
        }
    } else {
        // A zero coordinate stands for any magnitude that underflows, whose
        // gradient entries fill [-slack, slack].
        const double slack =
            w * std::exp((p - 1.0) * (std::log(std::numeric_limits<double>::denorm_min()) - std::log(nx)));
        for (std::size_t j = 0; j < d; ++j) {
            if (x[j] == 0.0) {
                r[j] = std::max(std::abs(y[j]) - slack, 0.0);
                continue;
            }
            const double g = detail::sgn(x[j]) * std::pow(std::abs(x[j]) / nx, p - 1.0);
            r[j] = x[j] - y[j] + w * g;
        }
    }
    return beta * norm2(r);
}

namespace detail {

/// Residual level reachable in double precision for this subproblem.
inline double roundoff_floor(std::span<const double> y, double w, double beta) {
    const double scale = norm2(y) + w * std::sqrt(static_cast<double>(y.size()));
    return 1e3 * std::numeric_limits<double>::epsilon() * beta * scale;
}

inline ProxCertificate certify(std::span<const double> x, std::span<const double> y, double w,
                               double p, double beta, double budget) {
    ProxCertificate c;
    c.residual_norm = prox_residual(x, y, w, p, beta);
    c.bound = std::max(budget, roundoff_floor(y, w, beta));
    c.satisfied = c.residual_norm <= c.bound;
    return c;
}

} // namespace detail

/// General-p group prox. `budget(candidate)` returns the admissible residual
/// for that candidate, so conditions stated at the accepted point can be
/// checked after the fact. Throws InnerSolverError when the residual never
/// falls under the budget within `opt.max_iter` inner steps.
template <class Budget>
    requires std::invocable<Budget, std::span<const double>>
ProxResult group_prox_general(std::span<const double> y, double w, double p, double beta,
                              Budget&& budget, const InnerOptions& opt = {}) {
    detail::require(p >= 1.0, "group_prox_general: p must be >= 1");
    detail::require(beta > 0.0, "group_prox_general: beta must be > 0");
    detail::require(w >= 0.0 && std::isfinite(w), "group_prox_general: weight must be finite and >= 0");

    ProxResult res;
    auto finish = [&](Vector x) {
        res.x = std::move(x);
        res.certificate = detail::certify(res.x, y, w, p, beta, budget(std::span<const double>(res.x)));
        return res;
    };

    if (w == 0.0) return finish(Vector(y.begin(), y.end()));
    if (p == 1.0) return finish(group_prox_p1(y, w));
    if (p == 2.0) return finish(group_prox_p2(y, w));

    const double r = detail::dual_exponent(p);
    if (lp_norm(y, r) <= w) return finish(Vector(y.size(), 0.0));

    double tol = opt.tol;
    std::size_t steps = 0;
    while (true) {
        Vector x;
        if (p < 2.0) {
            x = detail::prox_primal_lp(y, w, p, tol, steps);
        } else {
            const Vector u = project_lp_ball(y, w, r, tol, steps);
            x.resize(y.size());
            for (std::size_t j = 0; j < y.size(); ++j) x[j] = y[j] - u[j];
        }
        res.inner_iterations = steps;
        finish(std::move(x));
        if (res.certificate.satisfied) return res;
        if (steps >= opt.max_iter || tol < 1e-300) throw InnerSolverError(res);
        tol *= 1e-3;
    }
}

/// Same, with a fixed residual budget.
inline ProxResult group_prox_general(std::span<const double> y, double w, double p, double beta,
                                     double budget = 0.0, const InnerOptions& opt = {}) {
    detail::require(budget >= 0.0, "group_prox_general: budget must be >= 0");
    return group_prox_general(y, w, p, beta, [budget](std::span<const double>) { return budget; },
                              opt);
}

} // namespace fits3
