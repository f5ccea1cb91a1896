#pragma once

// FITS^3: fast iterative thresholding with support-and-scale shrinking for
//
//     min_x  E(x) = 1/2 ||A x - b||^2 + alpha * sum_i psi(||x_{g_i}||_p)
//
// Each iteration thresholds the iterate, restricts A to the surviving groups,
// takes an extrapolated linearized gradient step on that reduced problem and
// finishes with one group prox per active group.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "grouping.hpp"
#include "linalg.hpp"
#include "penalty.hpp"
#include "prox.hpp"
#include "schedule.hpp"

namespace fits3 {

enum class StopReason { TolReached, MaxIter, EmptySupport, ZeroIterate };

inline std::string to_string(StopReason r) {
    switch (r) {
    case StopReason::TolReached: return "tol_reached";
    case StopReason::MaxIter: return "max_iter";
    case StopReason::EmptySupport: return "empty_support";
    case StopReason::ZeroIterate: return "zero_iterate";
    }
    return "unknown";
}

struct Fits3Config {
    double alpha = 0.0;
    /// Absolute proximal weight. When unset, beta = beta_scale * ||A^T A||_2.
    std::optional<double> beta;
    double beta_scale = 1.0001;
    double tau = 0.2;
    double p = 2.0;
    Penalty penalty = Penalty::power(0.5);
    double tol = 5e-5;
    std::size_t max_iter = 300;
    /// Inner inexactness; forced to 0 for p in {1, 2}.
    double epsilon = 0.5;
    ExtrapolationSchedule schedule = ExtrapolationSchedule::fista_frozen(300);
    /// With epsilon > 0 every t_k is capped at t_cap_factor * t_bar(epsilon).
    double t_cap_factor = 0.99;
    InnerOptions inner;
    /// Precomputed ||A^T A||_2; estimated by power iteration when unset.
    std::optional<double> spec_norm_sq;
};

/// Per-iteration diagnostics. Entry k describes the step x^k -> x^{k+1}.
struct Histories {
    std::vector<double> objective;       ///< E(x^{k+1})
    std::vector<double> value_function;  ///< H(x^{k+1}, x^k)
    std::vector<double> step_norm;       ///< ||x^{k+1} - x^k||_2
    std::vector<double> seconds;         ///< wall time of the step
    std::vector<double> extrapolation;   ///< t_k actually used
    std::vector<std::size_t> support_size;  ///< |S(x^{k+1})|
    std::vector<std::size_t> active_size;   ///< |S~^k|

    std::size_t size() const noexcept { return objective.size(); }
};

struct SolveReport {
    Vector x_final;
    std::size_t iterations = 0;
    bool converged = false;
    StopReason stop_reason = StopReason::MaxIter;
    Histories histories;
    double total_seconds = 0.0;

    std::size_t initial_support = 0;  ///< |S(x^0)|
    double initial_objective = 0.0;   ///< E(x^0)
    double alpha = 0.0;
    double beta = 0.0;
    double spec_norm_sq = 0.0;
    double epsilon = 0.0;
    double t_ceiling = 1.0;
    /// ADMM only: x-update fell back to conjugate gradients.
    bool fallback_solve = false;
};

// ---------------------------------------------------------------------------
// Objective and value function

inline double penalty_sum(std::span<const double> x, const GroupPartition& part, double p,
                          const Penalty& pen) {
    double s = 0.0;
    for (std::size_t g = 0; g < part.group_count(); ++g)
        s += psi_value(pen, lp_norm(part.group(x, g), p));
    return s;
}

inline double objective(const DenseMatrix& A, std::span<const double> b, std::span<const double> x,
                        const GroupPartition& part, double p, const Penalty& pen, double alpha) {
    detail::require(A.rows() == b.size() && A.cols() == x.size() &&
                        part.total_length() == x.size(),
                    "objective: dimension mismatch");
    Vector r = matvec(A, x);
    for (std::size_t i = 0; i < r.size(); ++i) r[i] -= b[i];
    const double nr = norm2(r);
    return 0.5 * nr * nr + alpha * penalty_sum(x, part, p, pen);
}

inline double value_function_H(double E_x, std::span<const double> x, std::span<const double> u,
                               double beta, double epsilon) {
    const double d = distance2(x, u);
    return E_x + 0.5 * beta * (1.0 - epsilon) * d * d;
}

/// alpha = scale * max_i ||A_{g_i}^T b||_2.
inline double default_alpha(const DenseMatrix& A, std::span<const double> b,
                            const GroupPartition& part, double scale = 5e-4) {
    detail::require(A.cols() == part.total_length(), "default_alpha: partition/matrix mismatch");
    detail::require(norm_inf(b) > 0.0, "default_alpha: b must be nonzero");
    const Vector g = group_norms(matvec_transpose(A, b), part, 2.0);
    return scale * *std::max_element(g.begin(), g.end());
}

// ---------------------------------------------------------------------------
// Resolved problem and iteration state

struct Fits3Problem {
    const DenseMatrix& A;
    std::span<const double> b;
    const GroupPartition& part;
    double alpha;
    double beta;
    double spec_norm_sq;
    double tau;
    double p;
    Penalty penalty;
    double tol;
    std::size_t max_iter;
    double epsilon;
    double t_ceiling;  ///< t_bar(epsilon)
    double t_cap;      ///< largest t_k handed to the step
    InnerOptions inner;
};

inline Fits3Problem make_problem(const DenseMatrix& A, std::span<const double> b,
                                 const GroupPartition& part, const Fits3Config& cfg) {
    detail::require(A.rows() == b.size(), "fits3: b has length " + std::to_string(b.size()) +
                                              ", A has " + std::to_string(A.rows()) + " rows");
    detail::require(A.cols() == part.total_length(),
                    "fits3: partition covers " + std::to_string(part.total_length()) +
                        " indices, A has " + std::to_string(A.cols()) + " columns");
    detail::require(norm_inf(b) > 0.0, "fits3: observation b must be nonzero");
    detail::require(cfg.alpha > 0.0, "fits3: alpha must be > 0");
    detail::require(cfg.tau > 0.0, "fits3: tau must be > 0");
    detail::require(cfg.p >= 1.0, "fits3: p must be >= 1");
    detail::require(cfg.tol > 0.0, "fits3: tol must be > 0");

    const double s = cfg.spec_norm_sq ? *cfg.spec_norm_sq : spectral_norm_sq(A).value;
    detail::require(s > 0.0, "fits3: A must be nonzero");
    const double beta = cfg.beta ? *cfg.beta : cfg.beta_scale * s;
    detail::require(beta > s, "fits3: beta = " + std::to_string(beta) +
                                  " must exceed ||A^T A||_2 = " + std::to_string(s));

    const bool closed_form = cfg.p == 1.0 || cfg.p == 2.0;
    const double eps = closed_form ? 0.0 : cfg.epsilon;
    detail::require(eps >= 0.0 && eps < 1.0, "fits3: epsilon must lie in [0,1)");
    const double tb = t_bar(eps, beta, s);
    const double cap = eps > 0.0 ? cfg.t_cap_factor * tb : tb;
    if (cfg.schedule.kind() == ExtrapolationSchedule::Kind::Constant)
        detail::require(std::min(cfg.schedule.constant_value(), cap) < tb,
                        "fits3: constant extrapolation must stay below t_bar");

    return Fits3Problem{A,        b,       part,         cfg.alpha, beta, s,   cfg.tau,
                        cfg.p,    cfg.penalty, cfg.tol,  cfg.max_iter, eps, tb, cap, cfg.inner};
}

struct SolverState {
    std::size_t k = 0;
    Vector x;               ///< x^k
    Vector x_tilde_prev;    ///< x~^{k-1}
    GroupSet active;        ///< S~ of the most recent step
    ExtrapolationSchedule schedule;
    Histories histories;
    double objective = 0.0;  ///< E(x^k)
    std::optional<StopReason> stop;

    // B^k = A restricted to `active`, rebuilt only when the active set changes.
    GroupSet cached_groups;
    DenseMatrix B;
    bool has_B = false;
};

inline SolverState make_state(const Fits3Problem& pb, std::span<const double> x0,
                              ExtrapolationSchedule schedule) {
    detail::require(x0.size() == pb.part.total_length(),
                    "fits3: x0 has length " + std::to_string(x0.size()) + ", expected " +
                        std::to_string(pb.part.total_length()));
    detail::require(all_finite(x0), "fits3: x0 must be finite");
    SolverState st;
    st.x.assign(x0.begin(), x0.end());
    st.x_tilde_prev = st.x;  // x^{-1} = x~^{-1} = x^0
    st.schedule = std::move(schedule);
    st.objective = objective(pb.A, pb.b, st.x, pb.part, pb.p, pb.penalty, pb.alpha);
    return st;
}

/// One FITS^3 iteration, x^k -> x^{k+1}. Returns the stop reason when the
/// iteration should end after this step.
inline std::optional<StopReason> fits3_step(SolverState& st, const Fits3Problem& pb) {
    using clock = std::chrono::steady_clock;
    const auto t0 = clock::now();
    const auto& part = pb.part;

    // 1-2. Thresholding and the surviving group set.
    Thresholded thr = threshold_groups(st.x, part, pb.p, pb.tau);
    const GroupSet& S = thr.support;

    Vector x_next(part.total_length(), 0.0);
    double E_next = 0.0;
    double t = 0.0;

    if (S.empty()) {
        const double nb = norm2(pb.b);
        E_next = 0.5 * nb * nb;
    } else {
        // 3. Reduced matrix and extrapolated point on S.
        if (!st.has_B || !(st.cached_groups == S)) {
            st.B = select_group_columns(pb.A, part, S);
            st.cached_groups = S;
            st.has_B = true;
        }
        const DenseMatrix& B = st.B;
        t = std::min(st.schedule.next(), pb.t_cap);

        const Vector xs = gather_groups(thr.x, part, S);
        const Vector xps = gather_groups(st.x_tilde_prev, part, S);
        Vector z(xs.size());
        for (std::size_t j = 0; j < z.size(); ++j) z[j] = xs[j] + t * (xs[j] - xps[j]);

        // 4. y = z - (1/beta) B^T (B z - b).
        Vector r = matvec(B, z);
        for (std::size_t i = 0; i < r.size(); ++i) r[i] -= pb.b[i];
        const Vector grad = matvec_transpose(B, r);
        Vector y(z.size());
        for (std::size_t j = 0; j < y.size(); ++j) y[j] = z[j] - grad[j] / pb.beta;

        // 5. Group prox with weights alpha psi'(||x~_g||_p) / beta.
        Vector xs_next(xs.size());
        double pen = 0.0;
        std::size_t c = 0;
        for (std::size_t g : S) {
            const std::size_t len = part.size(g);
            const std::span<const double> yg(y.data() + c, len);
            const std::span<const double> xg(xs.data() + c, len);
            const double w = pb.alpha * psi_deriv(pb.penalty, lp_norm(xg, pb.p)) / pb.beta;

            Vector out;
            if (pb.p == 2.0) {
                out = group_prox_p2(yg, w);
            } else if (pb.p == 1.0) {
                out = group_prox_p1(yg, w);
            } else {
                const double scale = 0.5 * pb.beta * pb.epsilon;
                auto budget = [&](std::span<const double> cand) { return scale * distance2(cand, xg); };
                out = group_prox_general(yg, w, pb.p, pb.beta, budget, pb.inner).x;
            }
            std::copy(out.begin(), out.end(), xs_next.begin() + static_cast<std::ptrdiff_t>(c));
            pen += psi_value(pb.penalty, lp_norm(out, pb.p));
            c += len;
        }
        x_next = scatter_groups(xs_next, part, S);

        Vector rn = matvec(B, xs_next);
        for (std::size_t i = 0; i < rn.size(); ++i) rn[i] -= pb.b[i];
        const double nrn = norm2(rn);
        E_next = 0.5 * nrn * nrn + pb.alpha * pen;
    }

    // 6. Diagnostics and stopping test.
    const double step = distance2(x_next, st.x);
    const double nx = norm2(st.x);
    auto& h = st.histories;
    h.objective.push_back(E_next);
    h.value_function.push_back(E_next + 0.5 * pb.beta * (1.0 - pb.epsilon) * step * step);
    h.step_norm.push_back(step);
    h.extrapolation.push_back(t);
    h.support_size.push_back(group_support(x_next, part).size());
    h.active_size.push_back(S.size());

    st.x_tilde_prev = std::move(thr.x);
    st.active = S;
    st.x = std::move(x_next);
    st.objective = E_next;
    ++st.k;
    h.seconds.push_back(std::chrono::duration<double>(clock::now() - t0).count());

    if (S.empty())
        st.stop = StopReason::EmptySupport;
    else if (nx == 0.0)
        st.stop = StopReason::ZeroIterate;
    else if (step / nx < pb.tol)
        st.stop = StopReason::TolReached;
    else if (st.k >= pb.max_iter)
        st.stop = StopReason::MaxIter;
    return st.stop;
}

using IterationObserver = std::function<void(std::size_t k, std::span<const double> x)>;

inline SolveReport fits3_solve(const DenseMatrix& A, std::span<const double> b,
                               const GroupPartition& part, const Fits3Config& cfg,
                               std::span<const double> x0, const IterationObserver& observer = {}) {
    const auto start = std::chrono::steady_clock::now();
    const Fits3Problem pb = make_problem(A, b, part, cfg);
    SolverState st = make_state(pb, x0, cfg.schedule);

    SolveReport rep;
    rep.initial_support = group_support(st.x, part).size();
    rep.initial_objective = st.objective;
    rep.alpha = pb.alpha;
    rep.beta = pb.beta;
    rep.spec_norm_sq = pb.spec_norm_sq;
    rep.epsilon = pb.epsilon;
    rep.t_ceiling = pb.t_ceiling;

    if (pb.max_iter == 0) {
        rep.x_final = st.x;
        rep.stop_reason = StopReason::MaxIter;
    } else {
        while (!fits3_step(st, pb)) {
            if (observer) observer(st.k, st.x);
        }
        if (observer) observer(st.k, st.x);
        rep.stop_reason = *st.stop;
        rep.x_final = std::move(st.x);
    }
    rep.iterations = st.histories.size();
    rep.converged = rep.stop_reason == StopReason::TolReached;
    rep.histories = std::move(st.histories);
    rep.total_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return rep;
}

// ---------------------------------------------------------------------------
// Run diagnostics

/// |S(x^k)| for k = 0..iterations.
inline std::vector<std::size_t> support_trajectory(const SolveReport& rep) {
    std::vector<std::size_t> s{rep.initial_support};
    s.insert(s.end(), rep.histories.support_size.begin(), rep.histories.support_size.end());
    return s;
}

/// Smallest K with S~^k = S(x^k) = S(x^K) for every recorded k >= K and for the
/// final iterate. Because the supports are nested, equal sizes mean equal sets.
/// Empty when the last step still changed the support.
inline std::optional<std::size_t> support_stabilization_index(const SolveReport& rep) {
    const auto supp = support_trajectory(rep);
    const auto& act = rep.histories.active_size;
    const std::size_t n = act.size();
    if (n == 0) return std::nullopt;
    const std::size_t final_size = supp[n];
    std::optional<std::size_t> K;
    for (std::size_t k = n; k-- > 0;) {
        if (act[k] == final_size && supp[k] == final_size)
            K = k;
        else
            break;
    }
    return K;
}

/// Number of k >= K + 1 with H(x^{k+1}, x^k) > H(x^k, x^{k-1}) + rel_tol (1 + |H|).
inline std::size_t h_monotonicity_violations(const SolveReport& rep, std::size_t K,
                                             double rel_tol = 1e-9) {
    const auto& H = rep.histories.value_function;
    std::size_t bad = 0;
    for (std::size_t k = K + 1; k < H.size(); ++k)
        if (H[k] > H[k - 1] + rel_tol * (1.0 + std::abs(H[k - 1]))) ++bad;
    return bad;
}

} // namespace fits3
