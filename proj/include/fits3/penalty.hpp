#pragma once

// Concave, non-Lipschitz potentials psi applied to group norms:
//   PowerQ     psi(t) = t^q
//   LogPowerQ  psi(t) = log(t^q + 1)
// with 0 < q < 1, plus the local-minimizer lower bound kappa obtained by
// inverting psi''.

#include <cmath>
#include <cstddef>
#include <string>
#include <string_view>

#include "errors.hpp"

namespace fits3 {

enum class PenaltyKind { PowerQ, LogPowerQ };

struct Penalty {
    PenaltyKind kind = PenaltyKind::PowerQ;
    double q = 0.5;

    static Penalty power(double q) { return make(PenaltyKind::PowerQ, q); }
    static Penalty log_power(double q) { return make(PenaltyKind::LogPowerQ, q); }

    static Penalty make(PenaltyKind kind, double q) {
        detail::require(q > 0.0 && q < 1.0,
                        "Penalty: q must lie in (0,1), got " + std::to_string(q));
        return Penalty{kind, q};
    }

    /// "tq" or "logtq".
    static Penalty parse(std::string_view name, double q) {
        if (name == "tq") return power(q);
        if (name == "logtq") return log_power(q);
        throw UsageError("unknown penalty '" + std::string(name) + "' (expected tq or logtq)");
    }

    std::string name() const { return kind == PenaltyKind::PowerQ ? "tq" : "logtq"; }
};

inline double psi_value(const Penalty& pen, double t) {
    detail::require(t >= 0.0, "psi_value: t must be >= 0");
    if (t == 0.0) return 0.0;
    const double tq = std::pow(t, pen.q);
    return pen.kind == PenaltyKind::PowerQ ? tq : std::log1p(tq);
}

inline double psi_deriv(const Penalty& pen, double t) {
    detail::require(t > 0.0, "psi_deriv: t must be > 0 (psi'(0+) is infinite)");
    const double d = pen.q * std::pow(t, pen.q - 1.0);
    return pen.kind == PenaltyKind::PowerQ ? d : d / (std::pow(t, pen.q) + 1.0);
}

inline double psi_second_deriv(const Penalty& pen, double t) {
    detail::require(t > 0.0, "psi_second_deriv: t must be > 0");
    const double q = pen.q;
    if (pen.kind == PenaltyKind::PowerQ) return q * (q - 1.0) * std::pow(t, q - 2.0);
    // d/dt [q t^(q-1) / (t^q + 1)] = q t^(q-2) ((q-1) - t^q) / (t^q + 1)^2
    const double tq = std::pow(t, q);
    const double den = tq + 1.0;
    return q * std::pow(t, q - 2.0) * ((q - 1.0) - tq) / (den * den);
}

/// Solves psi''(t) = target for t > 0. psi'' is negative and increasing, so a
/// negative target has exactly one root.
inline double inverse_second_deriv(const Penalty& pen, double target) {
    detail::require(target < 0.0, "inverse_second_deriv: target must be negative");
    const double q = pen.q;
    if (pen.kind == PenaltyKind::PowerQ)
        return std::pow(target / (q * (q - 1.0)), 1.0 / (q - 2.0));

    double lo = 1e-12, hi = 1e12;
    for (int i = 0; i < 64 && psi_second_deriv(pen, lo) >= target; ++i) lo *= 1e-4;
    for (int i = 0; i < 64 && psi_second_deriv(pen, hi) <= target; ++i) hi *= 1e4;
    if (!(psi_second_deriv(pen, lo) < target && psi_second_deriv(pen, hi) > target))
        throw NumericError("inverse_second_deriv: could not bracket the root");

    // Bisection in log t; psi'' spans many decades near 0.
    double llo = std::log(lo), lhi = std::log(hi);
    for (int it = 0; it < 200 && lhi - llo > 1e-15 * std::max(1.0, std::abs(llo)); ++it) {
        const double mid = 0.5 * (llo + lhi);
        if (psi_second_deriv(pen, std::exp(mid)) < target)
            llo = mid;
        else
            lhi = mid;
    }
    return std::exp(0.5 * (llo + lhi));
}

/// Lower bound on the p-norm of any nonzero group of a local minimizer.
/// spec_norm_sq is ||A||_2^2; group_size only enters for p > 2.
inline double lower_bound_kappa(const Penalty& pen, double spec_norm_sq, double alpha, double p,
                                std::size_t group_size) {
    detail::require(spec_norm_sq > 0.0 && alpha > 0.0, "lower_bound_kappa: inputs must be positive");
    detail::require(p >= 1.0, "lower_bound_kappa: p must be >= 1");
    detail::require(group_size >= 1, "lower_bound_kappa: group_size must be >= 1");
    double denom = alpha;
    if (p > 2.0) denom *= std::pow(static_cast<double>(group_size), 1.0 - 2.0 / p);
    return inverse_second_deriv(pen, -spec_norm_sq / denom);
}

} // namespace fits3
