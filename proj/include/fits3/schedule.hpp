#pragma once

#include <cmath>
#include <cstddef>
#include <string>

#include "errors.hpp"

namespace fits3 {

/// Extrapolation ceiling t_bar(eps): the convergence analysis admits any
/// schedule with sup t_k < t_bar. Equals 1 when eps = 0.
inline double t_bar(double epsilon, double beta, double spec_norm_sq) {
    detail::require(epsilon >= 0.0 && epsilon < 1.0, "t_bar: epsilon must lie in [0,1)");
    detail::require(spec_norm_sq > 0.0 && beta > spec_norm_sq,
                    "t_bar: need beta > ||A^T A||_2 > 0");
    if (epsilon == 0.0) return 1.0;
    const double s = spec_norm_sq;
    const double disc = (beta + s) * (beta + s) - 4.0 * beta * epsilon * s;
    return (std::sqrt(disc) - (beta - s)) / (2.0 * s);
}

/// Emits t_0, t_1, ... on successive calls to next().
///
/// FistaFrozen: t_k = (a_{k-1} - 1) / a_k with a_{-1} = a_0 = 1,
/// a_{k+1} = (1 + sqrt(1 + 4 a_k^2)) / 2 for k <= freeze_at, and
/// a_{k+1} = a_{freeze_at + 1} afterwards.
class ExtrapolationSchedule {
public:
    enum class Kind { FistaFrozen, Constant, Zero };

    static ExtrapolationSchedule fista_frozen(std::size_t freeze_at = 300) {
        ExtrapolationSchedule s;
        s.kind_ = Kind::FistaFrozen;
        s.freeze_at_ = freeze_at;
        return s;
    }
    static ExtrapolationSchedule constant(double t) {
        detail::require(t >= 0.0 && t < 1.0, "constant schedule: t must lie in [0,1)");
        ExtrapolationSchedule s;
        s.kind_ = Kind::Constant;
        s.constant_ = t;
        return s;
    }
    static ExtrapolationSchedule zero() { return ExtrapolationSchedule{}; }

    Kind kind() const noexcept { return kind_; }
    std::size_t freeze_at() const noexcept { return freeze_at_; }
    double constant_value() const noexcept { return constant_; }

    /// Largest value the schedule can ever emit (the limit, for FistaFrozen).
    double supremum() const {
        switch (kind_) {
        case Kind::Zero: return 0.0;
        case Kind::Constant: return constant_;
        case Kind::FistaFrozen: {
            ExtrapolationSchedule probe = fista_frozen(freeze_at_);
            double t = 0.0;
            for (std::size_t k = 0; k <= freeze_at_ + 2; ++k) t = std::max(t, probe.next());
            return t;
        }
        }
        return 0.0;
    }

    double next() {
        const std::size_t k = k_++;
        switch (kind_) {
        case Kind::Zero: return 0.0;
        case Kind::Constant: return constant_;
        case Kind::FistaFrozen: break;
        }
        // Holds a_{k-1}, a_k on entry.
        const double t = (a_prev_ - 1.0) / a_;
        const double a_next = k <= freeze_at_ ? 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * a_ * a_)) : a_;
        a_prev_ = a_;
        a_ = a_next;
        return t;
    }

    std::size_t emitted() const noexcept { return k_; }

    std::string describe() const {
        switch (kind_) {
        case Kind::Zero: return "zero";
        case Kind::Constant: return "constant:" + std::to_string(constant_);
        case Kind::FistaFrozen: return "fista:" + std::to_string(freeze_at_);
        }
        return "?";
    }

private:
    Kind kind_ = Kind::Zero;
    std::size_t freeze_at_ = 300;
    double constant_ = 0.0;
    std::size_t k_ = 0;
    double a_prev_ = 1.0;
    double a_ = 1.0;
};

} // namespace fits3
