#pragma once

// Dense row-major kernel used by the solvers: products with A and A^T,
// p-norms, spectral norm estimation and row orthonormalization.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "errors.hpp"

namespace fits3 {

using Vector = std::vector<double>;

class DenseMatrix {
public:
    DenseMatrix() = default;

    DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> row_major)
        : rows_(rows), cols_(cols), data_(std::move(row_major)) {
        detail::require(data_.size() == rows_ * cols_,
                        "DenseMatrix: entry count " + std::to_string(data_.size()) +
                            " does not match " + std::to_string(rows_) + "x" +
                            std::to_string(cols_));
    }

    static DenseMatrix identity(std::size_t n) {
        DenseMatrix I(n, n);
        for (std::size_t i = 0; i < n; ++i) I(i, i) = 1.0;
        return I;
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
    std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

    std::span<const double> data() const noexcept { return data_; }
    std::span<double> data() noexcept { return data_; }

    bool all_finite() const {
        return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
    }

    friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

// ---------------------------------------------------------------------------
// Vector helpers

inline double dot(std::span<const double> a, std::span<const double> b) {
    detail::require(a.size() == b.size(), "dot: length mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm2(std::span<const double> v) {
    double scale = 0.0;
    for (double e : v) scale = std::max(scale, std::abs(e));
    if (scale == 0.0) return 0.0;
    double s = 0.0;
    for (double e : v) {
        const double r = e / scale;
        s += r * r;
    }
    return scale * std::sqrt(s);
}

inline double distance2(std::span<const double> a, std::span<const double> b) {
    detail::require(a.size() == b.size(), "distance2: length mismatch");
    Vector d(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
    return norm2(d);
}

inline double norm_inf(std::span<const double> v) {
    double m = 0.0;
    for (double e : v) m = std::max(m, std::abs(e));
    return m;
}

/// ||v||_p for p >= 1 (p = +inf allowed), computed as M * (sum |v_i/M|^p)^(1/p)
/// with M = ||v||_inf so large entries cannot overflow.
inline double lp_norm(std::span<const double> v, double p) {
    detail::require(p >= 1.0, "lp_norm: p must be >= 1, got " + std::to_string(p));
    const double m = norm_inf(v);
    if (m == 0.0 || std::isinf(p)) return m;
    if (p == 1.0) {
        double s = 0.0;
        for (double e : v) s += std::abs(e);
        return s;
    }
    double s = 0.0;
    if (p == 2.0) {
        for (double e : v) {
            const double r = e / m;
            s += r * r;
        }
        return m * std::sqrt(s);
    }
    for (double e : v) s += std::pow(std::abs(e) / m, p);
    return m * std::pow(s, 1.0 / p);
}

inline bool all_finite(std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [](double e) { return std::isfinite(e); });
}

// ---------------------------------------------------------------------------
// Products

inline void matvec_into(const DenseMatrix& A, std::span<const double> v, std::span<double> out) {
    detail::require(v.size() == A.cols(), "matvec: vector length " + std::to_string(v.size()) +
                                              " != matrix cols " + std::to_string(A.cols()));
    detail::require(out.size() == A.rows(), "matvec: output length mismatch");
    for (std::size_t i = 0; i < A.rows(); ++i) {
        const auto r = A.row(i);
        double s = 0.0;
        for (std::size_t j = 0; j < r.size(); ++j) s += r[j] * v[j];
        out[i] = s;
    }
}

inline Vector matvec(const DenseMatrix& A, std::span<const double> v) {
    Vector out(A.rows());
    matvec_into(A, v, out);
    return out;
}

inline void matvec_transpose_into(const DenseMatrix& A, std::span<const double> v,
                                  std::span<double> out) {
    detail::require(v.size() == A.rows(), "matvec_transpose: vector length " +
                                              std::to_string(v.size()) + " != matrix rows " +
                                              std::to_string(A.rows()));
    detail::require(out.size() == A.cols(), "matvec_transpose: output length mismatch");
    std::fill(out.begin(), out.end(), 0.0);
    for (std::size_t i = 0; i < A.rows(); ++i) {
        const double vi = v[i];
        if (vi == 0.0) continue;
        const auto r = A.row(i);
        for (std::size_t j = 0; j < r.size(); ++j) out[j] += vi * r[j];
    }
}

inline Vector matvec_transpose(const DenseMatrix& A, std::span<const double> v) {
    Vector out(A.cols());
    matvec_transpose_into(A, v, out);
    return out;
}

/// A * A^T, used by tests and orthonormality checks.
inline DenseMatrix gram_rows(const DenseMatrix& A) {
    DenseMatrix G(A.rows(), A.rows());
    for (std::size_t i = 0; i < A.rows(); ++i)
        for (std::size_t j = i; j < A.rows(); ++j) G(i, j) = G(j, i) = dot(A.row(i), A.row(j));
    return G;
}

// ---------------------------------------------------------------------------
// Spectral norm

struct SpectralEstimate {
    double value = 0.0;
    bool converged = false;
    std::size_t iterations = 0;
};

/// Largest eigenvalue of A^T A by power iteration from the normalized
/// all-ones vector. Stops once successive Rayleigh quotients agree to `tol`
/// relative; otherwise returns the last estimate with converged = false.
inline SpectralEstimate spectral_norm_sq(const DenseMatrix& A, double tol = 1e-10,
                                         std::size_t max_iter = 1000) {
    detail::require(A.rows() > 0 && A.cols() > 0, "spectral_norm_sq: empty matrix");
    Vector v(A.cols(), 1.0 / std::sqrt(static_cast<double>(A.cols())));
    Vector Av(A.rows()), w(A.cols());

    SpectralEstimate est;
    double prev = 0.0;
    for (std::size_t it = 1; it <= max_iter; ++it) {
        matvec_into(A, v, Av);
        matvec_transpose_into(A, Av, w);
        const double rq = dot(v, w);  // v is unit
        const double nw = norm2(w);
        est.value = rq;
        est.iterations = it;
        if (nw == 0.0) {
            // v in the null space; the all-ones start only lands there for A = 0
            // or adversarial inputs.
            throw UsageError("spectral_norm_sq: power iteration collapsed (A is zero on the start vector)");
        }
        if (it > 1 && std::abs(rq - prev) <= tol * std::abs(rq)) {
            est.converged = true;
            break;
        }
        prev = rq;
        for (std::size_t j = 0; j < w.size(); ++j) v[j] = w[j] / nw;
    }
    return est;
}

// ---------------------------------------------------------------------------
// Row orthonormalization

/// Orthonormal basis for the row space of B (m <= n, full row rank), built
/// row by row with modified Gram-Schmidt. A second projection pass is made
/// whenever a row loses more than half its norm to the first pass.
inline DenseMatrix orthonormalize_rows(const DenseMatrix& B) {
    detail::require(B.rows() >= 1 && B.rows() <= B.cols(),
                    "orthonormalize_rows: need 1 <= rows <= cols, got " +
                        std::to_string(B.rows()) + "x" + std::to_string(B.cols()));
    DenseMatrix Q = B;
    const std::size_t n = Q.cols();

    auto project_out = [&](std::size_t i) {
        auto qi = Q.row(i);
        for (std::size_t j = 0; j < i; ++j) {
            const auto qj = Q.row(j);
            double c = 0.0;
            for (std::size_t k = 0; k < n; ++k) c += qi[k] * qj[k];
            for (std::size_t k = 0; k < n; ++k) qi[k] -= c * qj[k];
        }
    };

    for (std::size_t i = 0; i < Q.rows(); ++i) {
        auto qi = Q.row(i);
        const double original = norm2(qi);
        if (original == 0.0) throw RankDeficientError(i);
        project_out(i);
        double nrm = norm2(qi);
        if (nrm < 0.5 * original) {
            project_out(i);
            nrm = norm2(qi);
        }
        if (nrm <= 1e-10 * original) throw RankDeficientError(i);
        for (double& e : qi) e /= nrm;
    }
    return Q;
}

/// max_ij |(A A^T - I)_ij|.
inline double orthonormality_defect(const DenseMatrix& A) {
    double worst = 0.0;
    for (std::size_t i = 0; i < A.rows(); ++i)
        for (std::size_t j = i; j < A.rows(); ++j) {
            const double g = dot(A.row(i), A.row(j)) - (i == j ? 1.0 : 0.0);
            worst = std::max(worst, std::abs(g));
        }
    return worst;
}

} // namespace fits3
