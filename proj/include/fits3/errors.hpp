#pragma once

#include <stdexcept>
#include <string>

namespace fits3 {

/// Caller violated a documented precondition (bad shape, out-of-range parameter).
class UsageError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A numerical procedure could not produce a trustworthy answer.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Row orthonormalization met a row inside the span of the previous ones.
class RankDeficientError : public NumericError {
public:
    explicit RankDeficientError(std::size_t row)
        : NumericError("matrix is rank deficient: row " + std::to_string(row) +
                       " is linearly dependent on the preceding rows"),
          row_(row) {}

    std::size_t row() const noexcept { return row_; }

private:
    std::size_t row_;
};

namespace detail {

inline void require(bool cond, const std::string& what) {
    if (!cond) throw UsageError(what);
}

} // namespace detail
} // namespace fits3
