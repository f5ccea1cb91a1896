#pragma once

// Contiguous non-overlapping group partitions of R^n and the group-level
// operations built on them: group norms, group supports, thresholding.

#include <algorithm>
#include <charconv>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "linalg.hpp"

namespace fits3 {

class GroupPartition {
public:
    GroupPartition() = default;

    explicit GroupPartition(std::vector<std::size_t> sizes) : sizes_(std::move(sizes)) {
        detail::require(!sizes_.empty(), "GroupPartition: at least one group required");
        offsets_.reserve(sizes_.size() + 1);
        offsets_.push_back(0);
        for (std::size_t s : sizes_) {
            detail::require(s >= 1, "GroupPartition: every group needs at least one index");
            offsets_.push_back(offsets_.back() + s);
        }
    }

    /// r groups of identical size l.
    static GroupPartition uniform(std::size_t group_size, std::size_t group_count) {
        return GroupPartition(std::vector<std::size_t>(group_count, group_size));
    }

    /// Accepts "16,16,32" or the uniform shorthand "16x64" (size x count).
    static GroupPartition parse(std::string_view text);

    std::size_t group_count() const noexcept { return sizes_.size(); }
    std::size_t total_length() const noexcept { return offsets_.empty() ? 0 : offsets_.back(); }
    std::size_t size(std::size_t g) const { return sizes_.at(g); }
    std::size_t offset(std::size_t g) const { return offsets_.at(g); }
    const std::vector<std::size_t>& sizes() const noexcept { return sizes_; }

    std::span<double> group(std::span<double> x, std::size_t g) const {
        return x.subspan(offsets_[g], sizes_[g]);
    }
    std::span<const double> group(std::span<const double> x, std::size_t g) const {
        return x.subspan(offsets_[g], sizes_[g]);
    }

    bool uniform_sizes() const {
        return std::adjacent_find(sizes_.begin(), sizes_.end(), std::not_equal_to<>()) ==
               sizes_.end();
    }

    /// Comma-separated sizes, the on-disk form.
    std::string to_string() const {
        std::string out;
        for (std::size_t i = 0; i < sizes_.size(); ++i) {
            if (i) out += ',';
            out += std::to_string(sizes_[i]);
        }
        return out;
    }

    friend bool operator==(const GroupPartition&, const GroupPartition&) = default;

private:
    std::vector<std::size_t> sizes_;
    std::vector<std::size_t> offsets_;
};

namespace detail {

inline std::size_t parse_count(std::string_view s, std::string_view context) {
    while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
    while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
    std::size_t v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
        throw UsageError(std::string(context) + ": cannot parse count '" + std::string(s) + "'");
    return v;
}

} // namespace detail

inline GroupPartition GroupPartition::parse(std::string_view text) {
    if (const auto x = text.find_first_of("xX"); x != std::string_view::npos) {
        const auto l = detail::parse_count(text.substr(0, x), "partition");
        const auto r = detail::parse_count(text.substr(x + 1), "partition");
        return uniform(l, r);
    }
    std::vector<std::size_t> sizes;
    std::size_t start = 0;
    while (start <= text.size()) {
        const auto comma = text.find(',', start);
        const auto piece = text.substr(start, comma == std::string_view::npos ? text.npos
                                                                             : comma - start);
        sizes.push_back(detail::parse_count(piece, "partition"));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return GroupPartition(std::move(sizes));
}

/// Sorted, duplicate-free set of 0-based group indices.
class GroupSet {
public:
    GroupSet() = default;

    GroupSet(std::vector<std::size_t> groups) : groups_(std::move(groups)) {
        std::sort(groups_.begin(), groups_.end());
        groups_.erase(std::unique(groups_.begin(), groups_.end()), groups_.end());
    }

    static GroupSet all(const GroupPartition& part) {
        std::vector<std::size_t> g(part.group_count());
        std::iota(g.begin(), g.end(), std::size_t{0});
        return GroupSet(std::move(g));
    }

    bool empty() const noexcept { return groups_.empty(); }
    std::size_t size() const noexcept { return groups_.size(); }
    auto begin() const noexcept { return groups_.begin(); }
    auto end() const noexcept { return groups_.end(); }
    std::size_t operator[](std::size_t i) const { return groups_[i]; }

    bool contains(std::size_t g) const {
        return std::binary_search(groups_.begin(), groups_.end(), g);
    }

    bool subset_of(const GroupSet& other) const {
        return std::includes(other.groups_.begin(), other.groups_.end(), groups_.begin(),
                             groups_.end());
    }

    /// Number of coordinates covered by the set.
    std::size_t width(const GroupPartition& part) const {
        std::size_t w = 0;
        for (std::size_t g : groups_) w += part.size(g);
        return w;
    }

    const std::vector<std::size_t>& indices() const noexcept { return groups_; }

    friend bool operator==(const GroupSet&, const GroupSet&) = default;

private:
    std::vector<std::size_t> groups_;
};

namespace detail {

inline void require_length(std::span<const double> x, const GroupPartition& part,
                           const char* who) {
    require(x.size() == part.total_length(),
            std::string(who) + ": vector length " + std::to_string(x.size()) +
                " != partition length " + std::to_string(part.total_length()));
}

} // namespace detail

inline Vector group_norms(std::span<const double> x, const GroupPartition& part, double p) {
    detail::require(p >= 1.0, "group_norms: p must be >= 1");
    detail::require_length(x, part, "group_norms");
    Vector out(part.group_count());
    for (std::size_t g = 0; g < part.group_count(); ++g) out[g] = lp_norm(part.group(x, g), p);
    return out;
}

/// Groups carrying any nonzero entry. Independent of p, since every p-norm
/// vanishes exactly on the zero vector.
inline GroupSet group_support(std::span<const double> x, const GroupPartition& part,
                              double p = 2.0) {
    detail::require(p >= 1.0, "group_support: p must be >= 1");
    detail::require_length(x, part, "group_support");
    std::vector<std::size_t> out;
    for (std::size_t g = 0; g < part.group_count(); ++g) {
        const auto xg = part.group(x, g);
        if (std::any_of(xg.begin(), xg.end(), [](double v) { return v != 0.0; })) out.push_back(g);
    }
    return GroupSet(std::move(out));
}

struct Thresholded {
    Vector x;
    GroupSet support;
};

/// Keeps group g iff ||x_g||_p >= tau, zeroing the rest.
inline Thresholded threshold_groups(std::span<const double> x, const GroupPartition& part,
                                    double p, double tau) {
    detail::require(tau > 0.0, "threshold_groups: tau must be positive");
    detail::require(p >= 1.0, "threshold_groups: p must be >= 1");
    detail::require_length(x, part, "threshold_groups");
    Thresholded out{Vector(x.begin(), x.end()), {}};
    std::vector<std::size_t> kept;
    for (std::size_t g = 0; g < part.group_count(); ++g) {
        auto xg = part.group(std::span<double>(out.x), g);
        const double nrm = lp_norm(xg, p);
        if (nrm >= tau) {
            kept.push_back(g);
        } else {
            std::fill(xg.begin(), xg.end(), 0.0);
        }
    }
    out.support = GroupSet(std::move(kept));
    return out;
}

/// Columns of A belonging to the active groups, in original order. An empty
/// active set yields an m x 0 matrix.
inline DenseMatrix select_group_columns(const DenseMatrix& A, const GroupPartition& part,
                                        const GroupSet& active) {
    detail::require(A.cols() == part.total_length(),
                    "select_group_columns: matrix has " + std::to_string(A.cols()) +
                        " columns, partition covers " + std::to_string(part.total_length()));
    for (std::size_t g : active)
        detail::require(g < part.group_count(), "select_group_columns: group index out of range");
    const std::size_t width = active.width(part);
    DenseMatrix B(A.rows(), width);
    for (std::size_t i = 0; i < A.rows(); ++i) {
        const auto src = A.row(i);
        auto dst = B.row(i);
        std::size_t c = 0;
        for (std::size_t g : active) {
            const auto first = src.begin() + static_cast<std::ptrdiff_t>(part.offset(g));
            std::copy(first, first + static_cast<std::ptrdiff_t>(part.size(g)), dst.begin() + c);
            c += part.size(g);
        }
    }
    return B;
}

/// Gathers the entries of x on the active groups into a compact vector.
inline Vector gather_groups(std::span<const double> x, const GroupPartition& part,
                            const GroupSet& active) {
    Vector out;
    out.reserve(active.width(part));
    for (std::size_t g : active) {
        const auto xg = part.group(x, g);
        out.insert(out.end(), xg.begin(), xg.end());
    }
    return out;
}

/// Inverse of gather_groups: zero outside the active groups.
inline Vector scatter_groups(std::span<const double> compact, const GroupPartition& part,
                             const GroupSet& active) {
    detail::require(compact.size() == active.width(part), "scatter_groups: length mismatch");
    Vector out(part.total_length(), 0.0);
    std::size_t c = 0;
    for (std::size_t g : active) {
        auto dst = part.group(std::span<double>(out), g);
        std::copy(compact.begin() + static_cast<std::ptrdiff_t>(c),
                  compact.begin() + static_cast<std::ptrdiff_t>(c + dst.size()), dst.begin());
        c += dst.size();
    }
    return out;
}

} // namespace fits3
