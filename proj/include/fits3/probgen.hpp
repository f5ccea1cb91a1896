#pragma once

// Seeded synthetic instances: A with orthonormal rows, a group-sparse ground
// truth (optionally sparse inside each active group) and b = A x + sigma*noise.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "errors.hpp"
#include "grouping.hpp"
#include "io.hpp"
#include "linalg.hpp"

namespace fits3 {

enum class MatrixKind { Gaussian, Bernoulli, PartHadamard, PartFourier };

inline std::string to_string(MatrixKind k) {
    switch (k) {
    case MatrixKind::Gaussian: return "gaussian";
    case MatrixKind::Bernoulli: return "bernoulli";
    case MatrixKind::PartHadamard: return "hadamard";
    case MatrixKind::PartFourier: return "fourier";
    }
    return "?";
}

inline MatrixKind parse_matrix_kind(std::string_view s) {
    if (s == "gaussian") return MatrixKind::Gaussian;
    if (s == "bernoulli") return MatrixKind::Bernoulli;
    if (s == "hadamard") return MatrixKind::PartHadamard;
    if (s == "fourier" || s == "dct") return MatrixKind::PartFourier;
    throw UsageError("unknown matrix kind '" + std::string(s) +
                     "' (expected gaussian, bernoulli, hadamard or fourier)");
}

/// SplitMix64 finalizer; used to derive independent stream seeds.
inline std::uint64_t mix_seed(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t combine_seed(std::uint64_t a, std::uint64_t b) {
    return mix_seed(a ^ mix_seed(b));
}

struct InstanceMeta {
    MatrixKind kind = MatrixKind::Gaussian;
    std::uint64_t seed = 0;
    double noise_sigma = 0.0;
    std::size_t nonzero_groups = 0;
    std::optional<std::size_t> intra_group_nonzeros;
};

struct ProblemInstance {
    DenseMatrix A;
    Vector b;
    GroupPartition part;
    std::optional<Vector> ground_truth;
    InstanceMeta meta;

    std::size_t m() const noexcept { return A.rows(); }
    std::size_t n() const noexcept { return A.cols(); }
};

/// Unnormalized measurement matrix before row orthonormalization.
inline DenseMatrix raw_measurement_matrix(MatrixKind kind, std::size_t m, std::size_t n,
                                          std::uint64_t seed) {
    detail::require(m >= 1 && m < n, "gen_matrix: need 1 <= m < n");
    std::mt19937_64 rng(seed);
    DenseMatrix B(m, n);

    auto sample_rows = [&] {
        std::vector<std::size_t> idx(n);
        for (std::size_t i = 0; i < n; ++i) idx[i] = i;
        std::shuffle(idx.begin(), idx.end(), rng);
        idx.resize(m);
        return idx;
    };

    switch (kind) {
    case MatrixKind::Gaussian: {
        std::normal_distribution<double> N;
        for (double& e : B.data()) e = N(rng);
        break;
    }
    case MatrixKind::Bernoulli: {
        std::bernoulli_distribution coin(0.5);
        for (double& e : B.data()) e = coin(rng) ? 1.0 : -1.0;
        break;
    }
    case MatrixKind::PartHadamard: {
        detail::require(std::has_single_bit(n), "gen_matrix: hadamard needs n a power of two, got " +
                                                   std::to_string(n));
        // Sylvester construction: H_ij = (-1)^popcount(i & j).
        const auto rows = sample_rows();
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < n; ++j)
                B(i, j) = (std::popcount(rows[i] & j) & 1u) ? -1.0 : 1.0;
        break;
    }
    case MatrixKind::PartFourier: {
        // Rows of the DCT-II matrix C_kj = cos(pi (j + 1/2) k / n).
        const auto rows = sample_rows();
        const double nn = static_cast<double>(n);
        for (std::size_t i = 0; i < m; ++i) {
            const double k = static_cast<double>(rows[i]);
            for (std::size_t j = 0; j < n; ++j)
                B(i, j) = std::cos(std::numbers::pi * (static_cast<double>(j) + 0.5) * k / nn);
        }
        break;
    }
    }
    return B;
}

inline DenseMatrix gen_matrix(MatrixKind kind, std::size_t m, std::size_t n, std::uint64_t seed) {
    return orthonormalize_rows(raw_measurement_matrix(kind, m, n, seed));
}

/// `nonzero_groups` groups drawn uniformly without replacement and filled with
/// i.i.d. N(0,1); with `intra` set, only that many random entries per active
/// group are nonzero.
inline Vector gen_ground_truth(const GroupPartition& part, std::size_t nonzero_groups,
                               std::optional<std::size_t> intra, std::uint64_t seed) {
    detail::require(nonzero_groups <= part.group_count(),
                    "gen_ground_truth: more active groups than groups");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> N;
    Vector x(part.total_length(), 0.0);

    std::vector<std::size_t> groups(part.group_count());
    for (std::size_t g = 0; g < groups.size(); ++g) groups[g] = g;
    std::shuffle(groups.begin(), groups.end(), rng);
    groups.resize(nonzero_groups);
    std::sort(groups.begin(), groups.end());

    for (std::size_t g : groups) {
        auto xg = part.group(std::span<double>(x), g);
        if (!intra) {
            for (double& e : xg) e = N(rng);
            continue;
        }
        detail::require(*intra <= xg.size(), "gen_ground_truth: intra-group count exceeds group size");
        std::vector<std::size_t> pos(xg.size());
        for (std::size_t i = 0; i < pos.size(); ++i) pos[i] = i;
        std::shuffle(pos.begin(), pos.end(), rng);
        for (std::size_t i = 0; i < *intra; ++i) xg[pos[i]] = N(rng);
    }
    return x;
}

/// b = A x + sigma * N(0, I).
inline Vector gen_observation(const DenseMatrix& A, std::span<const double> x, double sigma,
                              std::uint64_t seed) {
    detail::require(A.cols() == x.size(), "gen_observation: dimension mismatch");
    detail::require(sigma >= 0.0, "gen_observation: sigma must be >= 0");
    Vector b = matvec(A, x);
    if (sigma > 0.0) {
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> N;
        for (double& e : b) e += sigma * N(rng);
    }
    if (norm_inf(b) == 0.0)
        throw NumericError("gen_observation: b = 0; regenerate with a different seed");
    return b;
}

struct InstanceSpec {
    std::size_t n = 1024;
    std::size_t m = 512;
    std::size_t group_size = 16;
    std::size_t nonzero_groups = 12;
    std::optional<std::size_t> intra_group_nonzeros;
    MatrixKind kind = MatrixKind::Gaussian;
    double sigma = 0.001;
    std::uint64_t seed = 0;
};

/// Full instance; matrix, signal and noise draw from independent streams
/// derived from spec.seed.
inline ProblemInstance make_instance(const InstanceSpec& s) {
    detail::require(s.group_size >= 1 && s.n % s.group_size == 0,
                    "make_instance: n must be a multiple of the group size");
    ProblemInstance inst;
    inst.part = GroupPartition::uniform(s.group_size, s.n / s.group_size);
    inst.A = gen_matrix(s.kind, s.m, s.n, combine_seed(s.seed, 1));
    inst.ground_truth = gen_ground_truth(inst.part, s.nonzero_groups, s.intra_group_nonzeros,
                                         combine_seed(s.seed, 2));
    inst.b = gen_observation(inst.A, *inst.ground_truth, s.sigma, combine_seed(s.seed, 3));
    inst.meta = {s.kind, s.seed, s.sigma, s.nonzero_groups, s.intra_group_nonzeros};
    return inst;
}

// ---------------------------------------------------------------------------
// Bundle directory: A.csv, b.csv, xtrue.csv (optional), meta (key=value)

inline void write_bundle(const std::filesystem::path& dir, const ProblemInstance& inst,
                         const std::map<std::string, std::string>& extra_meta = {}) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError(dir, "cannot create directory: " + ec.message());
    io::write_matrix(dir / "A.csv", inst.A);
    io::write_vector(dir / "b.csv", inst.b);
    if (inst.ground_truth) io::write_vector(dir / "xtrue.csv", *inst.ground_truth);

    std::map<std::string, std::string> meta = extra_meta;
    meta["kind"] = to_string(inst.meta.kind);
    meta["seed"] = std::to_string(inst.meta.seed);
    meta["m"] = std::to_string(inst.m());
    meta["n"] = std::to_string(inst.n());
    meta["group_sizes"] = inst.part.to_string();
    meta["sigma"] = io::format_double(inst.meta.noise_sigma);
    meta["S"] = std::to_string(inst.meta.nonzero_groups);
    meta["s"] = inst.meta.intra_group_nonzeros ? std::to_string(*inst.meta.intra_group_nonzeros) : "";
    io::write_atomic(dir / "meta", [&](std::ostream& out) {
        for (const auto& [k, v] : meta) out << k << '=' << v << '\n';
    });
}

inline std::map<std::string, std::string> read_meta(const std::filesystem::path& file) {
    std::map<std::string, std::string> meta;
    for (const auto& line : io::read_lines(file)) {
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw IoError(file, "malformed meta line '" + line + "'");
        meta[line.substr(0, eq)] = line.substr(eq + 1);
    }
    return meta;
}

inline ProblemInstance read_bundle(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) throw IoError(dir, "instance directory not found");
    ProblemInstance inst;
    inst.A = io::read_matrix(dir / "A.csv");
    inst.b = io::read_vector(dir / "b.csv");
    const auto meta = read_meta(dir / "meta");
    auto get = [&](const std::string& key) -> std::string {
        const auto it = meta.find(key);
        return it == meta.end() ? std::string{} : it->second;
    };
    const auto sizes = get("group_sizes");
    if (sizes.empty()) throw IoError(dir / "meta", "missing group_sizes");
    inst.part = GroupPartition::parse(sizes);
    if (inst.part.total_length() != inst.A.cols())
        throw IoError(dir / "meta", "group_sizes cover " + std::to_string(inst.part.total_length()) +
                                        " indices but A has " + std::to_string(inst.A.cols()) + " columns");
    if (inst.b.size() != inst.A.rows())
        throw IoError(dir / "b.csv", "length " + std::to_string(inst.b.size()) + " != rows of A");
    if (std::filesystem::exists(dir / "xtrue.csv")) {
        inst.ground_truth = io::read_vector(dir / "xtrue.csv");
        if (inst.ground_truth->size() != inst.A.cols())
            throw IoError(dir / "xtrue.csv", "length does not match columns of A");
    }
    if (!get("kind").empty()) inst.meta.kind = parse_matrix_kind(get("kind"));
    if (!get("seed").empty()) inst.meta.seed = std::stoull(get("seed"));
    if (!get("sigma").empty()) inst.meta.noise_sigma = std::stod(get("sigma"));
    if (!get("S").empty()) inst.meta.nonzero_groups = std::stoul(get("S"));
    if (!get("s").empty()) inst.meta.intra_group_nonzeros = std::stoul(get("s"));
    return inst;
}

} // namespace fits3
