#pragma once

// Experiment harness: single trials, seeded sweeps over problem grids and
// per-iteration trace export.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <tuple>
#include <vector>

#include "baselines.hpp"
#include "errors.hpp"
#include "io.hpp"
#include "probgen.hpp"
#include "solver.hpp"

namespace fits3 {

enum class SolverKind { Fits3, Its3, AdmmGl };

inline std::string to_string(SolverKind s) {
    switch (s) {
    case SolverKind::Fits3: return "fits3";
    case SolverKind::Its3: return "its3";
    case SolverKind::AdmmGl: return "admm-gl";
    }
    return "?";
}

inline SolverKind parse_solver(std::string_view s) {
    if (s == "fits3") return SolverKind::Fits3;
    if (s == "its3") return SolverKind::Its3;
    if (s == "admm-gl") return SolverKind::AdmmGl;
    throw UsageError("unknown solver '" + std::string(s) + "' (expected fits3, its3 or admm-gl)");
}

struct TrialConfig {
    /// alpha = alpha_scale * max_i ||A_{g_i}^T b||_2, for every solver.
    double alpha_scale = 5e-4;
    Fits3Config fits;
    std::size_t warmstart_iters = 10;
    WarmStartOptions warmstart;
    AdmmConfig admm;
    double success_threshold = 0.01;
};

struct TrialResult {
    std::uint64_t seed = 0;
    std::string solver;
    double relative_error = 0.0;
    bool success = false;
    std::size_t iterations = 0;
    double seconds = 0.0;
    StopReason stop_reason = StopReason::MaxIter;
    std::string error;  ///< numeric failure message, empty on a normal run
};

inline double relative_error(std::span<const double> x, std::span<const double> truth) {
    const double nt = norm2(truth);
    detail::require(nt > 0.0, "relative_error: ground truth is zero");
    return distance2(x, truth) / nt;
}

/// Warm start used by FITS^3 / ITS^3 trials; its seed derives from the instance seed.
inline Vector trial_warm_start(const ProblemInstance& inst, double alpha, const TrialConfig& cfg) {
    return l1_admm_init(inst.A, inst.b, alpha, cfg.warmstart_iters,
                        combine_seed(inst.meta.seed, 4), cfg.warmstart);
}

/// Runs one solver on one instance. Degenerate stops and numeric failures are
/// recorded as failed trials rather than thrown.
inline TrialResult run_trial(const ProblemInstance& inst, SolverKind solver, const TrialConfig& cfg,
                             SolveReport* report_out = nullptr) {
    detail::require(inst.ground_truth.has_value(), "run_trial: instance has no ground truth");
    TrialResult res;
    res.seed = inst.meta.seed;
    res.solver = to_string(solver);

    const auto start = std::chrono::steady_clock::now();
    try {
        const double alpha = default_alpha(inst.A, inst.b, inst.part, cfg.alpha_scale);
        SolveReport rep;
        if (solver == SolverKind::AdmmGl) {
            AdmmConfig ac = cfg.admm;
            ac.alpha = alpha;
            rep = admm_group_lasso(inst.A, inst.b, inst.part, ac);
        } else {
            Fits3Config fc = cfg.fits;
            fc.alpha = alpha;
            if (solver == SolverKind::Its3) fc.schedule = ExtrapolationSchedule::zero();
            const Vector x0 = trial_warm_start(inst, alpha, cfg);
            rep = fits3_solve(inst.A, inst.b, inst.part, fc, x0);
        }
        res.relative_error = relative_error(rep.x_final, *inst.ground_truth);
        res.iterations = rep.iterations;
        res.stop_reason = rep.stop_reason;
        if (report_out) *report_out = std::move(rep);
    } catch (const NumericError& e) {
        res.relative_error = std::numeric_limits<double>::infinity();
        res.error = e.what();
    }
    res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    res.success = res.relative_error < cfg.success_threshold;
    return res;
}

// ---------------------------------------------------------------------------
// Sweeps

struct SweepSpec {
    std::vector<std::size_t> sizes{1024};  ///< n; m = n / 2
    /// Fractions of active groups; ignored when nonzero_groups is non-empty.
    std::vector<double> sparsity{0.1875};
    std::vector<std::size_t> nonzero_groups;
    std::vector<double> q{0.5};
    std::vector<double> p{2.0};
    std::vector<std::size_t> group_sizes{16};
    std::vector<MatrixKind> kinds{MatrixKind::Gaussian};
    std::optional<std::size_t> intra_group_nonzeros;
    std::vector<SolverKind> solvers{SolverKind::Fits3};
    std::size_t trials = 50;
    std::uint64_t base_seed = 0;
    double sigma = 0.001;
    TrialConfig trial;
    std::size_t jobs = 1;
};

struct SweepRow {
    std::string cell_id;
    std::size_t n = 0, m = 0, group_size = 0, nonzero_groups = 0;
    double sparsity = 0.0, q = 0.0, p = 0.0;
    MatrixKind kind = MatrixKind::Gaussian;
    std::string solver;
    double success_rate = 0.0;
    double median_rel_err = 0.0;
    double median_seconds = 0.0;
    std::size_t trials = 0;
    std::vector<TrialResult> results;
};

inline double median(std::vector<double> v) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    const std::size_t h = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(h), v.end());
    const double hi = v[h];
    if (v.size() % 2) return hi;
    const double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(h));
    return 0.5 * (lo + hi);
}

namespace detail {

struct InstanceCell {
    std::size_t n, group_size, nonzero_groups;
    MatrixKind kind;
};

inline std::uint64_t cell_seed(std::uint64_t base, const InstanceCell& c,
                               std::optional<std::size_t> intra) {
    std::uint64_t h = mix_seed(base);
    h = combine_seed(h, c.n);
    h = combine_seed(h, c.group_size);
    h = combine_seed(h, c.nonzero_groups);
    h = combine_seed(h, static_cast<std::uint64_t>(c.kind));
    h = combine_seed(h, intra ? *intra + 1 : 0);
    return h;
}

inline std::string format_param(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

} // namespace detail

/// Every (instance cell, trial) generates one instance shared by all q, p and
/// solvers, so comparisons within a cell are paired. Instance seeds depend only
/// on the base seed and the instance-defining coordinates, never on run order.
inline std::vector<SweepRow> run_sweep(const SweepSpec& spec) {
    detail::require(spec.trials >= 1, "run_sweep: trials must be >= 1");
    detail::require(!spec.solvers.empty(), "run_sweep: no solvers given");

    std::vector<detail::InstanceCell> cells;
    for (std::size_t n : spec.sizes)
        for (std::size_t l : spec.group_sizes) {
            detail::require(l >= 1 && n % l == 0, "run_sweep: n must be a multiple of group size");
            const std::size_t r = n / l;
            std::vector<std::size_t> counts = spec.nonzero_groups;
            if (counts.empty())
                for (double f : spec.sparsity)
                    counts.push_back(static_cast<std::size_t>(std::llround(f * static_cast<double>(r))));
            for (std::size_t S : counts)
                for (MatrixKind k : spec.kinds) cells.push_back({n, l, S, k});
        }

    struct Key {
        std::size_t cell, qi, pi, si;
        auto operator<=>(const Key&) const = default;
    };
    std::map<Key, std::vector<TrialResult>> results;
    for (std::size_t c = 0; c < cells.size(); ++c)
        for (std::size_t qi = 0; qi < spec.q.size(); ++qi)
            for (std::size_t pi = 0; pi < spec.p.size(); ++pi)
                for (std::size_t si = 0; si < spec.solvers.size(); ++si)
                    results[{c, qi, pi, si}].resize(spec.trials);

    const std::size_t jobs_total = cells.size() * spec.trials;
    std::atomic<std::size_t> next{0};
    std::mutex err_mu;
    std::exception_ptr first_error;

    auto worker = [&] {
        for (std::size_t job; (job = next.fetch_add(1)) < jobs_total;) {
            try {
                const std::size_t c = job / spec.trials, t = job % spec.trials;
                const auto& cell = cells[c];
                InstanceSpec is;
                is.n = cell.n;
                is.m = cell.n / 2;
                is.group_size = cell.group_size;
                is.nonzero_groups = cell.nonzero_groups;
                is.intra_group_nonzeros = spec.intra_group_nonzeros;
                is.kind = cell.kind;
                is.sigma = spec.sigma;
                is.seed = combine_seed(detail::cell_seed(spec.base_seed, cell, spec.intra_group_nonzeros), t);
                const ProblemInstance inst = make_instance(is);
                for (std::size_t qi = 0; qi < spec.q.size(); ++qi)
                    for (std::size_t pi = 0; pi < spec.p.size(); ++pi)
                        for (std::size_t si = 0; si < spec.solvers.size(); ++si) {
                            TrialConfig tc = spec.trial;
                            tc.fits.penalty = Penalty::make(tc.fits.penalty.kind, spec.q[qi]);
                            tc.fits.p = spec.p[pi];
                            tc.fits.spec_norm_sq = 1.0;  // generated A has orthonormal rows
                            results.at({c, qi, pi, si})[t] = run_trial(inst, spec.solvers[si], tc);
                        }
            } catch (...) {
                std::lock_guard lk(err_mu);
                if (!first_error) first_error = std::current_exception();
            }
        }
    };

    const std::size_t nthreads = std::max<std::size_t>(1, std::min(spec.jobs, jobs_total));
    if (nthreads == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t i = 0; i < nthreads; ++i) pool.emplace_back(worker);
    }
    if (first_error) std::rethrow_exception(first_error);

    std::vector<SweepRow> rows;
    for (auto& [key, trials] : results) {
        const auto& cell = cells[key.cell];
        SweepRow row;
        row.n = cell.n;
        row.m = cell.n / 2;
        row.group_size = cell.group_size;
        row.nonzero_groups = cell.nonzero_groups;
        row.sparsity = static_cast<double>(cell.nonzero_groups) /
                       static_cast<double>(cell.n / cell.group_size);
        row.q = spec.q[key.qi];
        row.p = spec.p[key.pi];
        row.kind = cell.kind;
        row.solver = to_string(spec.solvers[key.si]);
        row.cell_id = "n" + std::to_string(cell.n) + "-l" + std::to_string(cell.group_size) + "-S" +
                      std::to_string(cell.nonzero_groups) +
                      (spec.intra_group_nonzeros ? "-s" + std::to_string(*spec.intra_group_nonzeros) : "") +
                      "-q" + detail::format_param(row.q) + "-p" + detail::format_param(row.p) + "-" +
                      to_string(cell.kind);
        std::vector<double> errs, secs;
        std::size_t ok = 0;
        for (const auto& tr : trials) {
            errs.push_back(tr.relative_error);
            secs.push_back(tr.seconds);
            ok += tr.success;
        }
        row.trials = trials.size();
        row.success_rate = static_cast<double>(ok) / static_cast<double>(row.trials);
        row.median_rel_err = median(errs);
        row.median_seconds = median(secs);
        row.results = std::move(trials);
        rows.push_back(std::move(row));
    }
    return rows;
}

inline constexpr std::string_view kSweepHeader =
    "cell_id,n,m,sparsity,q,p,kind,solver,success_rate,median_rel_err,median_seconds,trials";

inline void write_sweep_csv(const std::filesystem::path& path, const std::vector<SweepRow>& rows) {
    io::write_atomic(path, [&](std::ostream& out) {
        out << kSweepHeader << '\n';
        for (const auto& r : rows)
            out << r.cell_id << ',' << r.n << ',' << r.m << ',' << io::format_double(r.sparsity) << ','
                << io::format_double(r.q) << ',' << io::format_double(r.p) << ',' << to_string(r.kind)
                << ',' << r.solver << ',' << io::format_double(r.success_rate) << ','
                << io::format_double(r.median_rel_err) << ',' << io::format_double(r.median_seconds)
                << ',' << r.trials << '\n';
    });
}

// ---------------------------------------------------------------------------
// Traces

inline constexpr std::string_view kTraceHeader = "k,E,H,support_size,step_norm,seconds";

/// Per-iteration series of a run. `rel_errors`, when non-empty, must hold one
/// recovery error per iteration and adds a rel_err column.
inline void export_trace(const SolveReport& rep, const std::filesystem::path& path,
                         std::span<const double> rel_errors = {}) {
    const auto& h = rep.histories;
    detail::require(rel_errors.empty() || rel_errors.size() == h.size(),
                    "export_trace: need one recovery error per iteration");
    io::write_atomic(path, [&](std::ostream& out) {
        out << kTraceHeader << (rel_errors.empty() ? "" : ",rel_err") << '\n';
        for (std::size_t k = 0; k < h.size(); ++k) {
            out << k + 1 << ',' << io::format_double(h.objective[k]) << ','
                << io::format_double(h.value_function[k]) << ',' << h.support_size[k] << ','
                << io::format_double(h.step_norm[k]) << ',' << io::format_double(h.seconds[k]);
            if (!rel_errors.empty()) out << ',' << io::format_double(rel_errors[k]);
            out << '\n';
        }
    });
}

} // namespace fits3
