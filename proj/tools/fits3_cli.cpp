// fits3 command-line driver: instance generation, single solves, sweeps and
// convergence traces. Defaults reproduce the reference experimental setup.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fits3/fits3.hpp"

namespace fs = std::filesystem;
using namespace fits3;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitNumeric = 2;

struct SolverFlags {
    double alpha_scale = 5e-4;
    std::optional<double> alpha;
    double beta = 1.0001;
    double tau = 0.2;
    double tol = 5e-5;
    std::size_t maxit = 300;
    double p = 2.0;
    double q = 0.5;
    std::string penalty = "tq";
    double epsilon = 0.5;
    std::string schedule = "fista";
    std::size_t freeze = 300;
    std::size_t warmstart_iters = 10;
    double rho = 1.0;
    std::size_t admm_maxit = 5000;
    double success = 0.01;
    double inner_tol = InnerOptions{}.tol;
    std::size_t inner_maxit = InnerOptions{}.max_iter;

    void attach(CLI::App& app, bool with_grid_q_p) {
        app.add_option("--alpha-scale", alpha_scale, "alpha = scale * max_i ||A_gi^T b||_2")
            ->capture_default_str();
        app.add_option("--alpha", alpha, "absolute alpha (overrides --alpha-scale)");
        app.add_option("--beta", beta, "beta as a multiple of ||A^T A||_2")->capture_default_str();
        app.add_option("--tau", tau, "group threshold")->capture_default_str();
        app.add_option("--tol", tol, "relative step stopping tolerance")->capture_default_str();
        app.add_option("--maxit", maxit, "maximum iterations")->capture_default_str();
        if (!with_grid_q_p) {
            app.add_option("--p", p, "group norm exponent (>= 1)")->capture_default_str();
            app.add_option("--q", q, "penalty exponent in (0,1)")->capture_default_str();
        }
        app.add_option("--penalty", penalty, "penalty: tq = t^q, logtq = log(1 + t^q)")
            ->capture_default_str()
            ->check(CLI::IsMember({"tq", "logtq"}));
        app.add_option("--epsilon", epsilon, "inner inexactness in [0,1); ignored for p in {1,2}")
            ->capture_default_str();
        app.add_option("--schedule", schedule, "extrapolation: fista | zero | const:<t>")
            ->capture_default_str();
        app.add_option("--freeze", freeze, "iteration after which the fista sequence freezes")
            ->capture_default_str();
        app.add_option("--warmstart-iters", warmstart_iters, "l1-ADMM warm start iterations")
            ->capture_default_str();
        app.add_option("--rho", rho, "ADMM penalty parameter")->capture_default_str();
        app.add_option("--admm-maxit", admm_maxit, "ADMM-GL iteration cap")->capture_default_str();
        app.add_option("--inner-tol", inner_tol, "initial tolerance of the general-p group prox")
            ->capture_default_str();
        app.add_option("--inner-maxit", inner_maxit, "inner step budget of the general-p group prox")
            ->capture_default_str();
        app.add_option("--success", success, "relative error below which a trial succeeds")
            ->capture_default_str();
    }

    ExtrapolationSchedule make_schedule() const {
        if (schedule == "fista") return ExtrapolationSchedule::fista_frozen(freeze);
        if (schedule == "zero") return ExtrapolationSchedule::zero();
        if (schedule.rfind("const:", 0) == 0)
            return ExtrapolationSchedule::constant(std::stod(schedule.substr(6)));
        throw UsageError("--schedule: expected fista, zero or const:<t>, got '" + schedule + "'");
    }

    TrialConfig trial_config() const {
        TrialConfig tc;
        tc.alpha_scale = alpha_scale;
        tc.fits.beta_scale = beta;
        tc.fits.tau = tau;
        tc.fits.tol = tol;
        tc.fits.max_iter = maxit;
        tc.fits.p = p;
        tc.fits.penalty = Penalty::parse(penalty, q);
        tc.fits.epsilon = epsilon;
        tc.fits.schedule = make_schedule();
        tc.fits.inner.tol = inner_tol;
        tc.fits.inner.max_iter = inner_maxit;
        tc.warmstart_iters = warmstart_iters;
        tc.warmstart.rho = rho;
        tc.admm.rho = rho;
        tc.admm.max_iter = admm_maxit;
        tc.success_threshold = success;
        return tc;
    }

    std::map<std::string, std::string> echo() const {
        return {{"alpha_scale", io::format_double(alpha_scale)},
                {"alpha", alpha ? io::format_double(*alpha) : ""},
                {"beta_multiplier", io::format_double(beta)},
                {"tau", io::format_double(tau)},
                {"tol", io::format_double(tol)},
                {"maxit", std::to_string(maxit)},
                {"p", io::format_double(p)},
                {"q", io::format_double(q)},
                {"penalty", penalty},
                {"epsilon", io::format_double(epsilon)},
                {"schedule", schedule},
                {"freeze", std::to_string(freeze)},
                {"warmstart_iters", std::to_string(warmstart_iters)},
                {"rho", io::format_double(rho)},
                {"admm_maxit", std::to_string(admm_maxit)},
                {"inner_tol", io::format_double(inner_tol)},
                {"inner_maxit", std::to_string(inner_maxit)}};
    }
};

void write_meta(const fs::path& path, const std::map<std::string, std::string>& kv) {
    io::write_atomic(path, [&](std::ostream& out) {
        for (const auto& [k, v] : kv) out << k << '=' << v << '\n';
    });
}

// -- gen ---------------------------------------------------------------------

struct GenFlags {
    std::size_t n = 1024;
    std::optional<std::size_t> m;
    std::size_t l = 16;
    std::size_t S = 12;
    std::optional<std::size_t> s;
    std::string kind = "gaussian";
    double sigma = 0.001;
    std::uint64_t seed = 0;

    void attach(CLI::App& app) {
        app.add_option("--n", n, "signal length")->capture_default_str();
        app.add_option("--m", m, "measurements (default n/2)");
        app.add_option("--l", l, "group size")->capture_default_str();
        app.add_option("--S", S, "number of nonzero groups")->capture_default_str();
        app.add_option("--s", s, "nonzeros inside each active group (default: all)");
        app.add_option("--kind", kind, "matrix: gaussian | bernoulli | hadamard | fourier")
            ->capture_default_str();
        app.add_option("--sigma", sigma, "observation noise standard deviation")->capture_default_str();
        app.add_option("--seed", seed, "instance seed")->capture_default_str();
    }

    InstanceSpec spec() const {
        InstanceSpec is;
        is.n = n;
        is.m = m.value_or(n / 2);
        is.group_size = l;
        is.nonzero_groups = S;
        is.intra_group_nonzeros = s;
        is.kind = parse_matrix_kind(kind);
        is.sigma = sigma;
        is.seed = seed;
        return is;
    }
};

int run_gen(const GenFlags& g, const fs::path& out) {
    const ProblemInstance inst = make_instance(g.spec());
    write_bundle(out, inst, {{"l", std::to_string(g.l)}});
    std::cout << "wrote instance " << out << " (m=" << inst.m() << ", n=" << inst.n()
              << ", groups=" << inst.part.group_count() << ", S=" << g.S << ")\n";
    return kExitOk;
}

// -- solve / trace -------------------------------------------------------------

double resolve_alpha(const SolverFlags& f, const ProblemInstance& inst) {
    return f.alpha ? *f.alpha : default_alpha(inst.A, inst.b, inst.part, f.alpha_scale);
}

int run_solve(const SolverFlags& f, const fs::path& instance_dir, std::optional<fs::path> out_dir,
              const std::string& baseline, std::optional<fs::path> x0_path,
              std::optional<std::uint64_t> warm_seed) {
    const ProblemInstance inst = read_bundle(instance_dir);
    const fs::path out = out_dir.value_or(instance_dir);
    fs::create_directories(out);

    const TrialConfig tc = f.trial_config();
    const double alpha = resolve_alpha(f, inst);
    SolveReport rep;
    std::string solver_name;
    if (baseline == "admm-gl") {
        AdmmConfig ac = tc.admm;
        ac.alpha = alpha;
        rep = admm_group_lasso(inst.A, inst.b, inst.part, ac);
        solver_name = "admm-gl";
    } else if (baseline.empty()) {
        Fits3Config fc = tc.fits;
        fc.alpha = alpha;
        const Vector x0 = x0_path ? io::read_vector(*x0_path)
                                  : l1_admm_init(inst.A, inst.b, alpha, tc.warmstart_iters,
                                                 warm_seed.value_or(combine_seed(inst.meta.seed, 4)),
                                                 tc.warmstart);
        rep = fits3_solve(inst.A, inst.b, inst.part, fc, x0);
        solver_name = fc.schedule.kind() == ExtrapolationSchedule::Kind::Zero ? "its3" : "fits3";
    } else {
        throw UsageError("--baseline: unknown baseline '" + baseline + "' (expected admm-gl)");
    }

    io::write_vector(out / "x.csv", rep.x_final);
    export_trace(rep, out / "report.csv");
    auto meta = f.echo();
    meta["solver"] = solver_name;
    meta["alpha_used"] = io::format_double(alpha);
    meta["beta_used"] = io::format_double(rep.beta);
    meta["iterations"] = std::to_string(rep.iterations);
    meta["stop_reason"] = to_string(rep.stop_reason);
    meta["seconds"] = io::format_double(rep.total_seconds);
    std::optional<double> rel;
    if (inst.ground_truth) {
        rel = relative_error(rep.x_final, *inst.ground_truth);
        meta["rel_err"] = io::format_double(*rel);
    }
    write_meta(out / "solve.meta", meta);

    std::cout << solver_name << ": " << rep.iterations << " iterations, stop="
              << to_string(rep.stop_reason) << ", " << rep.total_seconds << " s";
    if (rel) std::cout << ", rel_err=" << *rel;
    std::cout << "\nwrote " << (out / "x.csv") << " and " << (out / "report.csv") << '\n';
    return kExitOk;
}

int run_trace(const SolverFlags& f, const GenFlags& g, std::optional<fs::path> instance_dir,
              const fs::path& out, std::optional<fs::path> its3_out) {
    const ProblemInstance inst = instance_dir ? read_bundle(*instance_dir) : make_instance(g.spec());
    const TrialConfig tc = f.trial_config();
    const double alpha = resolve_alpha(f, inst);
    const Vector x0 = trial_warm_start(inst, alpha, tc);

    auto traced = [&](ExtrapolationSchedule sched, const fs::path& path) {
        Fits3Config fc = tc.fits;
        fc.alpha = alpha;
        fc.schedule = std::move(sched);
        std::vector<double> errs;
        IterationObserver obs;
        if (inst.ground_truth)
            obs = [&](std::size_t, std::span<const double> x) {
                errs.push_back(relative_error(x, *inst.ground_truth));
            };
        const SolveReport rep = fits3_solve(inst.A, inst.b, inst.part, fc, x0, obs);
        export_trace(rep, path, errs);
        std::cout << "wrote " << path << " (" << rep.iterations << " iterations, stop="
                  << to_string(rep.stop_reason) << ")\n";
    };
    traced(tc.fits.schedule, out);
    if (its3_out) traced(ExtrapolationSchedule::zero(), *its3_out);
    return kExitOk;
}

// -- sweeps ------------------------------------------------------------------

struct SweepFlags {
    std::vector<std::size_t> n{1024};
    std::vector<std::size_t> l{16};
    std::vector<std::size_t> S;
    std::vector<double> sparsity;
    std::optional<std::size_t> s;
    std::vector<double> q{0.5};
    std::vector<double> p{2.0};
    std::vector<std::string> kinds{"gaussian"};
    std::vector<std::string> solvers{"fits3"};
    std::size_t trials = 50;
    std::uint64_t seed = 0;
    double sigma = 0.001;
    std::size_t jobs = 1;

    void attach(CLI::App& app) {
        app.add_option("--n", n, "signal lengths (m = n/2)")->delimiter(',')->capture_default_str();
        app.add_option("--l", l, "group sizes")->delimiter(',')->capture_default_str();
        app.add_option("--S", S, "numbers of nonzero groups (overrides --sparsity; bench-success "
                                 "defaults to 4,8,...,24)")
            ->delimiter(',');
        app.add_option("--sparsity", sparsity, "fractions of nonzero groups")
            ->delimiter(',')
            ->capture_default_str();
        app.add_option("--s", s, "nonzeros inside each active group (default: all)");
        app.add_option("--q", q, "penalty exponents")->delimiter(',')->capture_default_str();
        app.add_option("--p", p, "group norm exponents")->delimiter(',')->capture_default_str();
        app.add_option("--kind", kinds, "matrix kinds")->delimiter(',')->capture_default_str();
        app.add_option("--solvers", solvers, "fits3, its3, admm-gl")
            ->delimiter(',')
            ->capture_default_str();
        app.add_option("--trials", trials, "trials per cell")->capture_default_str();
        app.add_option("--seed", seed, "base seed")->capture_default_str();
        app.add_option("--sigma", sigma, "observation noise")->capture_default_str();
        app.add_option("--jobs", jobs, "worker threads")->capture_default_str();
    }

    SweepSpec spec(const SolverFlags& f) const {
        SweepSpec sp;
        sp.sizes = n;
        sp.group_sizes = l;
        sp.nonzero_groups = S;
        sp.sparsity = sparsity;
        sp.intra_group_nonzeros = s;
        sp.q = q;
        sp.p = p;
        sp.kinds.clear();
        for (const auto& k : kinds) sp.kinds.push_back(parse_matrix_kind(k));
        sp.solvers.clear();
        for (const auto& s_ : solvers) sp.solvers.push_back(parse_solver(s_));
        sp.trials = trials;
        sp.base_seed = seed;
        sp.sigma = sigma;
        sp.jobs = jobs;
        sp.trial = f.trial_config();
        if (f.alpha) throw UsageError("--alpha is not supported for sweeps; use --alpha-scale");
        return sp;
    }
};

int run_bench(const SolverFlags& f, const SweepFlags& s, const fs::path& out) {
    const auto rows = run_sweep(s.spec(f));
    write_sweep_csv(out, rows);
    for (const auto& r : rows)
        std::cout << r.cell_id << ' ' << r.solver << ": success=" << r.success_rate
                  << " median_rel_err=" << r.median_rel_err << " median_s=" << r.median_seconds << '\n';
    std::cout << "wrote " << out << '\n';
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"FITS^3 group-sparse recovery: generate instances, solve, benchmark"};
    app.require_subcommand(1);

    // gen
    GenFlags gen_flags;
    fs::path gen_out;
    auto* gen = app.add_subcommand("gen", "generate an instance bundle");
    gen_flags.attach(*gen);
    gen->add_option("--out", gen_out, "output directory")->required();

    // solve
    SolverFlags solve_flags;
    fs::path solve_instance;
    std::optional<fs::path> solve_out, solve_x0;
    std::optional<std::uint64_t> solve_warm_seed;
    std::string baseline;
    auto* solve = app.add_subcommand("solve", "run FITS^3 (or a baseline) on an instance bundle");
    solve_flags.attach(*solve, false);
    solve->add_option("--instance", solve_instance, "instance directory")->required();
    solve->add_option("--out", solve_out, "output directory (default: the instance directory)");
    solve->add_option("--baseline", baseline, "run a baseline instead: admm-gl");
    solve->add_option("--x0", solve_x0, "initial point vector file (skips the warm start)");
    solve->add_option("--warmstart-seed", solve_warm_seed, "seed of the warm start's random start");

    // bench-success
    SolverFlags succ_flags;
    SweepFlags succ_sweep;
    fs::path succ_out = "success.csv";
    auto* succ = app.add_subcommand("bench-success", "success-rate sweep over sparsity, q, l, matrix kind");
    succ_flags.attach(*succ, true);
    succ_sweep.attach(*succ);
    succ->add_option("--out", succ_out, "output CSV")->capture_default_str();

    // bench-scale
    SolverFlags scale_flags;
    SweepFlags scale_sweep;
    scale_sweep.n = {1024, 4096};
    scale_sweep.sparsity = {0.05, 0.10, 0.15, 0.20};
    scale_sweep.solvers = {"fits3", "admm-gl"};
    fs::path scale_out = "scale.csv";
    auto* scale = app.add_subcommand("bench-scale", "accuracy and timing across problem sizes");
    scale_flags.attach(*scale, true);
    scale_sweep.attach(*scale);
    scale->add_option("--out", scale_out, "output CSV")->capture_default_str();

    // trace
    SolverFlags trace_flags;
    GenFlags trace_gen;
    std::optional<fs::path> trace_instance, trace_its3;
    fs::path trace_out = "trace.csv";
    auto* trace = app.add_subcommand("trace", "per-iteration convergence trace of one run");
    trace_flags.attach(*trace, false);
    trace_gen.attach(*trace);
    trace->add_option("--instance", trace_instance, "instance directory (default: generate from flags)");
    trace->add_option("--out", trace_out, "trace CSV")->capture_default_str();
    trace->add_option("--its3-out", trace_its3, "also trace the run without extrapolation");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (*gen) return run_gen(gen_flags, gen_out);
        if (*solve)
            return run_solve(solve_flags, solve_instance, solve_out, baseline, solve_x0, solve_warm_seed);
        if (*succ) {
            if (succ_sweep.S.empty() && succ_sweep.sparsity.empty()) succ_sweep.S = {4, 8, 12, 16, 20, 24};
            return run_bench(succ_flags, succ_sweep, succ_out);
        }
        if (*scale) return run_bench(scale_flags, scale_sweep, scale_out);
        if (*trace) return run_trace(trace_flags, trace_gen, trace_instance, trace_out, trace_its3);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "numeric error: " << e.what() << '\n';
        return kExitNumeric;
    }
    return kExitUsage;
}
