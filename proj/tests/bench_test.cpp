#include <filesystem>
#include <fstream>
#include <string>

#include <gtest/gtest.h>

#include "fits3/fits3.hpp"

using namespace fits3;

namespace {

std::vector<std::string> lines_of(const std::filesystem::path& p) {
    std::ifstream in(p);
    std::vector<std::string> out;
    for (std::string l; std::getline(in, l);) out.push_back(l);
    return out;
}

SweepSpec tiny_sweep() {
    SweepSpec s;
    s.sizes = {128};
    s.group_sizes = {8};
    s.nonzero_groups = {2};
    s.trials = 3;
    s.base_seed = 17;
    s.solvers = {SolverKind::Fits3, SolverKind::Its3};
    return s;
}

} // namespace

TEST(RelativeError, ExactAndZero) {
    const Vector t{1, -2, 0, 3};
    EXPECT_EQ(relative_error(t, t), 0.0);
    EXPECT_EQ(relative_error(Vector(4, 0.0), t), 1.0);
    EXPECT_THROW(relative_error(t, Vector(4, 0.0)), UsageError);
}

TEST(RunTrial, RecordsOutcome) {
    InstanceSpec is;
    is.n = 128;
    is.m = 64;
    is.group_size = 8;
    is.nonzero_groups = 2;
    is.seed = 3;
    const ProblemInstance inst = make_instance(is);
    SolveReport rep;
    const TrialResult r = run_trial(inst, SolverKind::Fits3, TrialConfig{}, &rep);
    EXPECT_EQ(r.solver, "fits3");
    EXPECT_EQ(r.iterations, rep.iterations);
    EXPECT_EQ(r.relative_error, relative_error(rep.x_final, *inst.ground_truth));
    EXPECT_EQ(r.success, r.relative_error < 0.01);
    EXPECT_TRUE(r.error.empty());
}

TEST(RunTrial, NumericFailureIsAFailedTrial) {
    InstanceSpec is;
    is.n = 64;
    is.m = 32;
    is.group_size = 8;
    is.nonzero_groups = 2;
    is.seed = 4;
    const ProblemInstance inst = make_instance(is);
    TrialConfig tc;
    tc.fits.p = 1.5;
    tc.fits.inner.max_iter = 1;
    tc.fits.inner.tol = 1.0;
    tc.fits.epsilon = 1e-12;
    const TrialResult r = run_trial(inst, SolverKind::Fits3, tc);
    EXPECT_FALSE(r.success);
    EXPECT_FALSE(r.error.empty());
    EXPECT_TRUE(std::isinf(r.relative_error));
}

TEST(Sweep, SingleCellMatchesRunTrial) {
    SweepSpec s = tiny_sweep();
    s.trials = 1;
    s.solvers = {SolverKind::Fits3};
    const auto rows = run_sweep(s);
    ASSERT_EQ(rows.size(), 1u);
    const auto& row = rows[0];
    EXPECT_EQ(row.trials, 1u);
    EXPECT_EQ(row.median_rel_err, row.results[0].relative_error);
    EXPECT_EQ(row.success_rate, row.results[0].success ? 1.0 : 0.0);
    EXPECT_EQ(row.nonzero_groups, 2u);
}

TEST(Sweep, DeterministicApartFromTiming) {
    SweepSpec s = tiny_sweep();
    const auto a = run_sweep(s);
    s.jobs = 3;
    const auto b = run_sweep(s);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i].cell_id, b[i].cell_id);
        EXPECT_EQ(a[i].solver, b[i].solver);
        EXPECT_EQ(a[i].success_rate, b[i].success_rate);
        EXPECT_EQ(a[i].median_rel_err, b[i].median_rel_err);
        for (std::size_t t = 0; t < a[i].results.size(); ++t)
            EXPECT_EQ(a[i].results[t].iterations, b[i].results[t].iterations);
    }
}

TEST(Sweep, SolversSharePairedInstances) {
    const auto rows = run_sweep(tiny_sweep());
    ASSERT_EQ(rows.size(), 2u);
    for (std::size_t t = 0; t < 3; ++t) EXPECT_EQ(rows[0].results[t].seed, rows[1].results[t].seed);
}

TEST(Sweep, CsvLayout) {
    const auto path = std::filesystem::temp_directory_path() / "fits3_sweep.csv";
    write_sweep_csv(path, run_sweep(tiny_sweep()));
    const auto lines = lines_of(path);
    ASSERT_EQ(lines.size(), 3u);
    EXPECT_EQ(lines[0], kSweepHeader);
    std::filesystem::remove(path);
}

TEST(Median, EvenAndOdd) {
    EXPECT_EQ(median({3, 1, 2}), 2.0);
    EXPECT_EQ(median({4, 1, 3, 2}), 2.5);
    EXPECT_TRUE(std::isnan(median({})));
}

TEST(Trace, RowsAndMonotoneColumns) {
    InstanceSpec is;
    is.n = 128;
    is.m = 64;
    is.group_size = 8;
    is.nonzero_groups = 2;
    is.seed = 5;
    const ProblemInstance inst = make_instance(is);
    SolveReport rep;
    run_trial(inst, SolverKind::Fits3, TrialConfig{}, &rep);
    const auto path = std::filesystem::temp_directory_path() / "fits3_trace.csv";
    export_trace(rep, path);
    const auto lines = lines_of(path);
    ASSERT_EQ(lines.size(), rep.iterations + 1);
    EXPECT_EQ(lines[0], kTraceHeader);

    const auto& supp = rep.histories.support_size;
    for (std::size_t k = 1; k < supp.size(); ++k) EXPECT_LE(supp[k], supp[k - 1]);
    const auto K = support_stabilization_index(rep);
    ASSERT_TRUE(K);
    EXPECT_EQ(h_monotonicity_violations(rep, *K), 0u);

    SolveReport three = rep;
    for (auto* v : {&three.histories.objective, &three.histories.value_function, &three.histories.step_norm,
                    &three.histories.seconds, &three.histories.extrapolation})
        v->resize(3);
    three.histories.support_size.resize(3);
    three.histories.active_size.resize(3);
    export_trace(three, path, std::vector<double>{0.5, 0.2, 0.1});
    const auto l3 = lines_of(path);
    ASSERT_EQ(l3.size(), 4u);
    EXPECT_EQ(l3[0], std::string(kTraceHeader) + ",rel_err");
    EXPECT_EQ(l3[3].substr(0, 2), "3,");
    EXPECT_THROW(export_trace(three, path, std::vector<double>{0.5}), UsageError);
    std::filesystem::remove(path);
}
