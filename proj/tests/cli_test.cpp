#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include <gtest/gtest.h>
#include <sys/wait.h>

#include "fits3/fits3.hpp"

namespace fs = std::filesystem;

namespace {

int run(const std::string& args) {
    const std::string cmd = std::string(FITS3_CLI) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    return {std::istreambuf_iterator<char>(in), {}};
}

class Cli : public ::testing::Test {
protected:
    void SetUp() override {
        dir = fs::temp_directory_path() / ("fits3_cli_" + std::string(
            ::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    void TearDown() override { fs::remove_all(dir); }
    fs::path dir;
};

} // namespace

TEST_F(Cli, HelpAndUsageErrors) {
    EXPECT_EQ(run("--help"), 0);
    EXPECT_EQ(run(""), 1);
    EXPECT_EQ(run("solve --bogus-flag 1"), 1);
    EXPECT_EQ(run("gen --n 64 --m 32 --l 8 --S 2 --kind nope --out " + dir.string()), 1);
    EXPECT_EQ(run("solve --instance " + (dir / "missing").string()), 1);
}

TEST_F(Cli, HelpListsDefaults) {
    const auto out = dir / "help.txt";
    ASSERT_EQ(std::system((std::string(FITS3_CLI) + " solve --help > " + out.string()).c_str()), 0);
    const std::string h = slurp(out);
    for (const char* flag : {"--tau", "--tol", "--maxit", "--alpha-scale", "--beta", "--epsilon", "--q", "--p"})
        EXPECT_NE(h.find(flag), std::string::npos) << flag;
    EXPECT_NE(h.find("0.2"), std::string::npos);
    EXPECT_NE(h.find("5e-05"), std::string::npos);
}

TEST_F(Cli, GenSolveRoundTrip) {
    const auto inst = dir / "inst";
    ASSERT_EQ(run("gen --n 128 --m 64 --l 8 --S 2 --kind gaussian --seed 7 --out " + inst.string()), 0);
    const auto meta = fits3::read_meta(inst / "meta");
    EXPECT_EQ(meta.at("n"), "128");
    EXPECT_EQ(meta.at("m"), "64");
    EXPECT_EQ(meta.at("l"), "8");
    EXPECT_EQ(meta.at("S"), "2");
    EXPECT_EQ(meta.at("seed"), "7");
    EXPECT_EQ(meta.at("kind"), "gaussian");

    const auto out = dir / "out";
    ASSERT_EQ(run("solve --instance " + inst.string() + " --p 2 --q 0.5 --out " + out.string()), 0);
    EXPECT_EQ(fits3::io::read_vector(out / "x.csv").size(), 128u);
    const auto smeta = fits3::read_meta(out / "solve.meta");
    EXPECT_EQ(smeta.at("tau"), "0.20000000000000001");
    const std::string stop = smeta.at("stop_reason");
    EXPECT_TRUE(stop == "tol_reached" || stop == "max_iter");
    const auto rows = fits3::io::read_lines(out / "report.csv");
    EXPECT_EQ(rows[0], fits3::kTraceHeader);
    EXPECT_EQ(rows.size(), std::stoul(smeta.at("iterations")) + 1);

    ASSERT_EQ(run("solve --instance " + inst.string() + " --baseline admm-gl --out " + out.string()), 0);
    EXPECT_EQ(fits3::read_meta(out / "solve.meta").at("solver"), "admm-gl");
    EXPECT_EQ(run("solve --instance " + inst.string() + " --baseline lasso"), 1);
}

TEST_F(Cli, NumericFailureExitsTwo) {
    const auto inst = dir / "inst";
    ASSERT_EQ(run("gen --n 64 --m 32 --l 8 --S 2 --seed 1 --out " + inst.string()), 0);
    // One inner step at a loose tolerance cannot certify an exact p = 1.5 prox.
    EXPECT_EQ(run("solve --instance " + inst.string() +
                  " --p 1.5 --epsilon 0 --inner-maxit 1 --inner-tol 1 --out " + (dir / "o").string()),
              2);
    // A zero observation vector is rejected as invalid input.
    {
        std::ofstream b(inst / "b.csv");
        for (int i = 0; i < 32; ++i) b << "0\n";
    }
    EXPECT_EQ(run("solve --instance " + inst.string() + " --out " + (dir / "o").string()), 1);
}

TEST_F(Cli, TraceAndBenches) {
    const auto trace = dir / "trace.csv", its = dir / "its.csv";
    ASSERT_EQ(run("trace --n 128 --m 64 --l 8 --S 2 --seed 3 --out " + trace.string() + " --its3-out " +
                  its.string()),
              0);
    EXPECT_EQ(fits3::io::read_lines(trace)[0], std::string(fits3::kTraceHeader) + ",rel_err");
    EXPECT_TRUE(fs::exists(its));

    const auto csv = dir / "scale.csv";
    ASSERT_EQ(run("bench-scale --n 128 --l 8 --sparsity 0.125 --trials 2 --solvers fits3,admm-gl --out " +
                  csv.string()),
              0);
    const auto lines = fits3::io::read_lines(csv);
    ASSERT_EQ(lines.size(), 3u);
    EXPECT_EQ(lines[0], fits3::kSweepHeader);

    const auto succ = dir / "succ.csv";
    ASSERT_EQ(run("bench-success --n 128 --l 8 --S 1,2 --q 0.3,0.5 --trials 2 --out " + succ.string()), 0);
    EXPECT_EQ(fits3::io::read_lines(succ).size(), 5u);
    EXPECT_EQ(run("bench-success --trials 0 --out " + succ.string()), 1);
}
