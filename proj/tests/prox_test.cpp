#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "fits3/prox.hpp"
#include "test_util.hpp"

using namespace fits3;

namespace {

double subproblem(const Vector& x, const Vector& y, double w, double p, double beta) {
    double d = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) d += (x[j] - y[j]) * (x[j] - y[j]);
    return 0.5 * beta * d + beta * w * lp_norm(x, p);
}

// Best value over a grid that is repeatedly refined around its best point.
double grid_minimum(const Vector& y, double w, double p, double beta, std::size_t G) {
    const std::size_t d = y.size();
    Vector c(d), h(d), best_x(d, 0.0), x(d);
    for (std::size_t j = 0; j < d; ++j) {
        c[j] = 0.5 * y[j];
        h[j] = 0.5 * std::abs(y[j]) + 1e-12;
    }
    double best = subproblem(best_x, y, w, p, beta);
    for (int level = 0; level < 80; ++level) {
        std::vector<std::size_t> idx(d, 0);
        while (true) {
            for (std::size_t j = 0; j < d; ++j)
                x[j] = c[j] - h[j] + 2.0 * h[j] * static_cast<double>(idx[j]) / static_cast<double>(G - 1);
            const double v = subproblem(x, y, w, p, beta);
            if (v < best) {
                best = v;
                best_x = x;
            }
            std::size_t j = 0;
            while (j < d && ++idx[j] == G) idx[j++] = 0;
            if (j == d) break;
        }
        c = best_x;
        for (double& e : h) e *= 0.25;
    }
    return best;
}

} // namespace

TEST(ProxP1, Cases) {
    EXPECT_EQ(group_prox_p1(Vector{3, -0.5}, 0.0), (Vector{3, -0.5}));
    EXPECT_EQ(group_prox_p1(Vector{3, -0.5}, 1.0), (Vector{2, 0}));
}

TEST(ProxP1, MatchesGridOracle) {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (int i = 0; i < 50; ++i) {
        const Vector y = test::random_vector(2, rng);
        const double w = U(rng), beta = 1.0 + U(rng);
        const double got = subproblem(group_prox_p1(y, w), y, w, 1.0, beta);
        EXPECT_LE(got, grid_minimum(y, w, 1.0, beta, 41) + 1e-8);
    }
}

TEST(ProxP2, Cases) {
    EXPECT_EQ(group_prox_p2(Vector{3, 4}, 0.0), (Vector{3, 4}));
    const Vector x = group_prox_p2(Vector{3, 4}, 2.0);
    EXPECT_NEAR(x[0], 1.8, 1e-15);
    EXPECT_NEAR(x[1], 2.4, 1e-15);
    EXPECT_EQ(group_prox_p2(Vector{3, 4}, 5.0), (Vector{0, 0}));
    EXPECT_EQ(group_prox_p2(Vector{0, 0}, 1.0), (Vector{0, 0}));
}

TEST(ProxGeneral, ZeroWeightIsIdentity) {
    const auto r = group_prox_general(Vector{1, -2, 3}, 0.0, 1.5, 1.0);
    EXPECT_EQ(r.x, (Vector{1, -2, 3}));
    EXPECT_EQ(r.certificate.residual_norm, 0.0);
    EXPECT_TRUE(r.certificate.satisfied);
}

TEST(ProxGeneral, AgreesWithClosedForms) {
    std::mt19937_64 rng(22);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (int i = 0; i < 200; ++i) {
        const Vector y = test::random_vector(1 + rng() % 10, rng);
        const double w = 2.0 * U(rng);
        const auto a = group_prox_general(y, w, 1.0, 2.0).x;
        const auto b = group_prox_general(y, w, 2.0, 2.0).x;
        const auto ra = group_prox_p1(y, w), rb = group_prox_p2(y, w);
        for (std::size_t j = 0; j < y.size(); ++j) {
            EXPECT_NEAR(a[j], ra[j], 1e-8);
            EXPECT_NEAR(b[j], rb[j], 1e-8);
        }
    }
}

TEST(ProxGeneral, NearPTwoApproachesRadialShrinkage) {
    const Vector y{0.3, -1.2, 2.0};
    const auto a = group_prox_general(y, 0.7, 2.0 + 1e-9, 1.0).x;
    const auto b = group_prox_p2(y, 0.7);
    for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(a[j], b[j], 1e-7);
}

TEST(ProxGeneral, PThreeHalvesMatchesNestedGrid) {
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (int i = 0; i < 30; ++i) {
        const Vector y = test::random_vector(3, rng);
        const double w = 0.8 * U(rng) * norm2(y), beta = 1.0 + U(rng);
        const auto r = group_prox_general(y, w, 1.5, beta, 1e-10 * beta * (1.0 + norm2(y)));
        EXPECT_TRUE(r.certificate.satisfied);
        EXPECT_LE(subproblem(r.x, y, w, 1.5, beta), grid_minimum(y, w, 1.5, beta, 21) + 1e-7);
    }
}

TEST(ProxGeneral, ZeroWhenDualNormSmall) {
    // ||y||_3 <= w gives x = 0 at p = 1.5.
    const auto r = group_prox_general(Vector{0.1, 0.1}, 1.0, 1.5, 1.0);
    EXPECT_EQ(r.x, (Vector{0, 0}));
    EXPECT_TRUE(r.certificate.satisfied);
}

TEST(ProxGeneral, CertificateResidualIsStationarity) {
    std::mt19937_64 rng(24);
    for (double p : {1.2, 1.5, 3.0, 6.0}) {
        const Vector y = test::random_vector(8, rng);
        const auto r = group_prox_general(y, 0.3, p, 1.5);
        EXPECT_TRUE(r.certificate.satisfied) << "p=" << p;
        EXPECT_LE(prox_residual(r.x, y, 0.3, p, 1.5), r.certificate.bound);
    }
}

TEST(ProxGeneral, InexactBudgetAcceptsLooserSolves) {
    const Vector y{1.0, -0.5, 0.25};
    const auto exact = group_prox_general(y, 0.2, 1.5, 1.0, 0.0);
    const auto loose = group_prox_general(y, 0.2, 1.5, 1.0, 1e-3);
    EXPECT_LE(loose.inner_iterations, exact.inner_iterations);
    EXPECT_LE(loose.certificate.residual_norm, 1e-3);
}

TEST(ProxGeneral, ExhaustedBudgetThrows) {
    InnerOptions opt;
    opt.tol = 1e-1;
    opt.max_iter = 1;
    try {
        group_prox_general(Vector{1.0, -0.5, 0.25}, 0.2, 1.5, 1.0, 0.0, opt);
        FAIL() << "expected InnerSolverError";
    } catch (const InnerSolverError& e) {
        EXPECT_FALSE(e.best().certificate.satisfied);
        EXPECT_EQ(e.best().x.size(), 3u);
    }
}

TEST(ProxGeneral, RejectsInvalidInput) {
    EXPECT_THROW(group_prox_general(Vector{1.0}, 0.1, 0.5, 1.0), UsageError);
    EXPECT_THROW(group_prox_general(Vector{1.0}, -0.1, 1.5, 1.0), UsageError);
    EXPECT_THROW(group_prox_general(Vector{1.0}, 0.1, 1.5, 0.0), UsageError);
}

TEST(ProjectLpBall, LandsOnSphereForOutsidePoints) {
    std::mt19937_64 rng(25);
    for (double r : {1.0, 1.5, 2.0, 3.0, double(INFINITY)}) {
        const Vector y = test::random_vector(6, rng, 3.0);
        std::size_t steps = 0;
        const Vector u = project_lp_ball(y, 0.5, r, 1e-14, steps);
        EXPECT_NEAR(lp_norm(u, r), 0.5, 1e-10) << "r=" << r;
    }
}
