#include <cmath>
#include <filesystem>

#include <gtest/gtest.h>

#include "fits3/fits3.hpp"

using namespace fits3;

TEST(GenMatrix, OrthonormalRowsForEveryKind) {
    for (MatrixKind k : {MatrixKind::Gaussian, MatrixKind::Bernoulli, MatrixKind::PartHadamard,
                         MatrixKind::PartFourier}) {
        const DenseMatrix A = gen_matrix(k, 64, 128, 1);
        EXPECT_LE(orthonormality_defect(A), 1e-8) << to_string(k);
        EXPECT_NEAR(spectral_norm_sq(A).value, 1.0, 1e-6) << to_string(k);
    }
}

TEST(GenMatrix, Deterministic) {
    EXPECT_EQ(gen_matrix(MatrixKind::Gaussian, 16, 32, 5), gen_matrix(MatrixKind::Gaussian, 16, 32, 5));
    EXPECT_NE(gen_matrix(MatrixKind::Gaussian, 16, 32, 5), gen_matrix(MatrixKind::Gaussian, 16, 32, 6));
}

TEST(GenMatrix, BernoulliSignsAreBalanced) {
    const std::size_t m = 256, n = 512;
    const DenseMatrix B = raw_measurement_matrix(MatrixKind::Bernoulli, m, n, 7);
    double sum = 0.0;
    for (double e : B.data()) {
        ASSERT_TRUE(e == 1.0 || e == -1.0);
        sum += e;
    }
    EXPECT_LE(std::abs(sum / static_cast<double>(m * n)), 3.0 / std::sqrt(static_cast<double>(m * n)));
}

TEST(GenMatrix, RejectsBadShapes) {
    EXPECT_THROW(gen_matrix(MatrixKind::Gaussian, 10, 10, 1), UsageError);
    EXPECT_THROW(gen_matrix(MatrixKind::PartHadamard, 4, 12, 1), UsageError);
    EXPECT_THROW(parse_matrix_kind("sparse"), UsageError);
    EXPECT_EQ(parse_matrix_kind(to_string(MatrixKind::PartFourier)), MatrixKind::PartFourier);
}

TEST(GroundTruth, Counts) {
    const auto part = GroupPartition::uniform(16, 64);
    EXPECT_EQ(gen_ground_truth(part, 0, std::nullopt, 1), Vector(1024, 0.0));
    const Vector full = gen_ground_truth(part, 64, std::nullopt, 2);
    for (double e : full) EXPECT_NE(e, 0.0);
    for (std::uint64_t seed = 0; seed < 100; ++seed)
        ASSERT_EQ(group_support(gen_ground_truth(part, 12, std::nullopt, seed), part).size(), 12u);
}

TEST(GroundTruth, IntraGroupSparsity) {
    const auto part = GroupPartition::uniform(32, 32);
    const Vector x = gen_ground_truth(part, 16, 6, 3);
    const GroupSet s = group_support(x, part);
    EXPECT_EQ(s.size(), 16u);
    for (std::size_t g : s) {
        std::size_t nz = 0;
        for (double e : part.group(std::span<const double>(x), g)) nz += e != 0.0;
        EXPECT_EQ(nz, 6u);
    }
    EXPECT_THROW(gen_ground_truth(part, 33, std::nullopt, 1), UsageError);
}

TEST(Observation, NoiselessAndDeterministic) {
    const DenseMatrix A = gen_matrix(MatrixKind::Gaussian, 32, 64, 1);
    const auto part = GroupPartition::uniform(16, 4);
    const Vector x = gen_ground_truth(part, 2, std::nullopt, 1);
    EXPECT_EQ(gen_observation(A, x, 0.0, 1), matvec(A, x));
    EXPECT_EQ(gen_observation(A, x, 0.01, 5), gen_observation(A, x, 0.01, 5));
    EXPECT_THROW(gen_observation(A, Vector(64, 0.0), 0.0, 1), NumericError);
}

TEST(Observation, NoiseNormConcentrates) {
    const std::size_t m = 512;
    const DenseMatrix A = DenseMatrix(m, 4, 1.0);
    const Vector x{1, 0, 0, 0};
    const Vector clean = matvec(A, x);
    std::size_t inside = 0;
    const double center = 0.001 * std::sqrt(static_cast<double>(m));
    for (std::uint64_t seed = 0; seed < 1000; ++seed) {
        const double nn = distance2(gen_observation(A, x, 0.001, seed), clean);
        inside += nn >= 0.7 * center && nn <= 1.3 * center;
    }
    EXPECT_GE(inside, 990u);
}

TEST(Bundle, RoundTrip) {
    InstanceSpec is;
    is.n = 64;
    is.m = 32;
    is.group_size = 8;
    is.nonzero_groups = 2;
    is.intra_group_nonzeros = 3;
    is.kind = MatrixKind::Bernoulli;
    is.seed = 11;
    const ProblemInstance inst = make_instance(is);
    const auto dir = std::filesystem::temp_directory_path() / "fits3_bundle_test";
    std::filesystem::remove_all(dir);
    write_bundle(dir, inst);
    const ProblemInstance back = read_bundle(dir);
    EXPECT_EQ(back.A, inst.A);
    EXPECT_EQ(back.b, inst.b);
    EXPECT_EQ(back.ground_truth, inst.ground_truth);
    EXPECT_EQ(back.part, inst.part);
    EXPECT_EQ(back.meta.kind, MatrixKind::Bernoulli);
    EXPECT_EQ(back.meta.seed, 11u);
    EXPECT_EQ(back.meta.intra_group_nonzeros, std::optional<std::size_t>(3));
    const auto meta = read_meta(dir / "meta");
    EXPECT_EQ(meta.at("m"), "32");
    EXPECT_EQ(meta.at("group_sizes"), inst.part.to_string());
    std::filesystem::remove_all(dir);
}

TEST(Bundle, MissingDirectoryAndMalformedFiles) {
    const auto dir = std::filesystem::temp_directory_path() / "fits3_bundle_bad";
    std::filesystem::remove_all(dir);
    EXPECT_THROW(read_bundle(dir), IoError);
    std::filesystem::create_directories(dir);
    io::write_atomic(dir / "A.csv", [](std::ostream& o) { o << "1,2\n3\n"; });
    EXPECT_THROW(io::read_matrix(dir / "A.csv"), IoError);
    io::write_atomic(dir / "b.csv", [](std::ostream& o) { o << "1\nabc\n"; });
    EXPECT_THROW(io::read_vector(dir / "b.csv"), IoError);
    EXPECT_FALSE(std::filesystem::exists(dir / "b.csv.tmp"));
    std::filesystem::remove_all(dir);
}
