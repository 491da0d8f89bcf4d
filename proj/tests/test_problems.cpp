#include "linrfm/problems.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <fstream>

#include "linrfm/spectral.hpp"
#include "support/oracles.hpp"

using namespace linrfm;

namespace {

std::string temp_path(const std::string& name) {
    return ::testing::TempDir() + "/" + name;
}

}  // namespace

TEST(GenSparseRegressionTest, SingleEntry) {
    const SparseRegressionProblem p = gen_sparse_regression(1, 1, 1, 7);
    EXPECT_TRUE(std::isfinite(p.design(0, 0)));
    ASSERT_TRUE(p.true_weights.has_value());
    EXPECT_GE((*p.true_weights)(0), 0.5);
    EXPECT_LE((*p.true_weights)(0), 1.0);
    EXPECT_NEAR(p.labels(0), p.design(0, 0) * (*p.true_weights)(0), 1e-14);
}

TEST(GenSparseRegressionTest, SupportSizeAndRange) {
    const SparseRegressionProblem p = gen_sparse_regression(50, 100, 5, 11);
    int nonzero = 0;
    for (int j = 0; j < 100; ++j) {
        const double w = (*p.true_weights)(j);
        if (w != 0.0) {
            ++nonzero;
            EXPECT_GE(w, 0.5);
            EXPECT_LE(w, 1.0);
            EXPECT_LT(j, 5);
        }
    }
    EXPECT_EQ(nonzero, 5);
    p.validate();
}

TEST(GenSparseRegressionTest, Deterministic) {
    const SparseRegressionProblem a = gen_sparse_regression(20, 30, 3, 99);
    const SparseRegressionProblem b = gen_sparse_regression(20, 30, 3, 99);
    EXPECT_EQ((a.design - b.design).norm(), 0.0);
    EXPECT_EQ((a.labels - b.labels).norm(), 0.0);
    EXPECT_EQ((*a.true_weights - *b.true_weights).norm(), 0.0);
}

TEST(GenLowRankCompletionTest, FullyObservedTinyCase) {
    const CompletionProblem p = gen_low_rank_completion(2, 2, 4, 5);
    EXPECT_EQ(p.observations.size(), 4u);
    ASSERT_TRUE(p.ground_truth.has_value());
    EXPECT_NEAR(p.ground_truth->norm(), 2.0, 1e-10);
}

TEST(GenLowRankCompletionTest, DegreesOfFreedomCount) {
    const int d = 100, r = 5;
    const int dof = 2 * d * r - r * r;
    EXPECT_EQ(dof, 975);
    const CompletionProblem p = gen_low_rank_completion(d, r, dof, 5);
    EXPECT_EQ(static_cast<int>(p.observations.size()), dof);
    p.validate();
}

TEST(GenLowRankCompletionTest, GroundTruthRank) {
    for (auto [d, r] : {std::pair{20, 3}, std::pair{40, 7}}) {
        const CompletionProblem p = gen_low_rank_completion(d, r, d * r, 17);
        const Eigen::VectorXd sigma = singular_values(*p.ground_truth);
        EXPECT_GT(sigma(r - 1), 1e-8);
        EXPECT_LT(sigma(r), 1e-8);
        EXPECT_NEAR(p.ground_truth->norm(), static_cast<double>(d), 1e-8 * d);
    }
}

TEST(GenLowRankCompletionTest, UniformMaskChiSquare) {
    // 10^5 draws of single observations over a 5x5 grid; chi-square against
    // the uniform law on 25 cells should not reject at p > 0.001
    // (critical value for 24 dof is 51.18).
    const int cells = 25;
    std::vector<long> counts(cells, 0);
    const long draws = 100000;
    for (long t = 0; t < draws; ++t) {
        const CompletionProblem p =
            gen_low_rank_completion(5, 1, 1, static_cast<std::uint64_t>(t + 1));
        ++counts[p.observations[0].row * 5 + p.observations[0].col];
    }
    const double expected = static_cast<double>(draws) / cells;
    double chi2 = 0.0;
    for (long c : counts) {
        chi2 += (c - expected) * (c - expected) / expected;
    }
    EXPECT_LT(chi2, 51.18);
}

TEST(AddLabelNoiseTest, ZeroSigmaLeavesProblemUnchanged) {
    const CompletionProblem p = gen_low_rank_completion(10, 2, 30, 3);
    const CompletionProblem noisy = add_label_noise(p, 0.0, 1);
    EXPECT_FALSE(noisy.noisy);
    for (std::size_t i = 0; i < p.observations.size(); ++i) {
        EXPECT_EQ(noisy.observations[i].value, p.observations[i].value);
    }
}

TEST(AddLabelNoiseTest, DeterministicAndFlagged) {
    const CompletionProblem p = gen_low_rank_completion(10, 2, 30, 3);
    const CompletionProblem a = add_label_noise(p, 0.1, 7);
    const CompletionProblem b = add_label_noise(p, 0.1, 7);
    EXPECT_TRUE(a.noisy);
    for (std::size_t i = 0; i < p.observations.size(); ++i) {
        EXPECT_EQ(a.observations[i].value, b.observations[i].value);
    }
    // Ground truth untouched.
    EXPECT_EQ((*a.ground_truth - *p.ground_truth).norm(), 0.0);
}

TEST(AddLabelNoiseTest, EmpiricalVariance) {
    const double sigma = 0.1;
    const CompletionProblem p = gen_low_rank_completion(100, 2, 10000, 3);
    const CompletionProblem noisy = add_label_noise(p, sigma, 21);
    double sum_sq = 0.0;
    for (std::size_t i = 0; i < p.observations.size(); ++i) {
        const double diff = noisy.observations[i].value - p.observations[i].value;
        sum_sq += diff * diff;
    }
    const double variance = sum_sq / static_cast<double>(p.observations.size());
    EXPECT_NEAR(variance, sigma * sigma, 0.2 * sigma * sigma);
}

TEST(TestMseTest, ExactEstimateGivesZero) {
    const CompletionProblem p = gen_low_rank_completion(8, 2, 20, 9);
    EXPECT_EQ(test_mse(*p.ground_truth, p), 0.0);
}

TEST(TestMseTest, ZeroEstimateIsMeanSquaredUnobservedTruth) {
    const CompletionProblem p = gen_low_rank_completion(6, 2, 10, 9);
    std::vector<std::vector<bool>> observed(6, std::vector<bool>(6, false));
    for (const Observation& obs : p.observations) observed[obs.row][obs.col] = true;
    double sum = 0.0;
    int count = 0;
    for (int i = 0; i < 6; ++i) {
        for (int j = 0; j < 6; ++j) {
            if (!observed[i][j]) {
                sum += (*p.ground_truth)(i, j) * (*p.ground_truth)(i, j);
                ++count;
            }
        }
    }
    EXPECT_NEAR(test_mse(Eigen::MatrixXd::Zero(6, 6), p), sum / count, 1e-12);
}

TEST(TestMseTest, MatchesDoubleLoopOracle) {
    const CompletionProblem p = gen_low_rank_completion(10, 3, 40, 13);
    const Eigen::MatrixXd estimate = linrfm::testing::random_gaussian(10, 10, 77);
    std::vector<std::vector<bool>> observed(10, std::vector<bool>(10, false));
    for (const Observation& obs : p.observations) observed[obs.row][obs.col] = true;
    double sum = 0.0;
    int count = 0;
    for (int i = 0; i < 10; ++i) {
        for (int j = 0; j < 10; ++j) {
            if (!observed[i][j]) {
                const double diff = estimate(i, j) - (*p.ground_truth)(i, j);
                sum += diff * diff;
                ++count;
            }
        }
    }
    EXPECT_NEAR(test_mse(estimate, p), sum / count, 1e-12);
}

TEST(TestMseTest, RegressionHeldOutIsConcentratedSquaredError) {
    const SparseRegressionProblem p = gen_sparse_regression(30, 50, 4, 15);
    Eigen::VectorXd w = *p.true_weights;
    w(0) += 0.3;  // known error vector
    // For standard Gaussian x, E (x^T diff)^2 = ||diff||^2.
    const double mse = test_mse(w, p, 20000);
    EXPECT_NEAR(mse, 0.09, 0.09 * 0.1);
    EXPECT_EQ(test_mse(*p.true_weights, p), 0.0);
}

TEST(TestMseTest, MissingGroundTruthThrows) {
    CompletionProblem p = gen_low_rank_completion(5, 1, 5, 2);
    p.ground_truth.reset();
    EXPECT_THROW(test_mse(Eigen::MatrixXd::Zero(5, 5), p), MissingGroundTruth);
}

TEST(ProblemIoTest, CompletionRoundTrip) {
    const CompletionProblem p =
        add_label_noise(gen_low_rank_completion(7, 2, 20, 31), 0.05, 4);
    const std::string path = temp_path("completion.txt");
    save_problem(p, path);
    const Problem loaded = load_problem(path);
    const auto& q = std::get<CompletionProblem>(loaded);
    EXPECT_EQ(q.d1, p.d1);
    EXPECT_EQ(q.d2, p.d2);
    EXPECT_TRUE(q.noisy);
    EXPECT_EQ(q.rank_hint, p.rank_hint);
    ASSERT_EQ(q.observations.size(), p.observations.size());
    for (std::size_t i = 0; i < p.observations.size(); ++i) {
        EXPECT_EQ(q.observations[i].row, p.observations[i].row);
        EXPECT_EQ(q.observations[i].col, p.observations[i].col);
        EXPECT_EQ(q.observations[i].value, p.observations[i].value);
    }
    ASSERT_TRUE(q.ground_truth.has_value());
    EXPECT_EQ((*q.ground_truth - *p.ground_truth).norm(), 0.0);
}

TEST(ProblemIoTest, RegressionRoundTrip) {
    const SparseRegressionProblem p = gen_sparse_regression(12, 9, 3, 8);
    const std::string path = temp_path("regression.txt");
    save_problem(p, path);
    const Problem loaded = load_problem(path);
    const auto& q = std::get<SparseRegressionProblem>(loaded);
    EXPECT_EQ((q.design - p.design).norm(), 0.0);
    EXPECT_EQ((q.labels - p.labels).norm(), 0.0);
    EXPECT_EQ((*q.true_weights - *p.true_weights).norm(), 0.0);
    EXPECT_EQ(q.sparsity, p.sparsity);
}

TEST(ProblemIoTest, TruncatedFileThrows) {
    const CompletionProblem p = gen_low_rank_completion(5, 1, 10, 2);
    const std::string path = temp_path("truncated.txt");
    save_problem(p, path);
    std::ifstream in(path);
    std::string contents((std::istreambuf_iterator<char>(in)), {});
    in.close();
    std::ofstream out(path);
    out << contents.substr(0, contents.size() / 2);
    out.close();
    EXPECT_THROW(load_problem(path), FormatError);
}

TEST(ProblemIoTest, DuplicateCoordinateThrows) {
    const std::string path = temp_path("duplicate.txt");
    std::ofstream out(path);
    out << "completion 3 3 2\n0 1 0.5\n0 1 0.25\n";
    out.close();
    EXPECT_THROW(load_problem(path), FormatError);
}

TEST(ProblemIoTest, OutOfRangeIndexThrows) {
    const std::string path = temp_path("range.txt");
    std::ofstream out(path);
    out << "completion 3 3 1\n0 7 0.5\n";
    out.close();
    EXPECT_THROW(load_problem(path), FormatError);
}

TEST(ProblemIoTest, MissingFileThrows) {
    EXPECT_THROW(load_problem(temp_path("missing_file.txt")), IoError);
}
