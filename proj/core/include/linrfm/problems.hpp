#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "linrfm/common.hpp"

namespace linrfm {

struct Observation {
    int row = 0;
    int col = 0;
    double value = 0.0;
};

// Matrix completion instance: observed entries of a d1 x d2 matrix.
struct CompletionProblem {
    int d1 = 0;
    int d2 = 0;
    std::vector<Observation> observations;
    std::optional<Eigen::MatrixXd> ground_truth;
    std::optional<int> rank_hint;
    bool noisy = false;
    // Not serialized; used to derive evaluation streams deterministically.
    std::uint64_t seed = 0;

    // Throws InvalidDims / FormatError on out-of-range or duplicate coordinates,
    // or observation values inconsistent with a clean ground truth.
    void validate() const;
    Eigen::VectorXd observed_values() const;
};

// General matrix sensing: y_i = <A_i, Y> for dense sensing matrices A_i.
struct SensingProblem {
    std::vector<Eigen::MatrixXd> sensing_matrices;
    Eigen::VectorXd labels;
    std::optional<Eigen::MatrixXd> ground_truth;
    bool noisy = false;
    std::uint64_t seed = 0;

    void validate() const;
};

struct SparseRegressionProblem {
    Eigen::MatrixXd design;  // n x d
    Eigen::VectorXd labels;  // n
    std::optional<Eigen::VectorXd> true_weights;
    std::optional<int> sparsity;
    bool noisy = false;
    std::uint64_t seed = 0;

    void validate() const;
    int n() const { return static_cast<int>(design.rows()); }
    int d() const { return static_cast<int>(design.cols()); }
};

// Rows of X i.i.d. standard Gaussian; w*_i ~ U[0.5, 1] for i < r, 0 otherwise;
// y = X w*.
SparseRegressionProblem gen_sparse_regression(int n, int d, int r, std::uint64_t seed);

// Y = (d / ||U V^T||_F) U V^T with U, V Gaussian d x r; n_obs coordinates
// sampled uniformly without replacement.
CompletionProblem gen_low_rank_completion(int d, int r, int n_obs, std::uint64_t seed);

// Gaussian sensing matrices A_i with i.i.d. N(0, 1) entries against a given
// ground truth.
SensingProblem gen_gaussian_sensing(const Eigen::MatrixXd& ground_truth, int n_measurements,
                                    std::uint64_t seed);

// Adds independent N(0, sigma^2) noise to every observed value / label.
// Ground truth is left untouched and the problem is flagged noisy.
CompletionProblem add_label_noise(const CompletionProblem& p, double sigma, std::uint64_t seed);
SparseRegressionProblem add_label_noise(const SparseRegressionProblem& p, double sigma,
                                        std::uint64_t seed);

// Mean squared error over unobserved coordinates against the clean ground truth.
double test_mse(const Eigen::MatrixXd& estimate, const CompletionProblem& p);

// Mean of (x^T w_hat - x^T w*)^2 over a held-out standard Gaussian design,
// regenerated deterministically from the problem seed on a disjoint stream.
double test_mse(const Eigen::VectorXd& weights, const SparseRegressionProblem& p,
                int test_size = 10000);

using Problem = std::variant<CompletionProblem, SparseRegressionProblem>;

void save_problem(const CompletionProblem& p, const std::string& path);
void save_problem(const SparseRegressionProblem& p, const std::string& path);
Problem load_problem(const std::string& path);

}  // namespace linrfm
