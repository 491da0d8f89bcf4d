#pragma once

#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "linrfm/baselines.hpp"
#include "linrfm/problems.hpp"
#include "linrfm/trace.hpp"

namespace linrfm {

enum class Method { LinRfm, SvdFree, DeepRfm, Irls, LinearNet, DiagNet, L1, Nuclear };

std::string method_name(Method m);
Method parse_method(const std::string& name);  // throws ConfigError

// Everything needed to run one solver on one problem instance.
struct MethodSpec {
    Method method = Method::SvdFree;

    // lin_rfm / diagonal lin-RFM
    double alpha = 0.5;
    double epsilon = 0.0;

    // svd_free: phi(s) = s^{k/2}; a non-empty grid selects the best ridge by
    // test MSE, mirroring the grid-search protocol.
    int alpha_numerator = 1;
    std::vector<double> ridge_grid;

    // deep_rfm
    std::vector<double> alphas;

    // irls
    double p = 0.0;
    double eps0 = 1e-3;

    // linear_net / diag_net
    int depth = 3;
    TrainConfig::Optimizer optimizer = TrainConfig::Optimizer::RMSProp;
    double lr = 1e-3;
    long steps = 100000;

    // shared solver knobs
    double ridge = 1e-10;
    int max_iters = 2000;
    double tol = 1e-9;
    double early_stop_mse = 0.0;

    std::string label() const;  // method name plus the defining parameter
};

struct SweepConfig {
    enum class Kind { Completion, Regression };
    Kind kind = Kind::Completion;
    int d = 100;
    int r = 5;
    double noise_sigma = 0.0;
    std::vector<int> n_grid;  // empty selects the default grid
    std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
    double success_threshold = 1e-3;
    int threads = 0;  // 0 picks hardware concurrency
    std::vector<MethodSpec> methods;
};

struct CellResult {
    std::string method;
    int n = 0;
    std::uint64_t seed = 0;
    double test_mse = 0.0;
    double wall_ms = 0.0;
    long iterations = 0;
};

struct MethodSummary {
    std::string method;
    std::optional<int> threshold_n;  // smallest grid n with all seeds below threshold
};

struct SweepResult {
    std::vector<CellResult> cells;  // ordered by (method, n, seed)
    std::vector<MethodSummary> summaries;
    int degrees_of_freedom = 0;
};

// Degrees-of-freedom start (2dr - r^2 for completion), multiplicative 1.15
// steps, capped at d^2 (completion) or at a small multiple of d (regression).
std::vector<int> default_n_grid(SweepConfig::Kind kind, int d, int r);

int degrees_of_freedom(int d, int r);

struct SolveOutcome {
    double test_mse = 0.0;
    double wall_ms = 0.0;
    long iterations = 0;
    Eigen::MatrixXd estimate;       // completion estimates
    Eigen::VectorXd weight_vector;  // regression estimates
    Trace trace;
};

SolveOutcome solve_method(const MethodSpec& spec, const CompletionProblem& p);
SolveOutcome solve_method(const MethodSpec& spec, const SparseRegressionProblem& p);

// Deterministic problem instance for a sweep cell.
CompletionProblem cell_completion_problem(const SweepConfig& cfg, int n, std::uint64_t seed);
SparseRegressionProblem cell_regression_problem(const SweepConfig& cfg, int n,
                                                std::uint64_t seed);

// Runs every (method, n, seed) cell on a small worker pool with deterministic
// per-cell streams. When `live` is given, finished rows are flushed to it in
// deterministic order as they complete.
SweepResult run_sweep(const SweepConfig& cfg, std::ostream* live = nullptr);

// Long-form data: method,d,r,n,seed,test_mse,wall_ms
void write_sweep_csv(std::ostream& out, const SweepResult& result, int d, int r);
void write_sweep_row(std::ostream& out, const CellResult& cell, int d, int r);
// Summary: method,threshold_n (empty field when no grid point succeeded)
void write_summary_csv(std::ostream& out, const SweepResult& result);

// Static SVG plot of MSE-vs-n curves with the degrees-of-freedom reference.
void write_sweep_plot_svg(std::ostream& out, const SweepResult& result, int d, int r,
                          double threshold);

}  // namespace linrfm
