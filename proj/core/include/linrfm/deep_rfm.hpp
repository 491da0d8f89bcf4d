#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "linrfm/lin_rfm.hpp"

namespace linrfm {

struct DeepRfmConfig {
    std::vector<double> alphas;  // alpha_1 .. alpha_L, layer exponents
    double epsilon = 1e-6;
    int max_iters = 1000;
    double tol = 1e-10;
    double ridge = 1e-10;
    bool enforce_observed = true;
    std::function<double(const Eigen::MatrixXd&)> mse_eval;

    void validate() const;
    int depth() const { return static_cast<int>(alphas.size()); }
};

struct DeepRfmState {
    Eigen::MatrixXd W;
    std::vector<SymmetricMatrix> filters;  // M^(1) .. M^(L)
    Eigen::MatrixXd Z;                     // W M^(L) ... M^(1), enforced when configured
    int t = 0;
};

// C_l = alpha_l * prod_{j<l} (1 - 2 alpha_j); the per-layer limit exponents of
// the depth-L fixed-point objective.
Eigen::VectorXd c_coefficients(const std::vector<double>& alphas);

// True when C_l > 0 for all l and sum_l C_l < 1/2 (the conditions under which
// the epsilon -> 0 limit claims hold).
bool deep_limit_preconditions_ok(const std::vector<double>& alphas);

// Filter spectral maps at singular value s:
// h_1(s) = (s^2 + eps)^{a_1}, h_l(s) = (s^2 h_1^{-2} ... h_{l-1}^{-2} + eps)^{a_l}.
Eigen::VectorXd h_recursion(double s, const std::vector<double>& alphas, double epsilon);

// Depth-L penalty with psi(0) = 0, normalized so that as eps -> 0 it tends to
// r^{2 - 4 sum_l C_l}: (2 - 4 sum C) * int_0^r s * prod_l h_l(s)^{-2} ds,
// evaluated by adaptive quadrature.
double psi_eps_eval(double r, const std::vector<double>& alphas, double epsilon);

// Analytic derivative of psi_eps_eval.
double psi_eps_deriv(double r, const std::vector<double>& alphas, double epsilon);

struct DeepRfmRunResult {
    DeepRfmState state;
    bool converged = false;
    bool diverged = false;
    int iterations = 0;
    bool limit_preconditions_met = false;
    Trace trace;  // iter, objective, z_change, feasibility[, test_mse], cond_1..cond_L
};

DeepRfmState deep_lin_rfm_init(const LinearMeasurements& meas, const DeepRfmConfig& cfg);
DeepRfmState deep_lin_rfm_step(const DeepRfmState& state, const LinearMeasurements& meas,
                               const DeepRfmConfig& cfg);

DeepRfmRunResult deep_lin_rfm_run(const LinearMeasurements& meas, const DeepRfmConfig& cfg);
DeepRfmRunResult deep_lin_rfm_run(const CompletionProblem& p, const DeepRfmConfig& cfg);
DeepRfmRunResult deep_lin_rfm_run(const SensingProblem& p, const DeepRfmConfig& cfg);

// KKT certificate against the depth-L objective, gradient through the
// singular-value map psi_eps'.
FixedPointCertificate deep_fixed_point_residual(const Eigen::MatrixXd& z,
                                                const LinearMeasurements& meas,
                                                const std::vector<double>& alphas,
                                                double epsilon);

}  // namespace linrfm
