#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>

#include "linrfm/measurements.hpp"
#include "linrfm/spectral.hpp"
#include "linrfm/trace.hpp"

namespace linrfm {

struct RfmConfig {
    SpectralFunction phi = SpectralFunction::identity();
    int max_iters = 10000;
    double tol = 1e-10;    // relative Frobenius change of Z_t
    double ridge = 1e-10;  // added to the Gram system in the interpolation solve
    // Overwrite observed coordinates of Z with training values before each
    // AGOP update. Applies to completion problems only.
    bool enforce_observed = true;
    // Run exactly max_iters iterations instead of stopping on tol.
    bool fixed_iterations = false;
    // When set, the trace gains a test_mse column evaluated on each iterate.
    std::function<double(const Eigen::MatrixXd&)> mse_eval;
};

struct RfmState {
    SymmetricMatrix M;  // filter the current W was fit against
    Eigen::MatrixXd W;
    Eigen::MatrixXd Z;  // W * M, observed entries enforced when configured
    int t = 0;
};

struct FixedPointCertificate {
    Eigen::VectorXd multipliers;
    double stationarity_residual = 0.0;  // ||G + A*(lambda)||_F
    double stationarity_relative = 0.0;  // above divided by ||G||_F
    double feasibility_residual = 0.0;   // ||A(Z) - y||_2
    double objective_value = 0.0;        // sum_j psi(sigma_j(Z))
};

struct MinFrobResult {
    Eigen::MatrixXd w;
    Eigen::VectorXd gamma;  // dual coefficients, one per measurement
};

// Minimum-Frobenius-norm W subject to <A_i M, W> = y_i, solved through the
// n x n Gram system G_ij = tr(A_i^T A_j M^2) (block-diagonal per row for
// completion problems). ridge > 0 adds ridge * I to the Gram system.
MinFrobResult min_frob_interpolate(const LinearMeasurements& meas, const SymmetricMatrix& m,
                                   double ridge);

// Same with an arbitrary d2 x d2 right factor B: constraints <A_i B, W> = y_i,
// Gram G_ij = tr(A_i^T A_j B B^T). Used by deep lin-RFM filter products.
MinFrobResult min_frob_interpolate_general(const LinearMeasurements& meas,
                                           const Eigen::MatrixXd& b, double ridge);

// Initial state: fit against init_m (identity by default).
RfmState lin_rfm_init(const LinearMeasurements& meas, const RfmConfig& cfg,
                      const std::optional<SymmetricMatrix>& init_m = std::nullopt);

// One iteration: AGOP filter update from the current predictor, then refit.
RfmState lin_rfm_step(const RfmState& state, const LinearMeasurements& meas,
                      const RfmConfig& cfg);

struct RfmRunResult {
    RfmState state;
    bool converged = false;
    bool diverged = false;  // iterates left the finite range
    int iterations = 0;
    Trace trace;
};

RfmRunResult lin_rfm_run(const LinearMeasurements& meas, const RfmConfig& cfg,
                         const std::optional<SymmetricMatrix>& init_m = std::nullopt);
RfmRunResult lin_rfm_run(const CompletionProblem& p, const RfmConfig& cfg,
                         const std::optional<SymmetricMatrix>& init_m = std::nullopt);
RfmRunResult lin_rfm_run(const SensingProblem& p, const RfmConfig& cfg,
                         const std::optional<SymmetricMatrix>& init_m = std::nullopt);

struct DiagRfmResult {
    Eigen::VectorXd weights;  // effective predictor w_t .* m_t
    bool converged = false;
    int iterations = 0;
    Trace trace;
};

// Element-wise specialization for sparse regression: m_0 = 1,
// w_t = argmin ||w|| s.t. X (w .* m_t) = y, m_{t+1} = phi(w_t^2 .* m_t^2).
DiagRfmResult diag_rfm_run(const SparseRegressionProblem& p, const RfmConfig& cfg);

// psi(s) = int_0^r s / phi(s^2)^2 ds with psi(0) = 0. Closed forms for power
// maps; throws DivergentIntegral when the normalized antiderivative does not
// exist (epsilon = 0 with alpha >= 1/2 at s > 0).
double psi_eval(double s, const SpectralFunction& phi);

// psi'(r) = r / phi(r^2)^2.
double psi_derivative(double r, const SpectralFunction& phi);

// sum_j psi(sigma_j(Z)); falls back to the offset-free antiderivative when the
// psi(0) = 0 normalization diverges. Diagnostic use (trace objective column).
double spectral_objective(const Eigen::MatrixXd& z, const SpectralFunction& phi);

// KKT certificate for the fixed-point objective: G = 2 Z phi(Z^T Z)^{-2},
// lambda fit by least squares against the measurement adjoint.
FixedPointCertificate fixed_point_residual(const Eigen::MatrixXd& z,
                                           const LinearMeasurements& meas,
                                           const SpectralFunction& phi);

// Same machinery with an arbitrary gradient G (deep lin-RFM objective).
FixedPointCertificate fixed_point_residual_for_gradient(const Eigen::MatrixXd& z,
                                                        const Eigen::MatrixXd& gradient,
                                                        const LinearMeasurements& meas);

}  // namespace linrfm
