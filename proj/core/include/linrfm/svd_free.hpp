#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "linrfm/problems.hpp"
#include "linrfm/spectral.hpp"
#include "linrfm/trace.hpp"

namespace linrfm {

// SVD-free lin-RFM specialization for matrix completion with phi(s) = s^{k/2}.
// Tracks M_t^2 when k is odd (true half-integer power) and M_t itself when k
// is even, so every update is a matrix product.
struct SvdFreeState {
    Eigen::MatrixXd tracked;
    int alpha_numerator = 1;  // k
    Eigen::VectorXd gamma;    // dual coefficients in measurement order
    Eigen::MatrixXd reconstruction;
    int t = 0;
    Eigen::Index max_row_block = 0;  // largest per-row system factored so far

    bool tracks_square() const { return alpha_numerator % 2 == 1; }
    // Current M_t^2 under either tracking convention.
    Eigen::MatrixXd msq() const { return tracks_square() ? tracked : tracked * tracked; }
};

SvdFreeState svdfree_init(const CompletionProblem& p, int alpha_numerator);

// One independent linear system per row: Gram is Msq restricted to the row's
// observed columns.
struct RowSystem {
    int row = 0;
    std::vector<int> cols;
    Eigen::VectorXd values;
    Eigen::MatrixXd gram;
};

std::vector<RowSystem> build_row_systems(const CompletionProblem& p, const Eigen::MatrixXd& msq);

// Solves (G_i + ridge I) gamma_i = y_i row by row; no global n x n system is
// formed. Updates state.gamma and the row-block instrumentation.
void solve_gamma(SvdFreeState& state, const CompletionProblem& p, double ridge);

// Z = sum_j gamma_j A_j Msq assembled row-wise; observed entries overwritten
// with training values when enforce is set.
Eigen::MatrixXd reconstruct(const SvdFreeState& state, const CompletionProblem& p,
                            bool enforce = true);

// AGOP update by matrix multiplication only. Without enforcement this is
// S = Msq (G^T G) Msq with G = sum_j gamma_j A_j accumulated sparsely; with
// enforcement the AGOP of the enforced reconstruction is used instead.
SvdFreeState msq_update(const SvdFreeState& state, const CompletionProblem& p,
                        bool enforce = true);

struct SvdFreeRunResult {
    SvdFreeState state;
    Eigen::MatrixXd estimate;
    bool converged = false;
    bool diverged = false;
    int iterations = 0;
    Trace trace;  // iter, wall_ms, recon_change[, test_mse]
};

SvdFreeRunResult svdfree_run(const CompletionProblem& p, int alpha_numerator, double ridge,
                             int max_iters = 10000, double tol = 1e-10, bool enforce = true,
                             const std::function<double(const Eigen::MatrixXd&)>& mse_eval = {});

}  // namespace linrfm
