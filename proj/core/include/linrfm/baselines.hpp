#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "linrfm/measurements.hpp"
#include "linrfm/trace.hpp"

namespace linrfm {

// Depth-L linear network f(A) = <A, W^(L) ... W^(1)> with optimizer state.
struct LinearNet {
    std::vector<Eigen::MatrixXd> weights;  // W^(1) .. W^(L)

    int depth() const { return static_cast<int>(weights.size()); }
    Eigen::MatrixXd end_to_end() const;
    void check_shapes() const;  // throws ShapeMismatch on incomposable layers
};

struct TrainConfig {
    enum class Optimizer { GD, RMSProp };
    Optimizer optimizer = Optimizer::GD;
    double lr = 1e-3;
    double rms_decay = 0.9;
    double rms_stabilizer = 1e-8;
    long steps = 10000;
    double early_stop_mse = 0.0;  // 0 disables early stopping
    int eval_every = 100;
    double divergence_threshold = 1e12;
    bool track_defects = false;  // balancedness / NFA columns in the trace
};

// Weights with W^(l) W^(l)T = W^(l+1)T W^(l+1) exactly at init; the end-to-end
// product equals scale times a standard Gaussian d1 x d2 draw.
LinearNet balanced_init(int depth, int d1, int d2, int width, double scale, std::uint64_t seed);

// i.i.d. N(0, std^2) entries everywhere.
LinearNet gaussian_init(int depth, int d1, int d2, int width, double std_dev,
                        std::uint64_t seed);

// Default completion-experiment init scale (0.001)^(1/L) * d^(-1/2).
double default_net_init_std(int depth, int d);

struct NetTrainResult {
    LinearNet net;
    Trace trace;  // step, loss[, test_mse][, bal_defect, nfa_defect_max]
    bool early_stopped = false;
    long steps_run = 0;
};

// Full-batch training on the loss 0.5 * sum_i (y_i - <A_i, W^(L)...W^(1)>)^2
// with hand-derived layer gradients. Throws Divergence past the loss guard.
NetTrainResult train_linear_net(const LinearMeasurements& meas, LinearNet net,
                                const TrainConfig& cfg,
                                const std::function<double(const Eigen::MatrixXd&)>& mse_eval = {});

// Layer gradients of the loss above; exposed for finite-difference checks.
std::vector<Eigen::MatrixXd> linear_net_gradients(const LinearMeasurements& meas,
                                                  const LinearNet& net);

// max_l || W^(l) W^(l)T - W^(l+1)T W^(l+1) ||_F
double balancedness_defect(const LinearNet& net);

// Relative Frobenius distance between W^(l)T W^(l) and the layer-l AGOP raised
// to 1/(L - l + 1). Exactly zero at l = L. Layers are 1-based.
double nfa_defect(const LinearNet& net, int layer);

struct DiagNetTrainResult {
    Eigen::VectorXd weights;  // effective predictor, the Hadamard product
    std::vector<Eigen::VectorXd> layers;
    Trace trace;
    bool early_stopped = false;
    long steps_run = 0;
};

// Linear diagonal network f(x) = x^T (u_L .* ... .* u_1) trained by gradient
// descent on half mean square loss from i.i.d. N(0, init_std^2) weights.
DiagNetTrainResult train_diag_net(const SparseRegressionProblem& p, int depth,
                                  const TrainConfig& cfg, double init_std = 1e-5,
                                  std::uint64_t seed = 0);

Eigen::VectorXd diag_net_gradient(const SparseRegressionProblem& p,
                                  const std::vector<Eigen::VectorXd>& layers, int layer);

// min ||w||_1 s.t. X w = y by ADMM with exact affine projection and
// soft-thresholding. Returns the feasible iterate.
Eigen::VectorXd l1_min(const SparseRegressionProblem& p, double tol = 1e-8,
                       long max_iters = 200000, double rho = 1.0);

// min ||Z||_* s.t. Z_Omega = Y_Omega by Douglas-Rachford splitting between
// singular-value soft-thresholding and the observation-consistency projection.
Eigen::MatrixXd nuclear_norm_min(const CompletionProblem& p, double tol = 1e-7,
                                 long max_iters = 100000, double step = 1.0);

}  // namespace linrfm
