#pragma once

#include <Eigen/Dense>

#include "linrfm/lin_rfm.hpp"

namespace linrfm {

struct IrlsConfig {
    double p = 1.0;  // may be negative
    double eps0 = 1e-3;
    enum class Schedule { Constant, Geometric };
    Schedule schedule = Schedule::Constant;
    double ratio = 1.0;  // geometric decay factor, in (0, 1]
    int max_iters = 10000;
    double tol = 1e-10;
    double ridge = 1e-10;

    void validate() const {
        if (eps0 <= 0.0) throw ConfigError("IrlsConfig: eps0 must be > 0");
        if (ratio <= 0.0 || ratio > 1.0) throw ConfigError("IrlsConfig: ratio must be in (0, 1]");
    }
};

struct IrlsState {
    Eigen::MatrixXd X;
    SymmetricMatrix P;
    double eps_t = 0.0;
    int t = 0;
};

IrlsState irls_init(const LinearMeasurements& meas, const IrlsConfig& cfg);

// Weight update P from the previous iterate, then the weighted interpolation
// min Tr(P X^T X) via the substitution X = W P^{-1/2}.
IrlsState irls_step(const IrlsState& state, const LinearMeasurements& meas,
                    const IrlsConfig& cfg);

struct IrlsRunResult {
    IrlsState state;
    bool converged = false;
    bool diverged = false;
    int iterations = 0;
    Trace trace;
};

IrlsRunResult irls_run(const LinearMeasurements& meas, const IrlsConfig& cfg);
IrlsRunResult irls_run(const CompletionProblem& p, const IrlsConfig& cfg);

// Runs lin-RFM with phi = Power{alpha, eps} and IRLS-p with p = 2 - 4 alpha
// side by side (constant eps schedule, no observed-entry enforcement) and
// returns the largest relative deviation between X_t and Z_t and between P_t
// and M_t^{-2} over the first `iters` iterates.
double rfm_irls_equivalence_check(const CompletionProblem& problem, double alpha, double eps,
                                  int iters, double ridge = 1e-10);

}  // namespace linrfm
