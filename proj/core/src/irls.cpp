#include "linrfm/irls.hpp"

#include <cmath>
#include <limits>

namespace linrfm {

namespace {

// Weighted interpolant: min Tr(P X^T X) s.t. A(X) = y, through X = W M with
// M = P^{-1/2}.
Eigen::MatrixXd weighted_interpolant(const LinearMeasurements& meas, const SymmetricMatrix& m,
                                     double ridge) {
    MinFrobResult fit = min_frob_interpolate(meas, m, ridge);
    return fit.w * m.m();
}

double advance_eps(const IrlsConfig& cfg, double eps) {
    return cfg.schedule == IrlsConfig::Schedule::Geometric ? eps * cfg.ratio : eps;
}

}  // namespace

IrlsState irls_init(const LinearMeasurements& meas, const IrlsConfig& cfg) {
    cfg.validate();
    IrlsState state{Eigen::MatrixXd(), SymmetricMatrix::identity(meas.cols()), cfg.eps0, 0};
    // P_0 = I, so Step 1 is the plain minimum-Frobenius interpolant.
    state.X = weighted_interpolant(meas, state.P, cfg.ridge);
    return state;
}

IrlsState irls_step(const IrlsState& state, const LinearMeasurements& meas,
                    const IrlsConfig& cfg) {
    // One eigendecomposition of X^T X feeds both the weight matrix
    // P' = (X^T X + eps I)^{p/2 - 1} and the substitution filter
    // P'^{-1/2} = (X^T X + eps I)^{(2 - p)/4}. Decomposing P' itself would
    // square its condition number and lose the small weights for negative p.
    SymmetricMatrix gram(state.X.transpose() * state.X);
    const EigenDecomposition eig = eigen_decompose(gram);
    const Eigen::Index n = eig.eigenvalues.size();
    Eigen::VectorXd weight_eigs(n), filter_eigs(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double s = std::max(eig.eigenvalues(i), 0.0) + state.eps_t;
        weight_eigs(i) = std::pow(s, 0.5 * cfg.p - 1.0);
        filter_eigs(i) = std::pow(s, 0.25 * (2.0 - cfg.p));
    }
    SymmetricMatrix weight(eig.eigenvectors * weight_eigs.asDiagonal() *
                           eig.eigenvectors.transpose());
    SymmetricMatrix filter(eig.eigenvectors * filter_eigs.asDiagonal() *
                           eig.eigenvectors.transpose());

    IrlsState next{Eigen::MatrixXd(), std::move(weight), advance_eps(cfg, state.eps_t),
                   state.t + 1};
    next.X = weighted_interpolant(meas, filter, cfg.ridge);
    return next;
}

IrlsRunResult irls_run(const LinearMeasurements& meas, const IrlsConfig& cfg) {
    IrlsRunResult out;
    out.trace.columns = {"iter", "objective", "z_change", "feasibility"};
    const SpectralFunction phi = SpectralFunction::power(0.25 * (2.0 - cfg.p), cfg.eps0);

    IrlsState state = irls_init(meas, cfg);
    out.trace.add_row({0.0, spectral_objective(state.X, phi),
                       std::numeric_limits<double>::quiet_NaN(),
                       (meas.apply(state.X) - meas.labels()).norm()});
    for (int iter = 1; iter <= cfg.max_iters; ++iter) {
        if (state.X.norm() > 1e15) {
            out.diverged = true;
            break;
        }
        IrlsState next = irls_step(state, meas, cfg);
        if (!next.X.allFinite()) {
            out.diverged = true;
            break;
        }
        const double denom = state.X.norm();
        const double change =
            denom > 0.0 ? (next.X - state.X).norm() / denom : (next.X - state.X).norm();
        state = std::move(next);
        out.trace.add_row({static_cast<double>(iter), spectral_objective(state.X, phi), change,
                           (meas.apply(state.X) - meas.labels()).norm()});
        out.iterations = iter;
        if (change < cfg.tol) {
            out.converged = true;
            break;
        }
    }
    out.state = std::move(state);
    return out;
}

IrlsRunResult irls_run(const CompletionProblem& p, const IrlsConfig& cfg) {
    return irls_run(LinearMeasurements(p), cfg);
}

double rfm_irls_equivalence_check(const CompletionProblem& problem, double alpha, double eps,
                                  int iters, double ridge) {
    LinearMeasurements meas(problem);

    RfmConfig rfm_cfg;
    rfm_cfg.phi = SpectralFunction::power(alpha, eps);
    rfm_cfg.ridge = ridge;
    rfm_cfg.enforce_observed = false;

    IrlsConfig irls_cfg;
    irls_cfg.p = 2.0 - 4.0 * alpha;
    irls_cfg.eps0 = eps;
    irls_cfg.schedule = IrlsConfig::Schedule::Constant;
    irls_cfg.ridge = ridge;

    RfmState rfm = lin_rfm_init(meas, rfm_cfg);
    IrlsState irls = irls_init(meas, irls_cfg);

    double worst = 0.0;
    for (int t = 0; t < iters; ++t) {
        const double dz = (irls.X - rfm.Z).norm() / std::max(1e-300, rfm.Z.norm());
        const SymmetricMatrix m_inv_sq = spectral_apply(rfm.M, [](double s) {
            if (s <= 0.0) throw NonPsdInput("equivalence check: singular filter");
            return 1.0 / (s * s);
        });
        const double dp = (irls.P.m() - m_inv_sq.m()).norm() / std::max(1e-300, m_inv_sq.m().norm());
        worst = std::max(worst, std::max(dz, dp));
        rfm = lin_rfm_step(rfm, meas, rfm_cfg);
        irls = irls_step(irls, meas, irls_cfg);
    }
    return worst;
}

}  // namespace linrfm
