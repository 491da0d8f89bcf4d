#include "linrfm/deep_rfm.hpp"

#include <Eigen/LU>
#include <Eigen/SVD>
#include <cmath>
#include <limits>

#include "linrfm/quadrature.hpp"

namespace linrfm {

void DeepRfmConfig::validate() const {
    if (alphas.empty()) throw ConfigError("DeepRfmConfig: need at least one layer exponent");
    for (double a : alphas) {
        if (a <= 0.0) throw ConfigError("DeepRfmConfig: layer exponents must be > 0");
    }
    if (epsilon <= 0.0) throw ConfigError("DeepRfmConfig: epsilon must be > 0");
}

Eigen::VectorXd c_coefficients(const std::vector<double>& alphas) {
    const auto depth = static_cast<Eigen::Index>(alphas.size());
    Eigen::VectorXd c(depth);
    double prefix = 1.0;  // prod_{j<l} (1 - 2 alpha_j), empty product = 1
    for (Eigen::Index l = 0; l < depth; ++l) {
        c(l) = alphas[l] * prefix;
        prefix *= 1.0 - 2.0 * alphas[l];
    }
    return c;
}

bool deep_limit_preconditions_ok(const std::vector<double>& alphas) {
    const Eigen::VectorXd c = c_coefficients(alphas);
    return (c.array() > 0.0).all() && c.sum() < 0.5;
}

Eigen::VectorXd h_recursion(double s, const std::vector<double>& alphas, double epsilon) {
    if (s < 0.0) throw ConfigError("h_recursion: s must be >= 0");
    if (epsilon <= 0.0) throw ConfigError("h_recursion: epsilon must be > 0");
    const auto depth = static_cast<Eigen::Index>(alphas.size());
    Eigen::VectorXd h(depth);
    double filtered_sq = s * s;  // s^2 h_1^{-2} ... h_{l-1}^{-2}
    for (Eigen::Index l = 0; l < depth; ++l) {
        h(l) = std::pow(filtered_sq + epsilon, alphas[l]);
        filtered_sq /= h(l) * h(l);
    }
    return h;
}

namespace {

double psi_integrand(double s, const std::vector<double>& alphas, double epsilon) {
    const Eigen::VectorXd h = h_recursion(s, alphas, epsilon);
    double value = s;
    for (Eigen::Index l = 0; l < h.size(); ++l) value /= h(l) * h(l);
    return value;
}

}  // namespace

double psi_eps_eval(double r, const std::vector<double>& alphas, double epsilon) {
    if (r < 0.0) throw ConfigError("psi_eps_eval: r must be >= 0");
    if (r == 0.0) return 0.0;
    const double scale = 2.0 - 4.0 * c_coefficients(alphas).sum();
    const double integral = integrate(
        [&alphas, epsilon](double s) { return psi_integrand(s, alphas, epsilon); }, 0.0, r,
        1e-10);
    return scale * integral;
}

double psi_eps_deriv(double r, const std::vector<double>& alphas, double epsilon) {
    const double scale = 2.0 - 4.0 * c_coefficients(alphas).sum();
    return scale * psi_integrand(r, alphas, epsilon);
}

namespace {

// M^(L) ... M^(1) applied as the right factor of the predictor has transpose
// B = M^(1) ... M^(L); the interpolation step works against B.
Eigen::MatrixXd right_factor(const std::vector<SymmetricMatrix>& filters) {
    Eigen::MatrixXd b = filters[0].m();
    for (std::size_t l = 1; l < filters.size(); ++l) b = b * filters[l].m();
    return b;
}

Eigen::MatrixXd predictor(const LinearMeasurements& meas, const DeepRfmConfig& cfg,
                          const Eigen::MatrixXd& w, const Eigen::MatrixXd& b) {
    Eigen::MatrixXd z = w * b.transpose();
    if (cfg.enforce_observed) meas.enforce_observed(z);
    return z;
}

}  // namespace

DeepRfmState deep_lin_rfm_init(const LinearMeasurements& meas, const DeepRfmConfig& cfg) {
    cfg.validate();
    DeepRfmState state;
    state.filters.assign(cfg.depth(), SymmetricMatrix::identity(meas.cols()));
    MinFrobResult fit =
        min_frob_interpolate_general(meas, Eigen::MatrixXd::Identity(meas.cols(), meas.cols()),
                                     cfg.ridge);
    state.W = std::move(fit.w);
    state.Z = predictor(meas, cfg, state.W, Eigen::MatrixXd::Identity(meas.cols(), meas.cols()));
    return state;
}

DeepRfmState deep_lin_rfm_step(const DeepRfmState& state, const LinearMeasurements& meas,
                               const DeepRfmConfig& cfg) {
    const int depth = cfg.depth();
    DeepRfmState next;
    next.t = state.t + 1;
    next.filters.reserve(depth);

    if (cfg.enforce_observed && meas.is_completion()) {
        // Layer-l AGOP of the enforced predictor:
        // R_l^{-T} Z^T Z R_l^{-1} with prefix R_l = M^(l-1) ... M^(1), R_1 = I.
        const Eigen::MatrixXd zz = state.Z.transpose() * state.Z;
        Eigen::MatrixXd prefix = Eigen::MatrixXd::Identity(meas.cols(), meas.cols());
        for (int l = 0; l < depth; ++l) {
            Eigen::MatrixXd agop;
            if (l == 0) {
                agop = zz;
            } else {
                prefix = state.filters[l - 1].m() * prefix;
                // R_l^{-T} zz R_l^{-1} through two solves against R_l^T.
                Eigen::PartialPivLU<Eigen::MatrixXd> lu(prefix.transpose().eval());
                const Eigen::MatrixXd half = lu.solve(zz);
                agop = lu.solve(half.transpose()).transpose();
            }
            next.filters.emplace_back(
                spectral_apply(SymmetricMatrix(agop),
                               SpectralFunction::power(cfg.alphas[l], cfg.epsilon)));
        }
    } else {
        // Literal layer-wise update: M^(l) <- phi_l(Q_l^T W^T W Q_l) with the
        // suffix product Q_l = M^(L) ... M^(l).
        std::vector<Eigen::MatrixXd> wq(depth);  // W Q_l
        wq[depth - 1] = state.W * state.filters[depth - 1].m();
        for (int l = depth - 2; l >= 0; --l) {
            wq[l] = wq[l + 1] * state.filters[l].m();
        }
        for (int l = 0; l < depth; ++l) {
            next.filters.emplace_back(
                spectral_apply(SymmetricMatrix(wq[l].transpose() * wq[l]),
                               SpectralFunction::power(cfg.alphas[l], cfg.epsilon)));
        }
    }

    const Eigen::MatrixXd b = right_factor(next.filters);
    MinFrobResult fit = min_frob_interpolate_general(meas, b, cfg.ridge);
    next.W = std::move(fit.w);
    next.Z = predictor(meas, cfg, next.W, b);
    return next;
}

namespace {

std::vector<double> deep_trace_row(const LinearMeasurements& meas, const DeepRfmConfig& cfg,
                                   const DeepRfmState& state, double z_change) {
    std::vector<double> row{static_cast<double>(state.t)};
    double objective = 0.0;
    const Eigen::VectorXd sigma = singular_values(state.Z);
    for (Eigen::Index i = 0; i < sigma.size(); ++i) {
        objective += psi_eps_eval(sigma(i), cfg.alphas, cfg.epsilon);
    }
    row.push_back(objective);
    row.push_back(z_change);
    row.push_back((meas.apply(state.Z) - meas.labels()).norm());
    if (cfg.mse_eval) row.push_back(cfg.mse_eval(state.Z));
    for (const SymmetricMatrix& m : state.filters) {
        const EigenDecomposition eig = eigen_decompose(m);
        const double lo = eig.eigenvalues(eig.eigenvalues.size() - 1);
        row.push_back(lo > 0.0 ? eig.eigenvalues(0) / lo : std::numeric_limits<double>::infinity());
    }
    return row;
}

}  // namespace

DeepRfmRunResult deep_lin_rfm_run(const LinearMeasurements& meas, const DeepRfmConfig& cfg) {
    cfg.validate();
    DeepRfmRunResult out;
    out.limit_preconditions_met = deep_limit_preconditions_ok(cfg.alphas);
    out.trace.columns = {"iter", "objective", "z_change", "feasibility"};
    if (cfg.mse_eval) out.trace.columns.push_back("test_mse");
    for (int l = 1; l <= cfg.depth(); ++l) out.trace.columns.push_back("cond_" + std::to_string(l));

    DeepRfmState state = deep_lin_rfm_init(meas, cfg);
    out.trace.add_row(deep_trace_row(meas, cfg, state, std::numeric_limits<double>::quiet_NaN()));
    for (int iter = 1; iter <= cfg.max_iters; ++iter) {
        if (state.Z.norm() > 1e15) {
            out.diverged = true;
            break;
        }
        DeepRfmState next = deep_lin_rfm_step(state, meas, cfg);
        if (!next.Z.allFinite()) {
            out.diverged = true;
            break;
        }
        const double denom = state.Z.norm();
        const double change =
            denom > 0.0 ? (next.Z - state.Z).norm() / denom : (next.Z - state.Z).norm();
        state = std::move(next);
        out.trace.add_row(deep_trace_row(meas, cfg, state, change));
        out.iterations = iter;
        if (change < cfg.tol) {
            out.converged = true;
            break;
        }
    }
    out.state = std::move(state);
    return out;
}

DeepRfmRunResult deep_lin_rfm_run(const CompletionProblem& p, const DeepRfmConfig& cfg) {
    return deep_lin_rfm_run(LinearMeasurements(p), cfg);
}

DeepRfmRunResult deep_lin_rfm_run(const SensingProblem& p, const DeepRfmConfig& cfg) {
    return deep_lin_rfm_run(LinearMeasurements(p), cfg);
}

FixedPointCertificate deep_fixed_point_residual(const Eigen::MatrixXd& z,
                                                const LinearMeasurements& meas,
                                                const std::vector<double>& alphas,
                                                double epsilon) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(z, Eigen::ComputeThinU | Eigen::ComputeThinV);
    Eigen::VectorXd mapped(svd.singularValues().size());
    for (Eigen::Index i = 0; i < mapped.size(); ++i) {
        mapped(i) = psi_eps_deriv(svd.singularValues()(i), alphas, epsilon);
    }
    const Eigen::MatrixXd gradient =
        svd.matrixU() * mapped.asDiagonal() * svd.matrixV().transpose();
    FixedPointCertificate cert = fixed_point_residual_for_gradient(z, gradient, meas);
    double objective = 0.0;
    for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i) {
        objective += psi_eps_eval(svd.singularValues()(i), alphas, epsilon);
    }
    cert.objective_value = objective;
    return cert;
}

}  // namespace linrfm
