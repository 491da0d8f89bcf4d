#include "linrfm/lin_rfm.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <limits>

namespace linrfm {

namespace {

// Solves (G + ridge I) gamma = y for a PSD Gram block. ridge = 0 takes the
// truncated pseudo-inverse solution; null_mass, when requested, receives the
// label mass falling on the numerical null space.
Eigen::VectorXd solve_gram_block(const Eigen::MatrixXd& gram, const Eigen::VectorXd& y,
                                 double ridge, double* null_mass_out) {
    if (null_mass_out) *null_mass_out = 0.0;
    if (y.size() == 0) return Eigen::VectorXd();
    if (ridge > 0.0) {
        Eigen::MatrixXd g = gram;
        g.diagonal().array() += ridge;
        Eigen::LLT<Eigen::MatrixXd> llt(g);
        if (llt.info() == Eigen::Success) return llt.solve(y);
        // Extreme dynamic range can defeat the Cholesky pivots; the same
        // ridged system solved through the eigendecomposition, with negative
        // rounding clamped at zero.
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
        if (eig.info() != Eigen::Success) {
            throw SingularSystem("min_frob_interpolate: Gram factorization failed");
        }
        Eigen::VectorXd coeffs = eig.eigenvectors().transpose() * y;
        for (Eigen::Index i = 0; i < coeffs.size(); ++i) {
            coeffs(i) /= std::max(eig.eigenvalues()(i), 0.0) + ridge;
        }
        return eig.eigenvectors() * coeffs;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
    if (eig.info() != Eigen::Success) {
        throw NumericFailure("min_frob_interpolate: eigensolver did not converge");
    }
    const double lambda_max = eig.eigenvalues().maxCoeff();
    const double pivot = std::max(lambda_max, 0.0) * 1e-14;
    Eigen::VectorXd coeffs = eig.eigenvectors().transpose() * y;
    double null_mass = 0.0;
    for (Eigen::Index i = 0; i < coeffs.size(); ++i) {
        if (eig.eigenvalues()(i) > pivot) {
            coeffs(i) /= eig.eigenvalues()(i);
        } else {
            null_mass += coeffs(i) * coeffs(i);
            coeffs(i) = 0.0;
        }
    }
    if (null_mass_out) *null_mass_out = std::sqrt(null_mass);
    return eig.eigenvectors() * coeffs;
}

Eigen::VectorXd solve_gamma_for(const LinearMeasurements& meas, const Eigen::MatrixXd& s,
                                double ridge) {
    const Eigen::Index n = meas.count();
    Eigen::VectorXd gamma(n);
    if (meas.is_completion()) {
        // The Gram system decouples into per-row blocks. ridge = 0 takes the
        // pseudo-inverse of each block; singular blocks occur legitimately as
        // the filter approaches low rank.
        const auto& by_row = meas.rows_of_observations();
        const auto& obs = meas.completion()->observations;
        for (const auto& row_obs : by_row) {
            const auto ni = static_cast<Eigen::Index>(row_obs.size());
            if (ni == 0) continue;
            Eigen::MatrixXd g(ni, ni);
            Eigen::VectorXd y(ni);
            for (Eigen::Index a = 0; a < ni; ++a) {
                y(a) = meas.labels()(row_obs[a]);
                const int ca = obs[row_obs[a]].col;
                for (Eigen::Index b = 0; b < ni; ++b) {
                    g(a, b) = s(ca, obs[row_obs[b]].col);
                }
            }
            const Eigen::VectorXd block = solve_gram_block(g, y, ridge, nullptr);
            for (Eigen::Index a = 0; a < ni; ++a) gamma(row_obs[a]) = block(a);
        }
    } else {
        // Labels with mass on the null space of a singular Gram mean the
        // constraints genuinely clash.
        double null_mass = 0.0;
        gamma = solve_gram_block(meas.gram(s), meas.labels(), ridge, &null_mass);
        if (null_mass > 1e-8 * std::max(1.0, meas.labels().norm())) {
            throw SingularSystem("min_frob_interpolate: inconsistent constraints at ridge = 0");
        }
    }
    return gamma;
}

}  // namespace

MinFrobResult min_frob_interpolate_general(const LinearMeasurements& meas,
                                           const Eigen::MatrixXd& b, double ridge) {
    if (b.rows() != meas.cols() || b.cols() != meas.cols()) {
        throw InvalidDims("min_frob_interpolate: right factor shape mismatch");
    }
    if (ridge < 0.0) throw ConfigError("min_frob_interpolate: ridge must be >= 0");
    const Eigen::MatrixXd s = b * b.transpose();
    MinFrobResult out;
    out.gamma = solve_gamma_for(meas, s, ridge);
    out.w = meas.combine(out.gamma, b);
    return out;
}

MinFrobResult min_frob_interpolate(const LinearMeasurements& meas, const SymmetricMatrix& m,
                                   double ridge) {
    return min_frob_interpolate_general(meas, m.m(), ridge);
}

namespace {

Eigen::MatrixXd predictor_matrix(const LinearMeasurements& meas, const RfmConfig& cfg,
                                 const Eigen::MatrixXd& w, const SymmetricMatrix& m) {
    Eigen::MatrixXd z = w * m.m();
    if (cfg.enforce_observed) meas.enforce_observed(z);
    return z;
}

}  // namespace

RfmState lin_rfm_init(const LinearMeasurements& meas, const RfmConfig& cfg,
                      const std::optional<SymmetricMatrix>& init_m) {
    SymmetricMatrix m = init_m ? *init_m : SymmetricMatrix::identity(meas.cols());
    if (m.dim() != meas.cols()) throw InvalidDims("lin_rfm_init: filter dimension mismatch");
    MinFrobResult fit = min_frob_interpolate(meas, m, cfg.ridge);
    RfmState state{std::move(m), std::move(fit.w), Eigen::MatrixXd(), 0};
    state.Z = predictor_matrix(meas, cfg, state.W, state.M);
    return state;
}

RfmState lin_rfm_step(const RfmState& state, const LinearMeasurements& meas,
                      const RfmConfig& cfg) {
    SymmetricMatrix agop(state.Z.transpose() * state.Z);
    SymmetricMatrix m_next = spectral_apply(agop, cfg.phi);
    MinFrobResult fit = min_frob_interpolate(meas, m_next, cfg.ridge);
    RfmState next{std::move(m_next), std::move(fit.w), Eigen::MatrixXd(), state.t + 1};
    next.Z = predictor_matrix(meas, cfg, next.W, next.M);
    return next;
}

namespace {

double relative_change(const Eigen::MatrixXd& current, const Eigen::MatrixXd& previous) {
    const double denom = previous.norm();
    const double diff = (current - previous).norm();
    return denom > 0.0 ? diff / denom : diff;
}

std::vector<double> trace_row(const LinearMeasurements& meas, const RfmConfig& cfg, int iter,
                              const Eigen::MatrixXd& z, double z_change) {
    std::vector<double> row;
    row.push_back(static_cast<double>(iter));
    row.push_back(spectral_objective(z, cfg.phi));
    row.push_back(z_change);
    row.push_back((meas.apply(z) - meas.labels()).norm());
    if (cfg.mse_eval) row.push_back(cfg.mse_eval(z));
    return row;
}

}  // namespace

RfmRunResult lin_rfm_run(const LinearMeasurements& meas, const RfmConfig& cfg,
                         const std::optional<SymmetricMatrix>& init_m) {
    RfmRunResult out;
    out.trace.columns = {"iter", "objective", "z_change", "feasibility"};
    if (cfg.mse_eval) out.trace.columns.push_back("test_mse");

    RfmState state = lin_rfm_init(meas, cfg, init_m);
    out.trace.add_row(trace_row(meas, cfg, 0, state.Z, std::numeric_limits<double>::quiet_NaN()));
    for (int iter = 1; iter <= cfg.max_iters; ++iter) {
        // Iterates can run away (the identity-phi escape dynamics are real);
        // stop before powers of the filter overflow.
        if (state.Z.norm() > 1e15) {
            out.diverged = true;
            break;
        }
        RfmState next = lin_rfm_step(state, meas, cfg);
        if (!next.Z.allFinite()) {
            out.diverged = true;
            break;
        }
        const double change = relative_change(next.Z, state.Z);
        state = std::move(next);
        out.trace.add_row(trace_row(meas, cfg, iter, state.Z, change));
        out.iterations = iter;
        if (!cfg.fixed_iterations && change < cfg.tol) {
            out.converged = true;
            break;
        }
    }
    if (cfg.fixed_iterations && !out.diverged) out.converged = true;
    out.state = std::move(state);
    return out;
}

RfmRunResult lin_rfm_run(const CompletionProblem& p, const RfmConfig& cfg,
                         const std::optional<SymmetricMatrix>& init_m) {
    return lin_rfm_run(LinearMeasurements(p), cfg, init_m);
}

RfmRunResult lin_rfm_run(const SensingProblem& p, const RfmConfig& cfg,
                         const std::optional<SymmetricMatrix>& init_m) {
    return lin_rfm_run(LinearMeasurements(p), cfg, init_m);
}

DiagRfmResult diag_rfm_run(const SparseRegressionProblem& p, const RfmConfig& cfg) {
    p.validate();
    const int d = p.d();
    Eigen::VectorXd m = Eigen::VectorXd::Ones(d);
    Eigen::VectorXd effective = Eigen::VectorXd::Zero(d);

    DiagRfmResult out;
    out.trace.columns = {"iter", "objective", "z_change", "feasibility"};

    for (int iter = 1; iter <= cfg.max_iters; ++iter) {
        const Eigen::MatrixXd xm = p.design * m.asDiagonal();
        const Eigen::VectorXd w = pseudo_inverse_solve(xm, p.labels, cfg.ridge);
        const Eigen::VectorXd next = w.cwiseProduct(m);
        const double denom = effective.norm();
        const double change = denom > 0.0 ? (next - effective).norm() / denom
                                          : (next - effective).norm();
        effective = next;
        // Element-wise AGOP update.
        for (int j = 0; j < d; ++j) m(j) = cfg.phi(w(j) * w(j) * m(j) * m(j));

        double objective = 0.0;
        for (int j = 0; j < d; ++j) {
            double term;
            try {
                term = psi_eval(std::abs(effective(j)), cfg.phi);
            } catch (const DivergentIntegral&) {
                term = std::numeric_limits<double>::quiet_NaN();
            }
            objective += term;
        }
        out.trace.add_row({static_cast<double>(iter), objective,
                           change, (p.design * effective - p.labels).norm()});
        out.iterations = iter;
        if (!cfg.fixed_iterations && iter > 1 && change < cfg.tol) {
            out.converged = true;
            break;
        }
    }
    if (cfg.fixed_iterations) out.converged = true;
    out.weights = effective;
    return out;
}

namespace {

struct PowerParams {
    double alpha;
    double epsilon;
};

PowerParams power_params(const SpectralFunction& phi) {
    switch (phi.kind()) {
        case SpectralFunction::Kind::Power: return {phi.alpha(), phi.epsilon()};
        case SpectralFunction::Kind::Identity: return {1.0, 0.0};
        case SpectralFunction::Kind::HalfIntegerPower: return {phi.alpha(), 0.0};
    }
    return {1.0, 0.0};
}

}  // namespace

double psi_eval(double s, const SpectralFunction& phi) {
    if (s < 0.0) throw ConfigError("psi_eval: s must be >= 0");
    if (s == 0.0) return 0.0;
    const auto [alpha, epsilon] = power_params(phi);
    if (alpha == 0.5) {
        if (epsilon == 0.0) {
            throw DivergentIntegral("psi_eval: log singularity at 0 for alpha = 1/2, epsilon = 0");
        }
        return 0.5 * (std::log(s * s + epsilon) - std::log(epsilon));
    }
    const double power = 1.0 - 2.0 * alpha;
    const double scale = 1.0 / (2.0 - 4.0 * alpha);
    if (epsilon == 0.0) {
        if (alpha > 0.5) {
            throw DivergentIntegral("psi_eval: divergent antiderivative for alpha > 1/2, epsilon = 0");
        }
        return scale * std::pow(s * s, power);
    }
    return scale * (std::pow(s * s + epsilon, power) - std::pow(epsilon, power));
}

double psi_derivative(double r, const SpectralFunction& phi) {
    const double denom = phi(r * r);
    return r / (denom * denom);
}

double spectral_objective(const Eigen::MatrixXd& z, const SpectralFunction& phi) {
    const Eigen::VectorXd sigma = singular_values(z);
    const auto [alpha, epsilon] = power_params(phi);
    double total = 0.0;
    for (Eigen::Index i = 0; i < sigma.size(); ++i) {
        const double s = sigma(i);
        if (epsilon > 0.0 || alpha < 0.5) {
            total += psi_eval(s, phi);
        } else if (s > 0.0) {
            // Offset-free antiderivative; comparable across iterates.
            total += alpha == 0.5 ? std::log(s)
                                  : std::pow(s * s, 1.0 - 2.0 * alpha) / (2.0 - 4.0 * alpha);
        } else {
            return std::numeric_limits<double>::quiet_NaN();
        }
    }
    return total;
}

FixedPointCertificate fixed_point_residual_for_gradient(const Eigen::MatrixXd& z,
                                                        const Eigen::MatrixXd& gradient,
                                                        const LinearMeasurements& meas) {
    const Eigen::Index n = meas.count();
    Eigen::VectorXd lambda(n);
    if (meas.is_completion()) {
        // The adjoint touches observed coordinates only; least squares zeroes
        // the gradient exactly there.
        for (Eigen::Index i = 0; i < n; ++i) {
            const Observation& obs = meas.completion()->observations[i];
            lambda(i) = -gradient(obs.row, obs.col);
        }
    } else {
        // Normal equations for min_lambda ||G + A*(lambda)||_F:
        // <A_i, A_j> lambda = -<A_i, G>.
        const Eigen::MatrixXd gram =
            meas.gram(Eigen::MatrixXd::Identity(meas.cols(), meas.cols()));
        const Eigen::VectorXd rhs = -meas.apply(gradient);
        lambda = solve_gram_block(gram, rhs, 0.0, nullptr);
    }
    FixedPointCertificate cert;
    cert.multipliers = lambda;
    Eigen::MatrixXd residual = gradient + meas.adjoint(lambda);
    cert.stationarity_residual = residual.norm();
    const double gnorm = gradient.norm();
    cert.stationarity_relative = gnorm > 0.0 ? cert.stationarity_residual / gnorm : 0.0;
    cert.feasibility_residual = (meas.apply(z) - meas.labels()).norm();
    return cert;
}

FixedPointCertificate fixed_point_residual(const Eigen::MatrixXd& z,
                                           const LinearMeasurements& meas,
                                           const SpectralFunction& phi) {
    SymmetricMatrix gram(z.transpose() * z);
    const SymmetricMatrix weight = spectral_apply(gram, [&phi](double s) {
        const double v = phi(s);
        return 1.0 / (v * v);
    });
    const Eigen::MatrixXd gradient = 2.0 * z * weight.m();
    FixedPointCertificate cert = fixed_point_residual_for_gradient(z, gradient, meas);
    cert.objective_value = spectral_objective(z, phi);
    return cert;
}

}  // namespace linrfm
