#include "linrfm/svd_free.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <cmath>

namespace linrfm {

namespace {

std::vector<std::vector<int>> group_by_row(const CompletionProblem& p) {
    std::vector<std::vector<int>> by_row(p.d1);
    for (std::size_t i = 0; i < p.observations.size(); ++i) {
        by_row[p.observations[i].row].push_back(static_cast<int>(i));
    }
    return by_row;
}

Eigen::VectorXd solve_row_block(const Eigen::MatrixXd& gram, const Eigen::VectorXd& y,
                                double ridge) {
    if (ridge > 0.0) {
        Eigen::MatrixXd g = gram;
        g.diagonal().array() += ridge;
        Eigen::LLT<Eigen::MatrixXd> llt(g);
        if (llt.info() == Eigen::Success) return llt.solve(y);
        // Cholesky fallback for extreme dynamic range: same ridged system
        // through the eigendecomposition.
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
        if (eig.info() != Eigen::Success) {
            throw SingularRowSystem("solve_gamma: row Gram factorization failed");
        }
        Eigen::VectorXd coeffs = eig.eigenvectors().transpose() * y;
        for (Eigen::Index i = 0; i < coeffs.size(); ++i) {
            coeffs(i) /= std::max(eig.eigenvalues()(i), 0.0) + ridge;
        }
        return eig.eigenvectors() * coeffs;
    }
    // Explicit ridge = 0: pseudo-inverse path. Degenerate row Grams occur
    // legitimately once the filter nears low rank.
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
    if (eig.info() != Eigen::Success) {
        throw NumericFailure("solve_gamma: eigensolver did not converge");
    }
    const double pivot = std::max(eig.eigenvalues().maxCoeff(), 0.0) * 1e-14;
    Eigen::VectorXd coeffs = eig.eigenvectors().transpose() * y;
    for (Eigen::Index i = 0; i < coeffs.size(); ++i) {
        coeffs(i) = eig.eigenvalues()(i) > pivot ? coeffs(i) / eig.eigenvalues()(i) : 0.0;
    }
    return eig.eigenvectors() * coeffs;
}

}  // namespace

SvdFreeState svdfree_init(const CompletionProblem& p, int alpha_numerator) {
    if (alpha_numerator < 1) throw ConfigError("svdfree_init: alpha numerator k must be >= 1");
    SvdFreeState state;
    state.alpha_numerator = alpha_numerator;
    state.tracked = Eigen::MatrixXd::Identity(p.d2, p.d2);
    state.gamma = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p.observations.size()));
    state.reconstruction = Eigen::MatrixXd::Zero(p.d1, p.d2);
    return state;
}

std::vector<RowSystem> build_row_systems(const CompletionProblem& p, const Eigen::MatrixXd& msq) {
    const auto by_row = group_by_row(p);
    std::vector<RowSystem> systems;
    systems.reserve(p.d1);
    for (int i = 0; i < p.d1; ++i) {
        RowSystem sys;
        sys.row = i;
        const auto ni = static_cast<Eigen::Index>(by_row[i].size());
        sys.cols.reserve(by_row[i].size());
        sys.values.resize(ni);
        for (Eigen::Index a = 0; a < ni; ++a) {
            const Observation& obs = p.observations[by_row[i][a]];
            sys.cols.push_back(obs.col);
            sys.values(a) = obs.value;
        }
        sys.gram.resize(ni, ni);
        for (Eigen::Index a = 0; a < ni; ++a) {
            for (Eigen::Index b = 0; b < ni; ++b) {
                sys.gram(a, b) = msq(sys.cols[a], sys.cols[b]);
            }
        }
        systems.push_back(std::move(sys));
    }
    return systems;
}

void solve_gamma(SvdFreeState& state, const CompletionProblem& p, double ridge) {
    if (ridge < 0.0) throw ConfigError("solve_gamma: ridge must be >= 0");
    const Eigen::MatrixXd msq = state.msq();
    const auto by_row = group_by_row(p);
    state.gamma.resize(static_cast<Eigen::Index>(p.observations.size()));

    Eigen::MatrixXd gram;
    Eigen::VectorXd y;
    for (int i = 0; i < p.d1; ++i) {
        const auto& rows = by_row[i];
        const auto ni = static_cast<Eigen::Index>(rows.size());
        if (ni == 0) continue;
        state.max_row_block = std::max(state.max_row_block, ni);
        gram.resize(ni, ni);
        y.resize(ni);
        for (Eigen::Index a = 0; a < ni; ++a) {
            const Observation& oa = p.observations[rows[a]];
            y(a) = oa.value;
            for (Eigen::Index b = 0; b < ni; ++b) {
                gram(a, b) = msq(oa.col, p.observations[rows[b]].col);
            }
        }
        const Eigen::VectorXd block = solve_row_block(gram, y, ridge);
        for (Eigen::Index a = 0; a < ni; ++a) state.gamma(rows[a]) = block(a);
    }
}

Eigen::MatrixXd reconstruct(const SvdFreeState& state, const CompletionProblem& p, bool enforce) {
    const Eigen::MatrixXd msq = state.msq();
    Eigen::MatrixXd z = Eigen::MatrixXd::Zero(p.d1, p.d2);
    for (std::size_t j = 0; j < p.observations.size(); ++j) {
        const Observation& obs = p.observations[j];
        z.row(obs.row) += state.gamma(static_cast<Eigen::Index>(j)) * msq.row(obs.col);
    }
    if (enforce) {
        for (const Observation& obs : p.observations) z(obs.row, obs.col) = obs.value;
    }
    return z;
}

SvdFreeState msq_update(const SvdFreeState& state, const CompletionProblem& p, bool enforce) {
    const int k = state.alpha_numerator;
    Eigen::MatrixXd s;
    if (enforce) {
        const Eigen::MatrixXd z = reconstruct(state, p, /*enforce=*/true);
        s = z.transpose() * z;
    } else {
        const Eigen::MatrixXd msq = state.msq();
        // G^T G accumulated from the sparse dual matrix G = sum_j gamma_j A_j;
        // cost O(sum_i n_i^2).
        Eigen::MatrixXd gtg = Eigen::MatrixXd::Zero(p.d2, p.d2);
        const auto by_row = group_by_row(p);
        for (const auto& rows : by_row) {
            for (int a : rows) {
                const Observation& oa = p.observations[a];
                for (int b : rows) {
                    const Observation& ob = p.observations[b];
                    gtg(oa.col, ob.col) += state.gamma(a) * state.gamma(b);
                }
            }
        }
        s = msq * gtg * msq;
    }
    SymmetricMatrix agop(s);

    SvdFreeState next = state;
    next.t = state.t + 1;
    if (state.tracks_square()) {
        next.tracked = integer_matrix_power(agop, k).m();
    } else {
        next.tracked = integer_matrix_power(agop, k / 2).m();
    }
    return next;
}

SvdFreeRunResult svdfree_run(const CompletionProblem& p, int alpha_numerator, double ridge,
                             int max_iters, double tol, bool enforce,
                             const std::function<double(const Eigen::MatrixXd&)>& mse_eval) {
    p.validate();
    SvdFreeRunResult out;
    out.trace.columns = {"iter", "wall_ms", "recon_change"};
    if (mse_eval) out.trace.columns.push_back("test_mse");

    out.state = svdfree_init(p, alpha_numerator);
    if (p.observations.empty()) {
        out.estimate = Eigen::MatrixXd::Zero(p.d1, p.d2);
        out.converged = true;
        return out;
    }

    Eigen::MatrixXd previous = Eigen::MatrixXd::Zero(p.d1, p.d2);
    for (int iter = 1; iter <= max_iters; ++iter) {
        WallTimer timer;
        solve_gamma(out.state, p, ridge);
        out.state.reconstruction = reconstruct(out.state, p, enforce);
        if (!out.state.reconstruction.allFinite() || out.state.reconstruction.norm() > 1e15) {
            out.diverged = true;
            out.state.reconstruction = previous;
            break;
        }
        const double denom = previous.norm();
        const double change = denom > 0.0 ? (out.state.reconstruction - previous).norm() / denom
                                          : (out.state.reconstruction - previous).norm();
        previous = out.state.reconstruction;
        out.iterations = iter;

        std::vector<double> row{static_cast<double>(iter), timer.elapsed_ms(), change};
        if (mse_eval) row.push_back(mse_eval(out.state.reconstruction));
        out.trace.add_row(std::move(row));

        if (change < tol) {
            out.converged = true;
            break;
        }
        if (iter < max_iters) out.state = msq_update(out.state, p, enforce);
    }
    out.estimate = out.state.reconstruction;
    return out;
}

}  // namespace linrfm
