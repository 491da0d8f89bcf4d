#include <Eigen/Cholesky>
#include <Eigen/SVD>
#include <cmath>

#include "linrfm/baselines.hpp"

namespace linrfm {

Eigen::VectorXd l1_min(const SparseRegressionProblem& p, double tol, long max_iters, double rho) {
    p.validate();
    const Eigen::Index n = p.n();
    const Eigen::Index d = p.d();
    if (n > d) throw ConfigError("l1_min: expects an underdetermined system (n <= d)");

    // Affine projection onto {X w = y}: v - X^T (X X^T)^{-1} (X v - y).
    Eigen::MatrixXd gram = p.design * p.design.transpose();
    Eigen::LLT<Eigen::MatrixXd> llt(gram);
    if (llt.info() != Eigen::Success) {
        throw SingularSystem("l1_min: X X^T is singular");
    }
    auto project = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd {
        return v - p.design.transpose() * llt.solve(p.design * v - p.labels);
    };
    auto soft = [](const Eigen::VectorXd& v, double kappa) -> Eigen::VectorXd {
        return v.array().sign() * (v.array().abs() - kappa).max(0.0);
    };

    Eigen::VectorXd w = project(Eigen::VectorXd::Zero(d));
    Eigen::VectorXd z = w;
    Eigen::VectorXd u = Eigen::VectorXd::Zero(d);
    for (long iter = 0; iter < max_iters; ++iter) {
        w = project(z - u);
        const Eigen::VectorXd z_prev = z;
        z = soft(w + u, 1.0 / rho);
        u += w - z;

        const double primal = (w - z).norm();
        const double dual = rho * (z - z_prev).norm();
        const double scale = std::max({1.0, w.norm(), z.norm()});
        if (primal <= tol * scale && dual <= tol * scale) {
            return w;
        }
    }
    throw NonConvergence("l1_min: ADMM did not converge within the iteration cap");
}

Eigen::MatrixXd nuclear_norm_min(const CompletionProblem& p, double tol, long max_iters,
                                 double step) {
    p.validate();
    if (step <= 0.0) throw ConfigError("nuclear_norm_min: step must be > 0");

    auto project = [&p](Eigen::MatrixXd z) {
        for (const Observation& obs : p.observations) z(obs.row, obs.col) = obs.value;
        return z;
    };
    auto shrink = [step](const Eigen::MatrixXd& z) {
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(z, Eigen::ComputeThinU | Eigen::ComputeThinV);
        const Eigen::VectorXd s =
            (svd.singularValues().array() - step).max(0.0).matrix();
        return Eigen::MatrixXd(svd.matrixU() * s.asDiagonal() * svd.matrixV().transpose());
    };

    Eigen::MatrixXd v = project(Eigen::MatrixXd::Zero(p.d1, p.d2));
    Eigen::MatrixXd x = v;
    for (long iter = 0; iter < max_iters; ++iter) {
        x = project(v);
        const Eigen::MatrixXd y = shrink(2.0 * x - v);
        const double residual = (y - x).norm();
        v += y - x;
        if (residual <= tol * std::max(1.0, x.norm())) {
            return project(v);
        }
    }
    throw NonConvergence("nuclear_norm_min: Douglas-Rachford did not converge within the cap");
}

}  // namespace linrfm
