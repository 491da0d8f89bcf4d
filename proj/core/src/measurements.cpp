#include "linrfm/measurements.hpp"

namespace linrfm {

LinearMeasurements::LinearMeasurements(const CompletionProblem& p) : completion_(&p) {
    d1_ = p.d1;
    d2_ = p.d2;
    labels_ = p.observed_values();
    by_row_.resize(p.d1);
    for (std::size_t i = 0; i < p.observations.size(); ++i) {
        by_row_[p.observations[i].row].push_back(static_cast<int>(i));
    }
}

LinearMeasurements::LinearMeasurements(const SensingProblem& p) : sensing_(&p) {
    if (p.sensing_matrices.empty()) {
        throw InvalidDims("LinearMeasurements: sensing problem with no measurements");
    }
    d1_ = p.sensing_matrices[0].rows();
    d2_ = p.sensing_matrices[0].cols();
    labels_ = p.labels;
}

Eigen::VectorXd LinearMeasurements::apply(const Eigen::MatrixXd& z) const {
    Eigen::VectorXd out(count());
    if (completion_) {
        for (Eigen::Index i = 0; i < count(); ++i) {
            const Observation& obs = completion_->observations[i];
            out(i) = z(obs.row, obs.col);
        }
    } else {
        for (Eigen::Index i = 0; i < count(); ++i) {
            out(i) = sensing_->sensing_matrices[i].cwiseProduct(z).sum();
        }
    }
    return out;
}

Eigen::MatrixXd LinearMeasurements::adjoint(const Eigen::VectorXd& lambda) const {
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(d1_, d2_);
    if (completion_) {
        for (Eigen::Index i = 0; i < count(); ++i) {
            const Observation& obs = completion_->observations[i];
            out(obs.row, obs.col) += lambda(i);
        }
    } else {
        for (Eigen::Index i = 0; i < count(); ++i) {
            out += lambda(i) * sensing_->sensing_matrices[i];
        }
    }
    return out;
}

Eigen::MatrixXd LinearMeasurements::gram(const Eigen::MatrixXd& s) const {
    const Eigen::Index n = count();
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(n, n);
    if (completion_) {
        // tr(A_i^T A_j S) = [row_i == row_j] * S(col_i, col_j)
        for (Eigen::Index i = 0; i < n; ++i) {
            const Observation& oi = completion_->observations[i];
            for (Eigen::Index j = 0; j < n; ++j) {
                const Observation& oj = completion_->observations[j];
                if (oi.row == oj.row) g(i, j) = s(oi.col, oj.col);
            }
        }
    } else {
        std::vector<Eigen::MatrixXd> filtered(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            filtered[i] = sensing_->sensing_matrices[i] * s;
        }
        for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index j = i; j < n; ++j) {
                const double v = filtered[i].cwiseProduct(sensing_->sensing_matrices[j]).sum();
                g(i, j) = v;
                g(j, i) = v;
            }
        }
    }
    return g;
}

Eigen::MatrixXd LinearMeasurements::combine(const Eigen::VectorXd& gamma,
                                            const Eigen::MatrixXd& b) const {
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(d1_, d2_);
    if (completion_) {
        // A_j B contributes gamma_j * (row col_j of B) into row row_j.
        for (Eigen::Index j = 0; j < count(); ++j) {
            const Observation& obs = completion_->observations[j];
            out.row(obs.row) += gamma(j) * b.row(obs.col);
        }
    } else {
        for (Eigen::Index j = 0; j < count(); ++j) {
            out += gamma(j) * (sensing_->sensing_matrices[j] * b);
        }
    }
    return out;
}

void LinearMeasurements::enforce_observed(Eigen::MatrixXd& z) const {
    if (!completion_) return;
    for (Eigen::Index i = 0; i < count(); ++i) {
        const Observation& obs = completion_->observations[i];
        z(obs.row, obs.col) = labels_(i);
    }
}

const std::vector<std::vector<int>>& LinearMeasurements::rows_of_observations() const {
    if (!completion_) {
        throw InvalidDims("rows_of_observations: only available for completion problems");
    }
    return by_row_;
}

}  // namespace linrfm
