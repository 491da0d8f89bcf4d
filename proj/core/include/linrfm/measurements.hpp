#pragma once

#include <Eigen/Dense>
#include <vector>

#include "linrfm/problems.hpp"

namespace linrfm {

// Uniform view over the measurement operator A(Z) = (<A_i, Z>)_i for either a
// completion problem (indicator sensing matrices) or a general sensing
// problem. Holds references; the viewed problem must outlive the view.
class LinearMeasurements {
public:
    explicit LinearMeasurements(const CompletionProblem& p);
    explicit LinearMeasurements(const SensingProblem& p);

    Eigen::Index rows() const { return d1_; }
    Eigen::Index cols() const { return d2_; }
    Eigen::Index count() const { return labels_.size(); }
    const Eigen::VectorXd& labels() const { return labels_; }

    bool is_completion() const { return completion_ != nullptr; }
    const CompletionProblem* completion() const { return completion_; }

    // (<A_i, Z>)_i
    Eigen::VectorXd apply(const Eigen::MatrixXd& z) const;

    // Adjoint: sum_i lambda_i A_i.
    Eigen::MatrixXd adjoint(const Eigen::VectorXd& lambda) const;

    // Gram matrix G_ij = tr(A_i^T A_j S) for symmetric S.
    Eigen::MatrixXd gram(const Eigen::MatrixXd& s) const;

    // sum_j gamma_j A_j B for a d2 x d2 right factor B.
    Eigen::MatrixXd combine(const Eigen::VectorXd& gamma, const Eigen::MatrixXd& b) const;

    // Overwrites observed coordinates of z with the training values.
    // No-op for general sensing problems.
    void enforce_observed(Eigen::MatrixXd& z) const;

    // Observation indices grouped by row (completion only).
    const std::vector<std::vector<int>>& rows_of_observations() const;

private:
    const CompletionProblem* completion_ = nullptr;
    const SensingProblem* sensing_ = nullptr;
    Eigen::Index d1_ = 0;
    Eigen::Index d2_ = 0;
    Eigen::VectorXd labels_;
    std::vector<std::vector<int>> by_row_;
};

}  // namespace linrfm
