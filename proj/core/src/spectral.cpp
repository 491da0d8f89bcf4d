#include "linrfm/spectral.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <cmath>

namespace linrfm {

EigenDecomposition eigen_decompose(const SymmetricMatrix& a) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(a.m());
    if (solver.info() != Eigen::Success) {
        throw NumericFailure("eigen_decompose: eigensolver did not converge");
    }
    const Eigen::Index n = a.dim();
    EigenDecomposition out;
    out.eigenvalues.resize(n);
    out.eigenvectors.resize(n, n);
    // Eigen returns ascending order; flip to descending.
    for (Eigen::Index i = 0; i < n; ++i) {
        out.eigenvalues(i) = solver.eigenvalues()(n - 1 - i);
        out.eigenvectors.col(i) = solver.eigenvectors().col(n - 1 - i);
    }
    return out;
}

namespace {

SymmetricMatrix apply_map(const SymmetricMatrix& a, const std::function<double(double)>& map) {
    EigenDecomposition eig = eigen_decompose(a);
    const double spectral_norm =
        std::max(std::abs(eig.eigenvalues(0)), std::abs(eig.eigenvalues(eig.eigenvalues.size() - 1)));
    const double clamp_threshold = -1e-10 * spectral_norm;
    Eigen::VectorXd mapped(eig.eigenvalues.size());
    for (Eigen::Index i = 0; i < eig.eigenvalues.size(); ++i) {
        double lambda = eig.eigenvalues(i);
        if (lambda < clamp_threshold) {
            throw NonPsdInput("spectral_apply: eigenvalue " + format_double(lambda) +
                              " below clamp threshold " + format_double(clamp_threshold));
        }
        if (lambda < 0.0) lambda = 0.0;
        mapped(i) = map(lambda);
    }
    Eigen::MatrixXd out =
        eig.eigenvectors * mapped.asDiagonal() * eig.eigenvectors.transpose();
    return SymmetricMatrix(out);
}

}  // namespace

SymmetricMatrix spectral_apply(const SymmetricMatrix& a, const SpectralFunction& phi) {
    return apply_map(a, [&phi](double s) { return phi(s); });
}

SymmetricMatrix spectral_apply(const SymmetricMatrix& a, const std::function<double(double)>& map) {
    return apply_map(a, map);
}

SymmetricMatrix integer_matrix_power(const SymmetricMatrix& a, int k) {
    if (k < 1) throw ConfigError("integer_matrix_power: k must be >= 1");
    Eigen::MatrixXd base = a.m();
    Eigen::MatrixXd result = Eigen::MatrixXd::Identity(a.dim(), a.dim());
    int e = k;
    while (e > 0) {
        if (e & 1) result = result * base;
        e >>= 1;
        if (e > 0) base = base * base;
    }
    return SymmetricMatrix(result);
}

Eigen::VectorXd pseudo_inverse_solve(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                                     double ridge) {
    if (a.rows() != b.size()) throw InvalidDims("pseudo_inverse_solve: dimension mismatch");
    const Eigen::Index n = a.rows();
    const Eigen::Index d = a.cols();
    if (ridge > 0.0) {
        if (n < d) {
            Eigen::MatrixXd gram = a * a.transpose();
            gram.diagonal().array() += ridge;
            return a.transpose() * gram.llt().solve(b);
        }
        Eigen::MatrixXd gram = a.transpose() * a;
        gram.diagonal().array() += ridge;
        return gram.llt().solve(a.transpose() * b);
    }
    if (n <= d) {
        // Minimum-norm solve through the n x n Gram system A A^T u = b, x = A^T u.
        Eigen::MatrixXd gram = a * a.transpose();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
        if (eig.info() != Eigen::Success) {
            throw NumericFailure("pseudo_inverse_solve: eigensolver did not converge");
        }
        const double lambda_max = eig.eigenvalues().maxCoeff();
        const double pivot_tol = 1e-14 * lambda_max;
        if (lambda_max <= 0.0 || eig.eigenvalues().minCoeff() <= pivot_tol) {
            throw SingularSystem("pseudo_inverse_solve: Gram matrix numerically singular at ridge = 0");
        }
        Eigen::VectorXd u = eig.eigenvectors() *
                            (eig.eigenvectors().transpose() * b).cwiseQuotient(eig.eigenvalues());
        return a.transpose() * u;
    }
    // Overdetermined consistent system: unique least-squares solution from the
    // d x d normal equations.
    Eigen::MatrixXd gram = a.transpose() * a;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
    if (eig.info() != Eigen::Success) {
        throw NumericFailure("pseudo_inverse_solve: eigensolver did not converge");
    }
    const double lambda_max = eig.eigenvalues().maxCoeff();
    if (lambda_max <= 0.0 || eig.eigenvalues().minCoeff() <= 1e-14 * lambda_max) {
        throw SingularSystem("pseudo_inverse_solve: Gram matrix numerically singular at ridge = 0");
    }
    Eigen::VectorXd rhs = a.transpose() * b;
    return eig.eigenvectors() *
           (eig.eigenvectors().transpose() * rhs).cwiseQuotient(eig.eigenvalues());
}

Eigen::VectorXd singular_values(const Eigen::MatrixXd& a) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a);
    if (svd.info() != Eigen::Success) {
        throw NumericFailure("singular_values: SVD did not converge");
    }
    return svd.singularValues();
}

}  // namespace linrfm
