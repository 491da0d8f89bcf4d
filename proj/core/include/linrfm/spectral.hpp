#pragma once

#include <Eigen/Dense>
#include <functional>

#include "linrfm/common.hpp"

namespace linrfm {

// Dense real symmetric matrix. Stored as (A + A^T)/2 so the symmetry
// invariant holds by construction.
class SymmetricMatrix {
public:
    SymmetricMatrix() : m_(Eigen::MatrixXd::Zero(1, 1)) {}

    explicit SymmetricMatrix(const Eigen::MatrixXd& a) {
        if (a.rows() != a.cols() || a.rows() < 1) {
            throw InvalidDims("SymmetricMatrix: input must be square with dim >= 1");
        }
        m_ = 0.5 * (a + a.transpose());
    }

    static SymmetricMatrix identity(Eigen::Index dim) {
        return SymmetricMatrix(Eigen::MatrixXd::Identity(dim, dim));
    }

    Eigen::Index dim() const { return m_.rows(); }
    const Eigen::MatrixXd& m() const { return m_; }

private:
    Eigen::MatrixXd m_;
};

// Scalar map applied to a symmetric matrix through its eigenvalues.
// Power{alpha, epsilon} means lambda -> (lambda + epsilon)^alpha.
class SpectralFunction {
public:
    enum class Kind { Power, Identity, HalfIntegerPower };

    static SpectralFunction power(double alpha, double epsilon = 0.0) {
        if (alpha <= 0.0) throw ConfigError("SpectralFunction::power: alpha must be > 0");
        if (epsilon < 0.0) throw ConfigError("SpectralFunction::power: epsilon must be >= 0");
        SpectralFunction f;
        f.kind_ = Kind::Power;
        f.alpha_ = alpha;
        f.epsilon_ = epsilon;
        return f;
    }

    static SpectralFunction identity() {
        SpectralFunction f;
        f.kind_ = Kind::Identity;
        return f;
    }

    // alpha = k/2, epsilon = 0.
    static SpectralFunction half_integer_power(int k) {
        if (k < 1) throw ConfigError("SpectralFunction::half_integer_power: k must be >= 1");
        SpectralFunction f;
        f.kind_ = Kind::HalfIntegerPower;
        f.alpha_ = 0.5 * k;
        f.half_k_ = k;
        return f;
    }

    Kind kind() const { return kind_; }
    double alpha() const { return alpha_; }
    double epsilon() const { return epsilon_; }
    int half_k() const { return half_k_; }

    // True when the map sends every non-negative eigenvalue to a strictly
    // positive value, so PSD inputs become positive definite.
    bool strictly_positive() const {
        return kind_ == Kind::Power && epsilon_ > 0.0;
    }

    double operator()(double lambda) const {
        switch (kind_) {
            case Kind::Identity: return lambda;
            case Kind::Power: return std::pow(lambda + epsilon_, alpha_);
            case Kind::HalfIntegerPower: return std::pow(lambda, alpha_);
        }
        return lambda;
    }

private:
    SpectralFunction() = default;
    Kind kind_ = Kind::Identity;
    double alpha_ = 1.0;
    double epsilon_ = 0.0;
    int half_k_ = 2;
};

// Eigenvalues in descending order, eigenvectors as matching orthonormal columns.
struct EigenDecomposition {
    Eigen::VectorXd eigenvalues;
    Eigen::MatrixXd eigenvectors;
};

EigenDecomposition eigen_decompose(const SymmetricMatrix& a);

// V diag(f(lambda_i)) V^T. Eigenvalues below -1e-10 * ||A||_2 raise NonPsdInput;
// tiny negatives above that threshold are clamped to 0 before applying the map.
SymmetricMatrix spectral_apply(const SymmetricMatrix& a, const SpectralFunction& phi);
SymmetricMatrix spectral_apply(const SymmetricMatrix& a, const std::function<double(double)>& map);

// A^k by repeated squaring, k >= 1. No eigendecomposition.
SymmetricMatrix integer_matrix_power(const SymmetricMatrix& a, int k);

// ridge = 0: minimum-norm solution of a consistent system A x = b.
// ridge > 0: ridge least squares, solved through the smaller Gram system.
Eigen::VectorXd pseudo_inverse_solve(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                                     double ridge);

// Singular values of a rectangular matrix, descending.
Eigen::VectorXd singular_values(const Eigen::MatrixXd& a);

}  // namespace linrfm
