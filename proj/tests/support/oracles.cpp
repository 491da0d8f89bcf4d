#include "support/oracles.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace linrfm::testing {

Eigen::MatrixXd random_gaussian(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
    Rng rng = make_rng(seed);
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index j = 0; j < cols; ++j) {
            std::normal_distribution<double> normal(0.0, 1.0);
            m(i, j) = normal(rng);
        }
    }
    return m;
}

Eigen::MatrixXd random_psd(Eigen::Index dim, std::uint64_t seed, Eigen::Index inner) {
    if (inner <= 0) inner = dim;
    const Eigen::MatrixXd g = random_gaussian(dim, inner, seed);
    return g * g.transpose() / static_cast<double>(inner);
}

Eigen::MatrixXd random_spd(Eigen::Index dim, std::uint64_t seed, double shift) {
    return random_psd(dim, seed) + shift * Eigen::MatrixXd::Identity(dim, dim);
}

namespace {

// Cyclic Jacobi eigendecomposition; independent of Eigen's solver.
void jacobi_decompose(const Eigen::MatrixXd& symmetric, Eigen::MatrixXd& vectors,
                      Eigen::VectorXd& values) {
    const Eigen::Index n = symmetric.rows();
    Eigen::MatrixXd a = 0.5 * (symmetric + symmetric.transpose());
    vectors = Eigen::MatrixXd::Identity(n, n);
    for (int sweep = 0; sweep < 128; ++sweep) {
        double off = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index j = i + 1; j < n; ++j) off += a(i, j) * a(i, j);
        }
        if (off < 1e-30) break;
        for (Eigen::Index p = 0; p < n; ++p) {
            for (Eigen::Index q = p + 1; q < n; ++q) {
                if (std::abs(a(p, q)) < 1e-300) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                Eigen::MatrixXd rotation = Eigen::MatrixXd::Identity(n, n);
                rotation(p, p) = c;
                rotation(q, q) = c;
                rotation(p, q) = s;
                rotation(q, p) = -s;
                a = rotation.transpose() * a * rotation;
                vectors = vectors * rotation;
            }
        }
    }
    values = a.diagonal();
}

}  // namespace

Eigen::MatrixXd spectral_apply_oracle(const Eigen::MatrixXd& symmetric,
                                      const std::function<double(double)>& map) {
    Eigen::MatrixXd vectors;
    Eigen::VectorXd values;
    jacobi_decompose(symmetric, vectors, values);
    Eigen::VectorXd mapped(values.size());
    for (Eigen::Index i = 0; i < values.size(); ++i) {
        mapped(i) = map(std::max(values(i), 0.0));
    }
    return vectors * mapped.asDiagonal() * vectors.transpose();
}

Eigen::VectorXd jacobi_eigenvalues(const Eigen::MatrixXd& symmetric) {
    Eigen::MatrixXd vectors;
    Eigen::VectorXd values;
    jacobi_decompose(symmetric, vectors, values);
    std::sort(values.data(), values.data() + values.size(), std::greater<double>());
    return values;
}

Eigen::VectorXd gram_singular_values(const Eigen::MatrixXd& a) {
    const Eigen::MatrixXd gram = a.rows() < a.cols() ? Eigen::MatrixXd(a * a.transpose())
                                                     : Eigen::MatrixXd(a.transpose() * a);
    Eigen::VectorXd values = jacobi_eigenvalues(gram);
    for (Eigen::Index i = 0; i < values.size(); ++i) {
        values(i) = std::sqrt(std::max(values(i), 0.0));
    }
    return values;
}

Eigen::VectorXd svd_pinv_solve(const Eigen::MatrixXd& a, const Eigen::VectorXd& b) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const double tol = 1e-12 * svd.singularValues()(0) * std::max(a.rows(), a.cols());
    Eigen::VectorXd inv = svd.singularValues();
    for (Eigen::Index i = 0; i < inv.size(); ++i) {
        inv(i) = inv(i) > tol ? 1.0 / inv(i) : 0.0;
    }
    return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose() * b;
}

double central_difference(const std::function<double(double)>& f, double x, double h) {
    return (f(x + h) - f(x - h)) / (2.0 * h);
}

namespace {

double composite_simpson(const std::function<double(double)>& f, double a, double b, long n) {
    const double h = (b - a) / static_cast<double>(n);
    double sum = f(a) + f(b);
    for (long i = 1; i < n; ++i) {
        sum += (i % 2 == 1 ? 4.0 : 2.0) * f(a + i * h);
    }
    return sum * h / 3.0;
}

}  // namespace

double refine_quadrature(const std::function<double(double)>& f, double a, double b, double tol) {
    long n = 64;
    double previous = composite_simpson(f, a, b, n);
    for (int round = 0; round < 22; ++round) {
        n *= 2;
        const double current = composite_simpson(f, a, b, n);
        if (std::abs(current - previous) < tol) return current;
        previous = current;
    }
    return previous;
}

Eigen::VectorXd simplex_solve(const Eigen::MatrixXd& a_in, const Eigen::VectorXd& b_in,
                              const Eigen::VectorXd& c) {
    // Phase 1 with artificial variables, phase 2 on the original costs.
    // Dense tableau with Bland's rule; fine for the small oracle instances.
    Eigen::MatrixXd a = a_in;
    Eigen::VectorXd b = b_in;
    const Eigen::Index m = a.rows();
    const Eigen::Index n = a.cols();
    for (Eigen::Index i = 0; i < m; ++i) {
        if (b(i) < 0.0) {
            a.row(i) = -a.row(i);
            b(i) = -b(i);
        }
    }

    const Eigen::Index total = n + m;
    Eigen::MatrixXd table(m, total);
    table << a, Eigen::MatrixXd::Identity(m, m);
    std::vector<Eigen::Index> basis(m);
    for (Eigen::Index i = 0; i < m; ++i) basis[i] = n + i;
    Eigen::VectorXd rhs = b;

    auto pivot = [&](Eigen::Index row, Eigen::Index col) {
        const double scale = table(row, col);
        table.row(row) /= scale;
        rhs(row) /= scale;
        for (Eigen::Index i = 0; i < m; ++i) {
            if (i == row) continue;
            const double factor = table(i, col);
            if (factor == 0.0) continue;
            table.row(i) -= factor * table.row(row);
            rhs(i) -= factor * rhs(row);
        }
        basis[row] = col;
    };

    auto run_phase = [&](const Eigen::VectorXd& costs, Eigen::Index active_cols) {
        for (long guard = 0; guard < 100000; ++guard) {
            Eigen::VectorXd dual = Eigen::VectorXd::Zero(m);
            for (Eigen::Index i = 0; i < m; ++i) dual(i) = costs(basis[i]);
            Eigen::Index entering = -1;
            for (Eigen::Index j = 0; j < active_cols; ++j) {
                const double reduced = costs(j) - dual.dot(table.col(j));
                if (reduced < -1e-10) {
                    entering = j;  // Bland: smallest index
                    break;
                }
            }
            if (entering < 0) return;
            Eigen::Index leaving = -1;
            double best_ratio = 0.0;
            for (Eigen::Index i = 0; i < m; ++i) {
                if (table(i, entering) > 1e-12) {
                    const double ratio = rhs(i) / table(i, entering);
                    if (leaving < 0 || ratio < best_ratio - 1e-15 ||
                        (std::abs(ratio - best_ratio) <= 1e-15 && basis[i] < basis[leaving])) {
                        leaving = i;
                        best_ratio = ratio;
                    }
                }
            }
            if (leaving < 0) throw NumericFailure("simplex oracle: unbounded problem");
            pivot(leaving, entering);
        }
        throw NumericFailure("simplex oracle: pivot limit reached");
    };

    Eigen::VectorXd phase1 = Eigen::VectorXd::Zero(total);
    phase1.tail(m).setOnes();
    run_phase(phase1, total);
    double artificial = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) {
        if (basis[i] >= n) artificial += rhs(i);
    }
    if (artificial > 1e-8) throw NumericFailure("simplex oracle: infeasible problem");
    // Drive leftover artificial variables out of the basis when possible.
    for (Eigen::Index i = 0; i < m; ++i) {
        if (basis[i] < n) continue;
        for (Eigen::Index j = 0; j < n; ++j) {
            if (std::abs(table(i, j)) > 1e-10) {
                pivot(i, j);
                break;
            }
        }
    }

    Eigen::VectorXd phase2 = Eigen::VectorXd::Zero(total);
    phase2.head(n) = c;
    run_phase(phase2, n);

    Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
    for (Eigen::Index i = 0; i < m; ++i) {
        if (basis[i] < n) x(basis[i]) = rhs(i);
    }
    return x;
}

Eigen::VectorXd basis_pursuit_lp(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
    const Eigen::Index d = x.cols();
    Eigen::MatrixXd split(x.rows(), 2 * d);
    split << x, -x;
    const Eigen::VectorXd solution =
        simplex_solve(split, y, Eigen::VectorXd::Ones(2 * d));
    return solution.head(d) - solution.tail(d);
}

Eigen::MatrixXd nuclear_norm_subgradient(const Eigen::MatrixXd& start,
                                         const std::vector<std::pair<int, int>>& observed,
                                         const std::vector<double>& values, long iterations,
                                         double step_scale) {
    Eigen::MatrixXd z = start;
    for (std::size_t i = 0; i < observed.size(); ++i) {
        z(observed[i].first, observed[i].second) = values[i];
    }
    Eigen::MatrixXd best = z;
    double best_norm = std::numeric_limits<double>::infinity();
    for (long k = 1; k <= iterations; ++k) {
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(z, Eigen::ComputeThinU | Eigen::ComputeThinV);
        const double nuclear = svd.singularValues().sum();
        if (nuclear < best_norm) {
            best_norm = nuclear;
            best = z;
        }
        const Eigen::MatrixXd subgrad = svd.matrixU() * svd.matrixV().transpose();
        z -= (step_scale / std::sqrt(static_cast<double>(k))) * subgrad;
        for (std::size_t i = 0; i < observed.size(); ++i) {
            z(observed[i].first, observed[i].second) = values[i];
        }
    }
    return best;
}

}  // namespace linrfm::testing
