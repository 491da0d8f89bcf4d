#include <Eigen/QR>
#include <Eigen/SVD>
#include <cmath>
#include <limits>

#include "linrfm/baselines.hpp"
#include "linrfm/spectral.hpp"

namespace linrfm {

Eigen::MatrixXd LinearNet::end_to_end() const {
    check_shapes();
    Eigen::MatrixXd product = weights[0];
    for (int l = 1; l < depth(); ++l) product = weights[l] * product;
    return product;
}

void LinearNet::check_shapes() const {
    if (weights.empty()) throw ShapeMismatch("LinearNet: no layers");
    for (int l = 1; l < depth(); ++l) {
        if (weights[l].cols() != weights[l - 1].rows()) {
            throw ShapeMismatch("LinearNet: layer " + std::to_string(l + 1) +
                                " does not compose with layer " + std::to_string(l));
        }
    }
}

namespace {

double gaussian(Rng& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    return normal(rng);
}

Eigen::MatrixXd gaussian_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = gaussian(rng);
    }
    return m;
}

// Orthonormal columns from a QR of a Gaussian draw, sign-fixed.
Eigen::MatrixXd random_orthonormal(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(gaussian_matrix(rows, cols, rng));
    Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(rows, cols);
    const Eigen::MatrixXd r = qr.matrixQR().topRows(cols).triangularView<Eigen::Upper>();
    for (Eigen::Index j = 0; j < cols; ++j) {
        if (r(j, j) < 0.0) q.col(j) = -q.col(j);
    }
    return q;
}

}  // namespace

LinearNet balanced_init(int depth, int d1, int d2, int width, double scale, std::uint64_t seed) {
    if (depth < 1) throw ShapeMismatch("balanced_init: depth must be >= 1");
    const int m = std::min(d1, d2);
    if (depth > 1 && width < m) {
        throw ShapeMismatch("balanced_init: width must be >= min(d1, d2)");
    }
    Rng rng = make_rng(seed);
    const Eigen::MatrixXd target = scale * gaussian_matrix(d1, d2, rng);

    LinearNet net;
    if (depth == 1) {
        net.weights.push_back(target);
        return net;
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(target, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd roots =
        svd.singularValues().array().pow(1.0 / static_cast<double>(depth));

    // Shared orthogonal factors and matched singular-value depth-th roots make
    // adjacent Gram matrices equal by construction.
    std::vector<Eigen::MatrixXd> q(depth - 1);
    for (int l = 0; l < depth - 1; ++l) q[l] = random_orthonormal(width, m, rng);

    net.weights.resize(depth);
    net.weights[0] = q[0] * roots.asDiagonal() * svd.matrixV().transpose();
    for (int l = 1; l < depth - 1; ++l) {
        net.weights[l] = q[l] * roots.asDiagonal() * q[l - 1].transpose();
    }
    net.weights[depth - 1] = svd.matrixU() * roots.asDiagonal() * q[depth - 2].transpose();
    return net;
}

LinearNet gaussian_init(int depth, int d1, int d2, int width, double std_dev,
                        std::uint64_t seed) {
    if (depth < 1) throw ShapeMismatch("gaussian_init: depth must be >= 1");
    Rng rng = make_rng(seed);
    LinearNet net;
    net.weights.resize(depth);
    for (int l = 0; l < depth; ++l) {
        const Eigen::Index rows = (l == depth - 1) ? d1 : width;
        const Eigen::Index cols = (l == 0) ? d2 : width;
        net.weights[l] = std_dev * gaussian_matrix(rows, cols, rng);
    }
    net.check_shapes();
    return net;
}

double default_net_init_std(int depth, int d) {
    return std::pow(0.001, 1.0 / static_cast<double>(depth)) / std::sqrt(static_cast<double>(d));
}

std::vector<Eigen::MatrixXd> linear_net_gradients(const LinearMeasurements& meas,
                                                  const LinearNet& net) {
    const int depth = net.depth();
    const Eigen::VectorXd residual = meas.apply(net.end_to_end()) - meas.labels();
    const Eigen::MatrixXd r = meas.adjoint(residual);

    // Suffix products W^(L)...W^(l+1) and prefix products W^(l-1)...W^(1).
    std::vector<Eigen::MatrixXd> suffix(depth), prefix(depth);
    suffix[depth - 1] = Eigen::MatrixXd::Identity(net.weights[depth - 1].rows(),
                                                  net.weights[depth - 1].rows());
    for (int l = depth - 2; l >= 0; --l) suffix[l] = suffix[l + 1] * net.weights[l + 1];
    prefix[0] = Eigen::MatrixXd::Identity(net.weights[0].cols(), net.weights[0].cols());
    for (int l = 1; l < depth; ++l) prefix[l] = net.weights[l - 1] * prefix[l - 1];

    std::vector<Eigen::MatrixXd> grads(depth);
    for (int l = 0; l < depth; ++l) {
        grads[l] = suffix[l].transpose() * r * prefix[l].transpose();
    }
    return grads;
}

double balancedness_defect(const LinearNet& net) {
    double worst = 0.0;
    for (int l = 0; l + 1 < net.depth(); ++l) {
        const Eigen::MatrixXd lhs = net.weights[l] * net.weights[l].transpose();
        const Eigen::MatrixXd rhs = net.weights[l + 1].transpose() * net.weights[l + 1];
        worst = std::max(worst, (lhs - rhs).norm());
    }
    return worst;
}

double nfa_defect(const LinearNet& net, int layer) {
    const int depth = net.depth();
    if (layer < 1 || layer > depth) throw ConfigError("nfa_defect: layer out of range");
    if (layer == depth) return 0.0;  // power 1, identical expressions

    Eigen::MatrixXd suffix = net.weights[layer - 1];
    for (int l = layer; l < depth; ++l) suffix = net.weights[l] * suffix;
    const SymmetricMatrix agop(suffix.transpose() * suffix);
    const double power = 1.0 / static_cast<double>(depth - layer + 1);
    const Eigen::MatrixXd scaled =
        spectral_apply(agop, [power](double s) { return std::pow(s, power); }).m();
    const Eigen::MatrixXd lhs =
        net.weights[layer - 1].transpose() * net.weights[layer - 1];
    const double denom = lhs.norm();
    return denom > 0.0 ? (lhs - scaled).norm() / denom : (lhs - scaled).norm();
}

NetTrainResult train_linear_net(const LinearMeasurements& meas, LinearNet net,
                                const TrainConfig& cfg,
                                const std::function<double(const Eigen::MatrixXd&)>& mse_eval) {
    net.check_shapes();
    if (net.end_to_end().rows() != meas.rows() || net.weights[0].cols() != meas.cols()) {
        throw ShapeMismatch("train_linear_net: network does not match the measurement shape");
    }

    NetTrainResult out;
    out.trace.columns = {"step", "loss"};
    if (mse_eval) out.trace.columns.push_back("test_mse");
    if (cfg.track_defects) {
        out.trace.columns.push_back("bal_defect");
        out.trace.columns.push_back("nfa_defect_max");
    }

    const int depth = net.depth();
    std::vector<Eigen::MatrixXd> accum;
    if (cfg.optimizer == TrainConfig::Optimizer::RMSProp) {
        accum.reserve(depth);
        for (const auto& w : net.weights) accum.push_back(Eigen::MatrixXd::Zero(w.rows(), w.cols()));
    }

    auto record = [&](long step) {
        const Eigen::MatrixXd e2e = net.end_to_end();
        const double loss = 0.5 * (meas.apply(e2e) - meas.labels()).squaredNorm();
        std::vector<double> row{static_cast<double>(step), loss};
        double mse = std::numeric_limits<double>::quiet_NaN();
        if (mse_eval) {
            mse = mse_eval(e2e);
            row.push_back(mse);
        }
        if (cfg.track_defects) {
            row.push_back(balancedness_defect(net));
            double worst_nfa = 0.0;
            for (int l = 1; l <= depth; ++l) worst_nfa = std::max(worst_nfa, nfa_defect(net, l));
            row.push_back(worst_nfa);
        }
        out.trace.add_row(std::move(row));
        if (!(loss <= cfg.divergence_threshold)) {  // catches NaN as well
            throw Divergence("train_linear_net: loss exceeded divergence threshold");
        }
        return mse;
    };

    record(0);
    for (long step = 1; step <= cfg.steps; ++step) {
        const std::vector<Eigen::MatrixXd> grads = linear_net_gradients(meas, net);
        if (cfg.optimizer == TrainConfig::Optimizer::GD) {
            for (int l = 0; l < depth; ++l) net.weights[l] -= cfg.lr * grads[l];
        } else {
            for (int l = 0; l < depth; ++l) {
                accum[l] = cfg.rms_decay * accum[l] +
                           (1.0 - cfg.rms_decay) * grads[l].cwiseProduct(grads[l]);
                net.weights[l] -=
                    cfg.lr * grads[l].cwiseQuotient(
                                 (accum[l].cwiseSqrt().array() + cfg.rms_stabilizer).matrix());
            }
        }
        out.steps_run = step;
        if (step % cfg.eval_every == 0 || step == cfg.steps) {
            const double mse = record(step);
            if (cfg.early_stop_mse > 0.0 && mse_eval && mse < cfg.early_stop_mse) {
                out.early_stopped = true;
                break;
            }
        }
    }
    out.net = std::move(net);
    return out;
}

Eigen::VectorXd diag_net_gradient(const SparseRegressionProblem& p,
                                  const std::vector<Eigen::VectorXd>& layers, int layer) {
    const auto depth = static_cast<int>(layers.size());
    if (layer < 1 || layer > depth) throw ConfigError("diag_net_gradient: layer out of range");
    Eigen::VectorXd effective = layers[0];
    for (int l = 1; l < depth; ++l) effective = effective.cwiseProduct(layers[l]);
    const Eigen::VectorXd residual = p.design * effective - p.labels;
    Eigen::VectorXd others = Eigen::VectorXd::Ones(p.d());
    for (int l = 0; l < depth; ++l) {
        if (l != layer - 1) others = others.cwiseProduct(layers[l]);
    }
    // Half mean square loss.
    return (p.design.transpose() * residual).cwiseProduct(others) /
           static_cast<double>(p.n());
}

DiagNetTrainResult train_diag_net(const SparseRegressionProblem& p, int depth,
                                  const TrainConfig& cfg, double init_std, std::uint64_t seed) {
    if (depth < 1) throw ShapeMismatch("train_diag_net: depth must be >= 1");
    Rng rng = make_rng(seed);
    std::vector<Eigen::VectorXd> layers(depth);
    for (int l = 0; l < depth; ++l) {
        layers[l].resize(p.d());
        for (int j = 0; j < p.d(); ++j) layers[l](j) = init_std * gaussian(rng);
    }

    DiagNetTrainResult out;
    out.trace.columns = {"step", "loss", "test_mse"};

    std::vector<Eigen::VectorXd> accum;
    if (cfg.optimizer == TrainConfig::Optimizer::RMSProp) {
        accum.assign(depth, Eigen::VectorXd::Zero(p.d()));
    }

    auto effective = [&layers, depth]() {
        Eigen::VectorXd v = layers[0];
        for (int l = 1; l < depth; ++l) v = v.cwiseProduct(layers[l]);
        return v;
    };

    for (long step = 1; step <= cfg.steps; ++step) {
        std::vector<Eigen::VectorXd> grads(depth);
        for (int l = 1; l <= depth; ++l) grads[l - 1] = diag_net_gradient(p, layers, l);
        for (int l = 0; l < depth; ++l) {
            if (cfg.optimizer == TrainConfig::Optimizer::GD) {
                layers[l] -= cfg.lr * grads[l];
            } else {
                accum[l] = cfg.rms_decay * accum[l] +
                           (1.0 - cfg.rms_decay) * grads[l].cwiseProduct(grads[l]);
                layers[l] -= cfg.lr * grads[l].cwiseQuotient(
                                 (accum[l].cwiseSqrt().array() + cfg.rms_stabilizer).matrix());
            }
        }
        out.steps_run = step;
        if (step % cfg.eval_every == 0 || step == cfg.steps) {
            const Eigen::VectorXd v = effective();
            const double loss =
                0.5 * (p.design * v - p.labels).squaredNorm() / static_cast<double>(p.n());
            const double mse = p.true_weights ? test_mse(v, p) : std::numeric_limits<double>::quiet_NaN();
            out.trace.add_row({static_cast<double>(step), loss, mse});
            if (!(loss <= cfg.divergence_threshold)) {
                throw Divergence("train_diag_net: loss exceeded divergence threshold");
            }
            if (cfg.early_stop_mse > 0.0 && p.true_weights && mse < cfg.early_stop_mse) {
                out.early_stopped = true;
                break;
            }
        }
    }
    out.weights = effective();
    out.layers = std::move(layers);
    return out;
}

}  // namespace linrfm
