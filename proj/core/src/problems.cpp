#include "linrfm/problems.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_set>

namespace linrfm {

namespace {

double gaussian(Rng& rng) {
    // Fresh distribution per draw: normal_distribution caches a spare value,
    // which must not leak between independent streams.
    std::normal_distribution<double> normal(0.0, 1.0);
    return normal(rng);
}

std::uint64_t coord_key(int row, int col, int d2) {
    return static_cast<std::uint64_t>(row) * static_cast<std::uint64_t>(d2) +
           static_cast<std::uint64_t>(col);
}

constexpr std::uint64_t kEvalStream = 0x45564131ULL;   // held-out evaluation draws
constexpr std::uint64_t kNoiseStream = 0x4e4f4953ULL;  // label-noise draws

}  // namespace

void CompletionProblem::validate() const {
    if (d1 < 1 || d2 < 1) throw InvalidDims("CompletionProblem: dimensions must be >= 1");
    std::unordered_set<std::uint64_t> seen;
    seen.reserve(observations.size());
    for (const Observation& obs : observations) {
        if (obs.row < 0 || obs.row >= d1 || obs.col < 0 || obs.col >= d2) {
            throw FormatError("CompletionProblem: observation index out of range");
        }
        if (!seen.insert(coord_key(obs.row, obs.col, d2)).second) {
            throw FormatError("CompletionProblem: duplicate observation coordinate");
        }
    }
    if (ground_truth) {
        if (ground_truth->rows() != d1 || ground_truth->cols() != d2) {
            throw InvalidDims("CompletionProblem: ground truth shape mismatch");
        }
        if (!noisy) {
            for (const Observation& obs : observations) {
                const double truth = (*ground_truth)(obs.row, obs.col);
                if (std::abs(obs.value - truth) > 1e-10 * std::max(1.0, std::abs(truth))) {
                    throw FormatError("CompletionProblem: clean observation disagrees with ground truth");
                }
            }
        }
    }
}

Eigen::VectorXd CompletionProblem::observed_values() const {
    Eigen::VectorXd v(observations.size());
    for (std::size_t i = 0; i < observations.size(); ++i) v(i) = observations[i].value;
    return v;
}

void SensingProblem::validate() const {
    const auto n = static_cast<Eigen::Index>(sensing_matrices.size());
    if (labels.size() != n) throw InvalidDims("SensingProblem: label count mismatch");
    if (n == 0) return;
    const Eigen::Index d1 = sensing_matrices[0].rows();
    const Eigen::Index d2 = sensing_matrices[0].cols();
    for (const auto& a : sensing_matrices) {
        if (a.rows() != d1 || a.cols() != d2) {
            throw InvalidDims("SensingProblem: sensing matrix shape mismatch");
        }
    }
    if (ground_truth && !noisy) {
        for (Eigen::Index i = 0; i < n; ++i) {
            const double y = (sensing_matrices[i].transpose() * (*ground_truth)).trace();
            if (std::abs(y - labels(i)) > 1e-10 * std::max(1.0, std::abs(y))) {
                throw FormatError("SensingProblem: clean label disagrees with ground truth");
            }
        }
    }
}

void SparseRegressionProblem::validate() const {
    if (design.rows() != labels.size()) {
        throw InvalidDims("SparseRegressionProblem: label count mismatch");
    }
    if (true_weights) {
        if (true_weights->size() != design.cols()) {
            throw InvalidDims("SparseRegressionProblem: weight dimension mismatch");
        }
        if (!noisy) {
            const Eigen::VectorXd clean = design * (*true_weights);
            const double scale = std::max(1.0, clean.norm());
            if ((clean - labels).norm() > 1e-10 * scale) {
                throw FormatError("SparseRegressionProblem: labels disagree with X w*");
            }
        }
    }
}

SparseRegressionProblem gen_sparse_regression(int n, int d, int r, std::uint64_t seed) {
    if (n < 1 || d < 1 || r < 1 || r > d) {
        throw InvalidDims("gen_sparse_regression: need n >= 1 and 1 <= r <= d");
    }
    Rng rng = make_rng(seed);
    SparseRegressionProblem p;
    p.design.resize(n, d);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < d; ++j) p.design(i, j) = gaussian(rng);
    }
    Eigen::VectorXd w = Eigen::VectorXd::Zero(d);
    std::uniform_real_distribution<double> uniform(0.5, 1.0);
    for (int i = 0; i < r; ++i) w(i) = uniform(rng);
    p.labels = p.design * w;
    p.true_weights = w;
    p.sparsity = r;
    p.seed = seed;
    return p;
}

CompletionProblem gen_low_rank_completion(int d, int r, int n_obs, std::uint64_t seed) {
    if (d < 1 || r < 1 || r > d) throw InvalidDims("gen_low_rank_completion: need 1 <= r <= d");
    if (n_obs < 0 || static_cast<long long>(n_obs) > static_cast<long long>(d) * d) {
        throw InvalidDims("gen_low_rank_completion: n_obs out of range");
    }
    Rng rng = make_rng(seed);
    Eigen::MatrixXd u(d, r), v(d, r);
    for (int i = 0; i < d; ++i) {
        for (int j = 0; j < r; ++j) u(i, j) = gaussian(rng);
    }
    for (int i = 0; i < d; ++i) {
        for (int j = 0; j < r; ++j) v(i, j) = gaussian(rng);
    }
    Eigen::MatrixXd y = u * v.transpose();
    y *= static_cast<double>(d) / y.norm();

    // Partial Fisher-Yates over all d^2 coordinates gives a uniform sample
    // without replacement.
    std::vector<std::uint32_t> coords(static_cast<std::size_t>(d) * d);
    std::iota(coords.begin(), coords.end(), 0u);
    CompletionProblem p;
    p.d1 = d;
    p.d2 = d;
    p.observations.reserve(n_obs);
    for (int k = 0; k < n_obs; ++k) {
        std::uniform_int_distribution<std::size_t> pick(k, coords.size() - 1);
        std::swap(coords[k], coords[pick(rng)]);
        const int row = static_cast<int>(coords[k] / d);
        const int col = static_cast<int>(coords[k] % d);
        p.observations.push_back({row, col, y(row, col)});
    }
    p.ground_truth = std::move(y);
    p.rank_hint = r;
    p.seed = seed;
    return p;
}

SensingProblem gen_gaussian_sensing(const Eigen::MatrixXd& ground_truth, int n_measurements,
                                    std::uint64_t seed) {
    if (n_measurements < 1) throw InvalidDims("gen_gaussian_sensing: need n >= 1");
    Rng rng = make_rng(seed);
    SensingProblem p;
    p.sensing_matrices.reserve(n_measurements);
    p.labels.resize(n_measurements);
    for (int i = 0; i < n_measurements; ++i) {
        Eigen::MatrixXd a(ground_truth.rows(), ground_truth.cols());
        for (Eigen::Index row = 0; row < a.rows(); ++row) {
            for (Eigen::Index col = 0; col < a.cols(); ++col) a(row, col) = gaussian(rng);
        }
        p.labels(i) = (a.transpose() * ground_truth).trace();
        p.sensing_matrices.push_back(std::move(a));
    }
    p.ground_truth = ground_truth;
    p.seed = seed;
    return p;
}

CompletionProblem add_label_noise(const CompletionProblem& p, double sigma, std::uint64_t seed) {
    if (sigma < 0.0) throw ConfigError("add_label_noise: sigma must be >= 0");
    CompletionProblem out = p;
    if (sigma == 0.0) return out;
    Rng rng = make_rng(seed, kNoiseStream);
    std::normal_distribution<double> noise(0.0, sigma);
    for (Observation& obs : out.observations) obs.value += noise(rng);
    out.noisy = true;
    return out;
}

SparseRegressionProblem add_label_noise(const SparseRegressionProblem& p, double sigma,
                                        std::uint64_t seed) {
    if (sigma < 0.0) throw ConfigError("add_label_noise: sigma must be >= 0");
    SparseRegressionProblem out = p;
    if (sigma == 0.0) return out;
    Rng rng = make_rng(seed, kNoiseStream);
    std::normal_distribution<double> noise(0.0, sigma);
    for (Eigen::Index i = 0; i < out.labels.size(); ++i) out.labels(i) += noise(rng);
    out.noisy = true;
    return out;
}

double test_mse(const Eigen::MatrixXd& estimate, const CompletionProblem& p) {
    if (!p.ground_truth) throw MissingGroundTruth("test_mse: completion problem has no ground truth");
    if (estimate.rows() != p.d1 || estimate.cols() != p.d2) {
        throw InvalidDims("test_mse: estimate shape mismatch");
    }
    std::vector<bool> observed(static_cast<std::size_t>(p.d1) * p.d2, false);
    for (const Observation& obs : p.observations) {
        observed[coord_key(obs.row, obs.col, p.d2)] = true;
    }
    double sum = 0.0;
    long long count = 0;
    for (int i = 0; i < p.d1; ++i) {
        for (int j = 0; j < p.d2; ++j) {
            if (observed[coord_key(i, j, p.d2)]) continue;
            const double diff = estimate(i, j) - (*p.ground_truth)(i, j);
            sum += diff * diff;
            ++count;
        }
    }
    return count == 0 ? 0.0 : sum / static_cast<double>(count);
}

double test_mse(const Eigen::VectorXd& weights, const SparseRegressionProblem& p, int test_size) {
    if (!p.true_weights) throw MissingGroundTruth("test_mse: regression problem has no true weights");
    if (weights.size() != p.design.cols()) throw InvalidDims("test_mse: weight dimension mismatch");
    if (test_size < 1) throw ConfigError("test_mse: test_size must be >= 1");
    Rng rng = make_rng(p.seed, kEvalStream);
    const Eigen::VectorXd diff = weights - *p.true_weights;
    double sum = 0.0;
    Eigen::VectorXd x(diff.size());
    for (int t = 0; t < test_size; ++t) {
        for (Eigen::Index j = 0; j < x.size(); ++j) x(j) = gaussian(rng);
        const double err = x.dot(diff);
        sum += err * err;
    }
    return sum / static_cast<double>(test_size);
}

namespace {

void write_matrix_rows(std::ofstream& out, const Eigen::MatrixXd& m) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if (j > 0) out << ' ';
            out << format_double(m(i, j));
        }
        out << '\n';
    }
}

std::ofstream open_for_write(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    return out;
}

}  // namespace

void save_problem(const CompletionProblem& p, const std::string& path) {
    p.validate();
    std::ofstream out = open_for_write(path);
    out << "completion " << p.d1 << ' ' << p.d2 << ' ' << p.observations.size();
    if (p.rank_hint) out << " rank " << *p.rank_hint;
    if (p.noisy) out << " noisy";
    out << '\n';
    for (const Observation& obs : p.observations) {
        out << obs.row << ' ' << obs.col << ' ' << format_double(obs.value) << '\n';
    }
    if (p.ground_truth) {
        out << "# ground_truth\n";
        write_matrix_rows(out, *p.ground_truth);
    }
    if (!out) throw IoError("write failed: " + path);
}

void save_problem(const SparseRegressionProblem& p, const std::string& path) {
    p.validate();
    std::ofstream out = open_for_write(path);
    out << "regression " << p.design.rows() << ' ' << p.design.cols();
    if (p.sparsity) out << " rank " << *p.sparsity;
    if (p.noisy) out << " noisy";
    out << '\n';
    for (Eigen::Index i = 0; i < p.design.rows(); ++i) {
        for (Eigen::Index j = 0; j < p.design.cols(); ++j) {
            out << format_double(p.design(i, j)) << ' ';
        }
        out << format_double(p.labels(i)) << '\n';
    }
    if (p.true_weights) {
        out << "# ground_truth\n";
        write_matrix_rows(out, p.true_weights->transpose());
    }
    if (!out) throw IoError("write failed: " + path);
}

namespace {

Eigen::MatrixXd read_matrix_rows(std::ifstream& in, Eigen::Index rows, Eigen::Index cols) {
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        std::string line;
        if (!std::getline(in, line)) throw FormatError("problem file: truncated matrix block");
        std::istringstream row(line);
        for (Eigen::Index j = 0; j < cols; ++j) {
            if (!(row >> m(i, j))) throw FormatError("problem file: malformed matrix row");
        }
    }
    return m;
}

}  // namespace

Problem load_problem(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open for reading: " + path);
    std::string header;
    if (!std::getline(in, header)) throw FormatError("problem file: missing header");
    std::istringstream head(header);
    std::string kind;
    head >> kind;

    auto parse_header_tail = [&head](std::optional<int>& rank, bool& noisy) {
        std::string token;
        while (head >> token) {
            if (token == "rank") {
                int r = 0;
                if (!(head >> r)) throw FormatError("problem file: malformed rank field");
                rank = r;
            } else if (token == "noisy") {
                noisy = true;
            } else {
                throw FormatError("problem file: unknown header token '" + token + "'");
            }
        }
    };

    if (kind == "completion") {
        CompletionProblem p;
        long long n_obs = -1;
        if (!(head >> p.d1 >> p.d2 >> n_obs) || n_obs < 0) {
            throw FormatError("problem file: malformed completion header");
        }
        parse_header_tail(p.rank_hint, p.noisy);
        p.observations.reserve(static_cast<std::size_t>(n_obs));
        for (long long k = 0; k < n_obs; ++k) {
            std::string line;
            if (!std::getline(in, line)) throw FormatError("problem file: truncated observations");
            std::istringstream row(line);
            Observation obs;
            if (!(row >> obs.row >> obs.col >> obs.value)) {
                throw FormatError("problem file: malformed observation line");
            }
            p.observations.push_back(obs);
        }
        std::string marker;
        if (std::getline(in, marker) && !marker.empty()) {
            if (marker != "# ground_truth") throw FormatError("problem file: unexpected section");
            p.ground_truth = read_matrix_rows(in, p.d1, p.d2);
        }
        p.validate();
        return p;
    }
    if (kind == "regression") {
        SparseRegressionProblem p;
        int n = 0, d = 0;
        if (!(head >> n >> d) || n < 1 || d < 1) {
            throw FormatError("problem file: malformed regression header");
        }
        parse_header_tail(p.sparsity, p.noisy);
        p.design.resize(n, d);
        p.labels.resize(n);
        for (int i = 0; i < n; ++i) {
            std::string line;
            if (!std::getline(in, line)) throw FormatError("problem file: truncated design rows");
            std::istringstream row(line);
            for (int j = 0; j < d; ++j) {
                if (!(row >> p.design(i, j))) throw FormatError("problem file: malformed design row");
            }
            if (!(row >> p.labels(i))) throw FormatError("problem file: missing label");
        }
        std::string marker;
        if (std::getline(in, marker) && !marker.empty()) {
            if (marker != "# ground_truth") throw FormatError("problem file: unexpected section");
            p.true_weights = read_matrix_rows(in, 1, d).transpose();
        }
        p.validate();
        return p;
    }
    throw FormatError("problem file: unknown kind '" + kind + "'");
}

}  // namespace linrfm
