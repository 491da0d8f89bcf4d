#include "linrfm/mx2_oracle.hpp"

#include <cmath>
#include <limits>

#include "linrfm/lin_rfm.hpp"
#include "linrfm/spectral.hpp"

namespace linrfm {

double k_step(double k, double a, double b, double s) {
    const double cross = a * b + k * s;
    const double numerator = (a * a + b * b + s + k * k * s) * cross;
    const double denominator = cross * cross + (s + b * b) * (s + b * b);
    return numerator / denominator;
}

namespace {

double k_step_derivative_fd(double x, double a, double b, double s) {
    const double h = 1e-7 * std::max(1.0, std::abs(x));
    return (k_step(x + h, a, b, s) - k_step(x - h, a, b, s)) / (2.0 * h);
}

void check_degenerate(double a, double b, double s) {
    if (a == 0.0 || b == 0.0 || s == 0.0) {
        throw DegenerateInput("mx2 oracle: requires a, b, s all nonzero");
    }
}

}  // namespace

FixedPointReport k_fixed_points(double a, double b, double s) {
    check_degenerate(a, b, s);
    FixedPointReport report;

    const double attractor_loc = a / b;
    const double attractor_deriv = s / (b * b + s);
    const double repeller_loc = -b * (a * a + b * b + s) / (a * s);
    const double repeller_deriv = (a * a + b * b + s) / (b * b + s);

    for (const auto& [loc, deriv] : {std::pair{attractor_loc, attractor_deriv},
                                     std::pair{repeller_loc, repeller_deriv}}) {
        const double fd = k_step_derivative_fd(loc, a, b, s);
        if (std::abs(fd - deriv) > 1e-3 * std::max(1.0, std::abs(deriv))) {
            throw NumericFailure("k_fixed_points: analytic derivative disagrees with finite differences");
        }
        FixedPoint fp;
        fp.location = loc;
        fp.derivative = deriv;
        fp.classification = std::abs(deriv) < 1.0 ? FixedPointClass::Attractor
                                                  : FixedPointClass::Repeller;
        report.fixed_points.push_back(fp);
    }
    for (double inf_loc : {std::numeric_limits<double>::infinity(),
                           -std::numeric_limits<double>::infinity()}) {
        FixedPoint fp;
        fp.location = inf_loc;
        fp.derivative = 1.0;
        fp.classification = FixedPointClass::Neutral;
        report.fixed_points.push_back(fp);
    }
    return report;
}

double k_first(const Eigen::Matrix2d& m0) {
    const double u = m0(0, 0);
    const double v = m0(1, 1);
    const double eps = m0(0, 1);
    return (u * eps + v * eps) / (eps * eps + v * v);
}

bool basin_predicate(double a, double b, double s, const Eigen::Matrix2d& m0) {
    check_degenerate(a, b, s);
    const double threshold = -b * (a * a + b * b + s) / (a * s);
    return k_first(m0) > threshold;
}

std::pair<double, double> xy_step(double x, double y, double a, double b, double c, double d) {
    const double c2 = c * c;
    const double d2 = d * d;
    const double gram_11 = a * a + c2 + y * y * d2;       // A
    const double gram_12 = a * b + x * c2 + y * d2;       // B
    const double gram_22 = b * b + d2 + x * x * c2;       // C
    const double total = gram_11 + gram_22;               // a^2+b^2+c^2+d^2+x^2 c^2+y^2 d^2
    const double numerator = total * gram_12;
    return {numerator / (gram_11 * gram_11 + gram_12 * gram_12),
            numerator / (gram_12 * gram_12 + gram_22 * gram_22)};
}

double xy_attractor_eigenvalue(double a, double b, double c, double d) {
    if (a <= 0.0 || b <= 0.0) {
        throw DegenerateInput("xy_attractor_eigenvalue: requires a, b > 0");
    }
    const double a2 = a * a, b2 = b * b, c2 = c * c, d2 = d * d;
    return (a2 * d2 + b2 * c2) / (a2 * b2 + a2 * d2 + b2 * c2);
}

double divergence_step(double a_t) { return (a_t * a_t * a_t + 2.0 * a_t) / (a_t * a_t + 1.0); }

double divergence_y21(double a_t) { return a_t + a_t / (a_t * a_t + 1.0); }

LemmaF1Report lemma_f1_check(const CompletionProblem& p, int max_iters) {
    p.validate();
    if (p.d1 != p.d2) throw PatternMismatch("lemma_f1_check: requires a square problem");
    if (!p.ground_truth) throw MissingGroundTruth("lemma_f1_check: requires ground truth");
    const Eigen::MatrixXd& y = *p.ground_truth;

    const Eigen::VectorXd sigma = singular_values(y);
    int rank = p.rank_hint.value_or(0);
    if (rank == 0) {
        const double tol = 1e-8 * std::max(1.0, sigma(0));
        for (Eigen::Index i = 0; i < sigma.size(); ++i) {
            if (sigma(i) > tol) rank = static_cast<int>(i) + 1;
        }
    }
    if (rank < 1) throw PatternMismatch("lemma_f1_check: zero ground truth");

    // Each column may contain at most rank-1 zeros.
    const double zero_tol = 1e-12 * std::max(1.0, y.cwiseAbs().maxCoeff());
    for (int j = 0; j < p.d2; ++j) {
        int zeros = 0;
        for (int i = 0; i < p.d1; ++i) {
            if (std::abs(y(i, j)) <= zero_tol) ++zeros;
        }
        if (zeros > rank - 1) {
            throw PatternMismatch("lemma_f1_check: a column has too many zeros");
        }
    }

    // rank fully observed rows; every other row observed exactly rank times.
    std::vector<int> per_row(p.d1, 0);
    for (const Observation& obs : p.observations) ++per_row[obs.row];
    int full_rows = 0;
    for (int i = 0; i < p.d1; ++i) {
        if (per_row[i] == p.d2) {
            ++full_rows;
        } else if (per_row[i] != rank) {
            throw PatternMismatch("lemma_f1_check: partially observed row without exactly r observations");
        }
    }
    if (full_rows != rank) {
        throw PatternMismatch("lemma_f1_check: expected exactly r fully observed rows");
    }

    RfmConfig cfg;
    cfg.phi = SpectralFunction::identity();
    cfg.ridge = 0.0;
    cfg.tol = 1e-10;
    cfg.max_iters = max_iters;

    LemmaF1Report report;
    try {
        RfmRunResult run = lin_rfm_run(p, cfg);
        report.iterations = run.iterations;
        if (!run.converged) return report;
        report.relative_error = (run.state.Z - y).norm() / y.norm();
        if (report.relative_error >= 1e-6) {
            throw NumericFailure("lemma_f1_check: converged run failed to recover the ground truth");
        }
        report.verdict = RecoveryVerdict::Recovered;
    } catch (const SingularSystem&) {
        // Degenerate interpolation along the trajectory; the lemma is
        // conditional on convergence, so this is inconclusive.
        report.verdict = RecoveryVerdict::Inconclusive;
    }
    return report;
}

namespace {

std::string class_name(FixedPointClass c) {
    switch (c) {
        case FixedPointClass::Attractor: return "attractor";
        case FixedPointClass::Repeller: return "repeller";
        case FixedPointClass::Neutral: return "neutral";
    }
    return "neutral";
}

}  // namespace

void write_fixed_point_report(std::ostream& out, const Mx2Problem& problem,
                              double algorithm_deviation) {
    out << "setting,fixed_point,derivative,class,algorithm_deviation\n";
    if (problem.pattern == Mx2Problem::Pattern::ColumnTwoObserved) {
        const FixedPointReport report = k_fixed_points(problem.a, problem.b, problem.s);
        const std::string setting = "k[a=" + format_double(problem.a) +
                                    ";b=" + format_double(problem.b) +
                                    ";s=" + format_double(problem.s) + "]";
        for (const FixedPoint& fp : report.fixed_points) {
            out << setting << ',' << format_double(fp.location) << ','
                << format_double(fp.derivative) << ',' << class_name(fp.classification) << ','
                << format_double(algorithm_deviation) << '\n';
        }
    } else {
        const std::string setting = "xy[a=" + format_double(problem.a) +
                                    ";b=" + format_double(problem.b) +
                                    ";c=" + format_double(problem.c) +
                                    ";d=" + format_double(problem.d) + "]";
        out << setting << ",(" << format_double(problem.b / problem.a) << ';'
            << format_double(problem.a / problem.b) << "),"
            << format_double(xy_attractor_eigenvalue(problem.a, problem.b, problem.c, problem.d))
            << ",attractor," << format_double(algorithm_deviation) << '\n';
    }
}

void write_basin_grid(std::ostream& out, double a, double b, double c, double d, double x_min,
                      double x_max, double y_min, double y_max, int steps) {
    if (steps < 2) throw ConfigError("write_basin_grid: need at least 2 grid steps");
    out << "x,y,fx,fy\n";
    for (int i = 0; i < steps; ++i) {
        const double x = x_min + (x_max - x_min) * i / (steps - 1);
        for (int j = 0; j < steps; ++j) {
            const double y = y_min + (y_max - y_min) * j / (steps - 1);
            const auto [fx, fy] = xy_step(x, y, a, b, c, d);
            out << format_double(x) << ',' << format_double(y) << ',' << format_double(fx) << ','
                << format_double(fy) << '\n';
        }
    }
}

namespace {

RfmConfig identity_config(int iters) {
    RfmConfig cfg;
    cfg.phi = SpectralFunction::identity();
    cfg.ridge = 0.0;
    cfg.max_iters = iters;
    cfg.fixed_iterations = true;
    return cfg;
}

SymmetricMatrix to_filter(const Eigen::Matrix2d& m0) { return SymmetricMatrix(Eigen::MatrixXd(m0)); }

}  // namespace

double k_trace_deviation(const Mx2Problem& problem, const Eigen::Matrix2d& m0, int m_rows,
                         int iters) {
    if (problem.pattern != Mx2Problem::Pattern::ColumnTwoObserved) {
        throw ConfigError("k_trace_deviation: expects the single-column pattern");
    }
    const CompletionProblem completion = mx2_to_completion(problem, m_rows);
    LinearMeasurements meas(completion);
    const RfmConfig cfg = identity_config(iters);

    const double a = problem.a, b = problem.b, s = problem.s;
    double k = k_first(m0);
    double worst = 0.0;
    RfmState state = lin_rfm_init(meas, cfg, to_filter(m0));
    for (int t = 1; t <= iters; ++t) {
        state = lin_rfm_step(state, meas, cfg);
        // M_t = [[a^2 + k^2 s, ab + k s], [ab + k s, b^2 + s]]
        const double extracted = (state.M.m()(0, 1) - a * b) / s;
        worst = std::max(worst, std::abs(extracted - k));
        // The reconstruction carries the next map value: Z_t(1, 0) = e * f(k_t)
        // with per-entry magnitude e = sqrt(s / (m - 1)).
        const double entry = std::sqrt(s / static_cast<double>(m_rows - 1));
        worst = std::max(worst, std::abs(state.Z(1, 0) - entry * k_step(k, a, b, s)));
        k = k_step(k, a, b, s);
    }
    return worst;
}

double xy_trace_deviation(const Mx2Problem& problem, const Eigen::Matrix2d& m0, int iters) {
    if (problem.pattern != Mx2Problem::Pattern::SplitColumns) {
        throw ConfigError("xy_trace_deviation: expects the split-column pattern");
    }
    const CompletionProblem completion = mx2_to_completion(problem, 3);
    LinearMeasurements meas(completion);
    const RfmConfig cfg = identity_config(iters);

    const double a = problem.a, b = problem.b;
    const double c2 = problem.c * problem.c, d2 = problem.d * problem.d;
    const double u = m0(0, 0), v = m0(1, 1), eps = m0(0, 1);
    double x = (u + v) * eps / (u * u + eps * eps);
    double y = (u + v) * eps / (v * v + eps * eps);

    double worst = 0.0;
    RfmState state = lin_rfm_init(meas, cfg, to_filter(m0));
    for (int t = 1; t <= iters; ++t) {
        state = lin_rfm_step(state, meas, cfg);
        // M_t = [[a^2 + c^2 + y^2 d^2, ab + x c^2 + y d^2],
        //        [ab + x c^2 + y d^2, b^2 + d^2 + x^2 c^2]]
        const double x_sq = (state.M.m()(1, 1) - b * b - d2) / c2;
        const double y_sq = (state.M.m()(0, 0) - a * a - c2) / d2;
        const double extracted_x = x_sq >= 0.0 ? std::sqrt(x_sq) : 0.0;
        const double extracted_y = y_sq >= 0.0 ? std::sqrt(y_sq) : 0.0;
        worst = std::max(worst, std::abs(extracted_x - x));
        worst = std::max(worst, std::abs(extracted_y - y));
        worst = std::max(worst,
                         std::abs(state.M.m()(0, 1) - (a * b + x * c2 + y * d2)));
        std::tie(x, y) = xy_step(x, y, a, b, problem.c, problem.d);
    }
    return worst;
}

double divergence_trace_deviation(const Eigen::Matrix2d& m0, int iters, double* final_y21,
                                  int compare_iters) {
    CompletionProblem p;
    p.d1 = 2;
    p.d2 = 2;
    p.observations = {{0, 0, 1.0}, {0, 1, 0.0}, {1, 1, 1.0}};
    p.validate();
    LinearMeasurements meas(p);
    const RfmConfig cfg = identity_config(iters);
    if (compare_iters < 0) compare_iters = iters;

    double a_t = k_first(m0);  // same base-case formula as the k recursion
    double worst = 0.0;
    RfmState state = lin_rfm_init(meas, cfg, to_filter(m0));
    for (int t = 1; t <= iters; ++t) {
        state = lin_rfm_step(state, meas, cfg);
        if (t <= compare_iters) {
            // M_t = [[1 + a_t^2, a_t], [a_t, 1]]
            worst = std::max(worst, std::abs(state.M.m()(0, 1) - a_t));
            worst = std::max(worst, std::abs(state.Z(1, 0) - divergence_y21(a_t)));
            a_t = divergence_step(a_t);
        }
        if (final_y21) *final_y21 = state.Z(1, 0);
    }
    return worst;
}

CompletionProblem mx2_to_completion(const Mx2Problem& problem, int m_rows) {
    CompletionProblem p;
    p.d2 = 2;
    if (problem.pattern == Mx2Problem::Pattern::ColumnTwoObserved) {
        if (m_rows < 2) throw InvalidDims("mx2_to_completion: need at least 2 rows");
        p.d1 = m_rows;
        p.observations.push_back({0, 0, problem.a});
        p.observations.push_back({0, 1, problem.b});
        const double entry = std::sqrt(problem.s / static_cast<double>(m_rows - 1));
        for (int i = 1; i < m_rows; ++i) p.observations.push_back({i, 1, entry});
    } else {
        p.d1 = 3;
        if (m_rows != 3) throw InvalidDims("mx2_to_completion: split pattern is 3 x 2");
        p.observations.push_back({0, 0, problem.a});
        p.observations.push_back({0, 1, problem.b});
        p.observations.push_back({1, 0, problem.c});
        p.observations.push_back({2, 1, problem.d});
    }
    p.validate();
    return p;
}

}  // namespace linrfm
