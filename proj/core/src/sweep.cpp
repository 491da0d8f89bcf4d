#include "linrfm/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include "linrfm/deep_rfm.hpp"
#include "linrfm/irls.hpp"
#include "linrfm/lin_rfm.hpp"
#include "linrfm/svd_free.hpp"

namespace linrfm {

std::string method_name(Method m) {
    switch (m) {
        case Method::LinRfm: return "lin_rfm";
        case Method::SvdFree: return "svd_free";
        case Method::DeepRfm: return "deep_rfm";
        case Method::Irls: return "irls";
        case Method::LinearNet: return "linear_net";
        case Method::DiagNet: return "diag_net";
        case Method::L1: return "l1";
        case Method::Nuclear: return "nuclear";
    }
    return "unknown";
}

Method parse_method(const std::string& name) {
    for (Method m : {Method::LinRfm, Method::SvdFree, Method::DeepRfm, Method::Irls,
                     Method::LinearNet, Method::DiagNet, Method::L1, Method::Nuclear}) {
        if (method_name(m) == name) return m;
    }
    throw ConfigError("unknown method '" + name + "'");
}

std::string MethodSpec::label() const {
    std::ostringstream out;
    out << method_name(method);
    switch (method) {
        case Method::LinRfm: out << "_a" << alpha; break;
        case Method::SvdFree: out << "_k" << alpha_numerator; break;
        case Method::DeepRfm: out << "_L" << alphas.size(); break;
        case Method::Irls: out << "_p" << p; break;
        case Method::LinearNet: out << "_d" << depth; break;
        case Method::DiagNet: out << "_d" << depth; break;
        default: break;
    }
    return out.str();
}

int degrees_of_freedom(int d, int r) { return 2 * d * r - r * r; }

std::vector<int> default_n_grid(SweepConfig::Kind kind, int d, int r) {
    std::vector<int> grid;
    if (kind == SweepConfig::Kind::Completion) {
        const long long cap = static_cast<long long>(d) * d;
        long long n = degrees_of_freedom(d, r);
        while (n < cap) {
            grid.push_back(static_cast<int>(n));
            n = std::max(n + 1, static_cast<long long>(std::llround(n * 1.15)));
        }
        grid.push_back(static_cast<int>(cap));
    } else {
        // Sparse regression transitions near a small multiple of r log d.
        long long n = std::max(2 * r, 4);
        const long long cap = std::min<long long>(4LL * d, static_cast<long long>(d) * 2);
        while (n < cap) {
            grid.push_back(static_cast<int>(n));
            n = std::max(n + 1, static_cast<long long>(std::llround(n * 1.15)));
        }
        grid.push_back(static_cast<int>(cap));
    }
    return grid;
}

namespace {

std::function<double(const Eigen::MatrixXd&)> completion_mse_eval(const CompletionProblem& p) {
    if (!p.ground_truth) return {};
    return [&p](const Eigen::MatrixXd& z) { return test_mse(z, p); };
}

}  // namespace

SolveOutcome solve_method(const MethodSpec& spec, const CompletionProblem& p) {
    SolveOutcome out;
    WallTimer timer;
    switch (spec.method) {
        case Method::LinRfm: {
            RfmConfig cfg;
            cfg.phi = spec.epsilon > 0.0 ? SpectralFunction::power(spec.alpha, spec.epsilon)
                                         : SpectralFunction::power(spec.alpha);
            cfg.ridge = spec.ridge;
            cfg.max_iters = spec.max_iters;
            cfg.tol = spec.tol;
            RfmRunResult run = lin_rfm_run(p, cfg);
            out.estimate = run.state.Z;
            out.iterations = run.iterations;
            out.trace = std::move(run.trace);
            break;
        }
        case Method::SvdFree: {
            std::vector<double> grid = spec.ridge_grid;
            if (grid.empty()) grid.push_back(spec.ridge);
            double best = std::numeric_limits<double>::infinity();
            for (double ridge : grid) {
                SvdFreeRunResult run =
                    svdfree_run(p, spec.alpha_numerator, ridge, spec.max_iters, spec.tol);
                const double mse =
                    p.ground_truth ? test_mse(run.estimate, p) : 0.0;
                if (mse < best || !std::isfinite(best)) {
                    best = mse;
                    out.estimate = std::move(run.estimate);
                    out.iterations = run.iterations;
                    out.trace = std::move(run.trace);
                }
                if (grid.size() == 1) break;
            }
            break;
        }
        case Method::DeepRfm: {
            DeepRfmConfig cfg;
            cfg.alphas = spec.alphas;
            if (cfg.alphas.empty()) cfg.alphas.assign(spec.depth, spec.alpha);
            cfg.epsilon = spec.epsilon > 0.0 ? spec.epsilon : 1e-6;
            cfg.ridge = spec.ridge;
            cfg.max_iters = spec.max_iters;
            cfg.tol = spec.tol;
            DeepRfmRunResult run = deep_lin_rfm_run(p, cfg);
            out.estimate = run.state.Z;
            out.iterations = run.iterations;
            out.trace = std::move(run.trace);
            break;
        }
        case Method::Irls: {
            IrlsConfig cfg;
            cfg.p = spec.p;
            cfg.eps0 = spec.eps0;
            cfg.ridge = spec.ridge;
            cfg.max_iters = spec.max_iters;
            cfg.tol = spec.tol;
            IrlsRunResult run = irls_run(p, cfg);
            out.estimate = run.state.X;
            out.iterations = run.iterations;
            out.trace = std::move(run.trace);
            break;
        }
        case Method::LinearNet: {
            const int width = std::max(p.d1, p.d2);
            LinearNet net = gaussian_init(spec.depth, p.d1, p.d2, width,
                                          default_net_init_std(spec.depth, width),
                                          derive_seed(p.seed, 0x6e6574ULL));
            TrainConfig cfg;
            cfg.optimizer = spec.optimizer;
            cfg.lr = spec.lr;
            cfg.steps = spec.steps;
            cfg.early_stop_mse = spec.early_stop_mse;
            NetTrainResult run =
                train_linear_net(LinearMeasurements(p), std::move(net), cfg,
                                 completion_mse_eval(p));
            out.estimate = run.net.end_to_end();
            out.iterations = run.steps_run;
            out.trace = std::move(run.trace);
            break;
        }
        case Method::Nuclear: {
            out.estimate = nuclear_norm_min(p, spec.tol, spec.max_iters);
            out.iterations = spec.max_iters;
            break;
        }
        default:
            throw ConfigError(method_name(spec.method) +
                              " does not apply to completion problems");
    }
    out.wall_ms = timer.elapsed_ms();
    if (p.ground_truth) out.test_mse = test_mse(out.estimate, p);
    return out;
}

SolveOutcome solve_method(const MethodSpec& spec, const SparseRegressionProblem& p) {
    SolveOutcome out;
    WallTimer timer;
    switch (spec.method) {
        case Method::LinRfm: {
            RfmConfig cfg;
            cfg.phi = spec.epsilon > 0.0 ? SpectralFunction::power(spec.alpha, spec.epsilon)
                                         : SpectralFunction::power(spec.alpha);
            cfg.ridge = spec.ridge;
            cfg.max_iters = spec.max_iters;
            cfg.tol = spec.tol;
            DiagRfmResult run = diag_rfm_run(p, cfg);
            out.weight_vector = run.weights;
            out.iterations = run.iterations;
            out.trace = std::move(run.trace);
            break;
        }
        case Method::DiagNet: {
            TrainConfig cfg;
            cfg.optimizer = spec.optimizer;
            cfg.lr = spec.lr;
            cfg.steps = spec.steps;
            cfg.early_stop_mse = spec.early_stop_mse;
            DiagNetTrainResult run =
                train_diag_net(p, spec.depth, cfg, 1e-5, derive_seed(p.seed, 0x646e6574ULL));
            out.weight_vector = run.weights;
            out.iterations = run.steps_run;
            out.trace = std::move(run.trace);
            break;
        }
        case Method::L1: {
            out.weight_vector = l1_min(p, spec.tol > 0.0 ? std::min(spec.tol, 1e-7) : 1e-8);
            break;
        }
        default:
            throw ConfigError(method_name(spec.method) +
                              " does not apply to regression problems");
    }
    out.wall_ms = timer.elapsed_ms();
    if (p.true_weights) out.test_mse = test_mse(out.weight_vector, p);
    return out;
}

CompletionProblem cell_completion_problem(const SweepConfig& cfg, int n, std::uint64_t seed) {
    const std::uint64_t problem_seed = derive_seed(seed, static_cast<std::uint64_t>(n));
    CompletionProblem p = gen_low_rank_completion(cfg.d, cfg.r, n, problem_seed);
    if (cfg.noise_sigma > 0.0) {
        p = add_label_noise(p, cfg.noise_sigma, derive_seed(problem_seed, 1));
    }
    return p;
}

SparseRegressionProblem cell_regression_problem(const SweepConfig& cfg, int n,
                                                std::uint64_t seed) {
    const std::uint64_t problem_seed = derive_seed(seed, static_cast<std::uint64_t>(n));
    SparseRegressionProblem p = gen_sparse_regression(n, cfg.d, cfg.r, problem_seed);
    if (cfg.noise_sigma > 0.0) {
        p = add_label_noise(p, cfg.noise_sigma, derive_seed(problem_seed, 1));
    }
    return p;
}

SweepResult run_sweep(const SweepConfig& cfg, std::ostream* live) {
    if (cfg.methods.empty()) throw ConfigError("run_sweep: no methods configured");
    if (cfg.seeds.empty()) throw ConfigError("run_sweep: no seeds configured");
    std::vector<int> grid = cfg.n_grid.empty() ? default_n_grid(cfg.kind, cfg.d, cfg.r)
                                               : cfg.n_grid;
    for (std::size_t i = 1; i < grid.size(); ++i) {
        if (grid[i] <= grid[i - 1]) throw ConfigError("run_sweep: n grid must be strictly increasing");
    }

    struct Cell {
        std::size_t method_index;
        int n;
        std::uint64_t seed;
    };
    std::vector<Cell> cells;
    for (std::size_t mi = 0; mi < cfg.methods.size(); ++mi) {
        for (int n : grid) {
            for (std::uint64_t seed : cfg.seeds) cells.push_back({mi, n, seed});
        }
    }

    SweepResult result;
    result.degrees_of_freedom = degrees_of_freedom(cfg.d, cfg.r);
    result.cells.resize(cells.size());

    std::mutex flush_mutex;
    std::vector<char> done(cells.size(), 0);
    std::size_t next_flush = 0;
    std::exception_ptr first_error;

    std::atomic<std::size_t> cursor{0};
    std::atomic<bool> failed{false};
    auto worker = [&]() {
        while (!failed.load()) {
            const std::size_t index = cursor.fetch_add(1);
            if (index >= cells.size()) break;
            const Cell& cell = cells[index];
            const MethodSpec& spec = cfg.methods[cell.method_index];

            CellResult row;
            row.method = spec.label();
            row.n = cell.n;
            row.seed = cell.seed;
            try {
                SolveOutcome outcome;
                if (cfg.kind == SweepConfig::Kind::Completion) {
                    const CompletionProblem p = cell_completion_problem(cfg, cell.n, cell.seed);
                    outcome = solve_method(spec, p);
                } else {
                    const SparseRegressionProblem p =
                        cell_regression_problem(cfg, cell.n, cell.seed);
                    outcome = solve_method(spec, p);
                }
                row.test_mse = outcome.test_mse;
                row.wall_ms = outcome.wall_ms;
                row.iterations = outcome.iterations;
            } catch (...) {
                std::lock_guard<std::mutex> lock(flush_mutex);
                if (!first_error) first_error = std::current_exception();
                failed.store(true);
                return;
            }
            result.cells[index] = std::move(row);

            std::lock_guard<std::mutex> lock(flush_mutex);
            done[index] = 1;
            while (next_flush < cells.size() && done[next_flush]) {
                if (live) {
                    write_sweep_row(*live, result.cells[next_flush], cfg.d, cfg.r);
                    live->flush();
                }
                ++next_flush;
            }
        }
    };

    int threads = cfg.threads > 0 ? cfg.threads
                                  : static_cast<int>(std::thread::hardware_concurrency());
    threads = std::max(1, std::min<int>(threads, static_cast<int>(cells.size())));
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);

    // Success per n requires every seed below the threshold.
    for (std::size_t mi = 0; mi < cfg.methods.size(); ++mi) {
        MethodSummary summary;
        summary.method = cfg.methods[mi].label();
        for (int n : grid) {
            bool all_ok = true;
            for (const CellResult& cell : result.cells) {
                if (cell.method == summary.method && cell.n == n &&
                    !(cell.test_mse < cfg.success_threshold)) {
                    all_ok = false;
                    break;
                }
            }
            if (all_ok) {
                summary.threshold_n = n;
                break;
            }
        }
        result.summaries.push_back(std::move(summary));
    }
    return result;
}

void write_sweep_row(std::ostream& out, const CellResult& cell, int d, int r) {
    out << cell.method << ',' << d << ',' << r << ',' << cell.n << ',' << cell.seed << ','
        << format_double(cell.test_mse) << ',' << format_double(cell.wall_ms) << '\n';
}

void write_sweep_csv(std::ostream& out, const SweepResult& result, int d, int r) {
    out << "method,d,r,n,seed,test_mse,wall_ms\n";
    for (const CellResult& cell : result.cells) write_sweep_row(out, cell, d, r);
}

void write_summary_csv(std::ostream& out, const SweepResult& result) {
    out << "method,threshold_n,degrees_of_freedom\n";
    for (const MethodSummary& summary : result.summaries) {
        out << summary.method << ',';
        if (summary.threshold_n) out << *summary.threshold_n;
        out << ',' << result.degrees_of_freedom << '\n';
    }
}

namespace {

struct Series {
    std::string method;
    std::vector<std::pair<double, double>> points;  // n, mean mse over seeds
};

}  // namespace

void write_sweep_plot_svg(std::ostream& out, const SweepResult& result, int d, int r,
                          double threshold) {
    std::vector<Series> series;
    for (const CellResult& cell : result.cells) {
        auto it = std::find_if(series.begin(), series.end(),
                               [&](const Series& s) { return s.method == cell.method; });
        if (it == series.end()) {
            series.push_back({cell.method, {}});
            it = series.end() - 1;
        }
        auto pt = std::find_if(it->points.begin(), it->points.end(),
                               [&](const auto& p) { return p.first == cell.n; });
        if (pt == it->points.end()) {
            it->points.push_back({static_cast<double>(cell.n), cell.test_mse});
        } else {
            pt->second = std::max(pt->second, cell.test_mse);  // worst seed per n
        }
    }
    double x_min = 1e300, x_max = 0, y_min = 1e300, y_max = 0;
    for (const Series& s : series) {
        for (const auto& [x, y] : s.points) {
            x_min = std::min(x_min, x);
            x_max = std::max(x_max, x);
            const double clamped = std::max(y, 1e-16);
            y_min = std::min(y_min, clamped);
            y_max = std::max(y_max, clamped);
        }
    }
    // Keep the degrees-of-freedom reference inside the frame.
    x_min = std::min(x_min, static_cast<double>(degrees_of_freedom(d, r)));
    x_max = std::max(x_max, x_min + 1.0);
    y_min = std::min(y_min, threshold / 10.0);
    y_max = std::max(y_max, 1.0);

    const int width = 720, height = 480, margin = 60;
    auto sx = [&](double n) {
        return margin + (std::log(n) - std::log(x_min)) / (std::log(x_max) - std::log(x_min)) *
                            (width - 2 * margin);
    };
    auto sy = [&](double v) {
        const double c = std::max(v, 1e-16);
        return height - margin -
               (std::log(c) - std::log(y_min)) / (std::log(y_max) - std::log(y_min)) *
                   (height - 2 * margin);
    };
    static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                    "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

    out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << width << "' height='" << height
        << "'>\n<rect width='100%' height='100%' fill='white'/>\n";
    out << "<text x='" << width / 2 << "' y='20' text-anchor='middle'>worst-seed test MSE vs n (d="
        << d << ", r=" << r << ")</text>\n";
    // Degrees-of-freedom reference line.
    const double dof = degrees_of_freedom(d, r);
    if (dof >= x_min && dof <= x_max) {
        out << "<line x1='" << sx(dof) << "' y1='" << margin << "' x2='" << sx(dof) << "' y2='"
            << height - margin << "' stroke='black' stroke-dasharray='6,4'/>\n";
        out << "<text x='" << sx(dof) + 4 << "' y='" << margin + 12 << "'>2dr-r^2</text>\n";
    }
    out << "<line x1='" << margin << "' y1='" << sy(threshold) << "' x2='" << width - margin
        << "' y2='" << sy(threshold) << "' stroke='gray' stroke-dasharray='2,4'/>\n";
    int color = 0;
    for (const Series& s : series) {
        std::vector<std::pair<double, double>> pts = s.points;
        std::sort(pts.begin(), pts.end());
        out << "<polyline fill='none' stroke='" << palette[color % 8] << "' points='";
        for (const auto& [x, y] : pts) out << sx(x) << ',' << sy(y) << ' ';
        out << "'/>\n";
        out << "<text x='" << width - margin + 4 << "' y='" << margin + 16 * color << "' fill='"
            << palette[color % 8] << "' font-size='11'>" << s.method << "</text>\n";
        ++color;
    }
    out << "<text x='" << width / 2 << "' y='" << height - 16
        << "' text-anchor='middle'>observations n (log)</text>\n";
    out << "</svg>\n";
}

}  // namespace linrfm
