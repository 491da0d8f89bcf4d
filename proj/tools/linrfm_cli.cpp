// Command-line harness: problem generation, single solves, phase-transition
// sweeps, closed-form oracle reports, verification suites, and wall-time
// scaling tables.

#include <CLI11.hpp>
#include <fstream>
#include <iostream>

#include "linrfm/baselines.hpp"
#include "linrfm/deep_rfm.hpp"
#include "linrfm/irls.hpp"
#include "linrfm/lin_rfm.hpp"
#include "linrfm/mx2_oracle.hpp"
#include "linrfm/problems.hpp"
#include "linrfm/svd_free.hpp"
#include "linrfm/sweep.hpp"

namespace {

using namespace linrfm;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitSolver = 3;

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    return out;
}

struct CommonOptions {
    std::string kind = "completion";
    int d = 100;
    int d2 = -1;
    int r = 5;
    int n = -1;
    double noise_sigma = 0.0;
    std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
    double threshold = 1e-3;
    std::vector<int> n_grid;
    std::string out;
    bool plot = false;

    // method parameters
    std::vector<std::string> methods;
    double alpha = 0.5;
    double epsilon = 0.0;
    int alpha_num = 1;
    std::vector<double> ridge_grid;
    double ridge = 1e-10;
    std::vector<double> alphas;
    double p_exponent = 0.0;
    double eps0 = 1e-3;
    int depth = 3;
    std::string optimizer;  // per-method default when empty
    double lr = -1.0;
    long steps = 100000;
    int max_iters = 2000;
    double tol = 1e-9;
    int threads = 0;
};

void add_method_flags(CLI::App* cmd, CommonOptions& opt) {
    cmd->add_option("--method", opt.methods,
                    "method name: lin_rfm, svd_free, deep_rfm, irls, linear_net, diag_net, l1, nuclear")
        ->required();
    cmd->add_option("--alpha", opt.alpha, "power exponent for lin_rfm");
    cmd->add_option("--epsilon", opt.epsilon, "spectral offset epsilon");
    cmd->add_option("--alpha-num", opt.alpha_num, "k in phi(s) = s^{k/2} for svd_free");
    cmd->add_option("--ridge-grid", opt.ridge_grid, "ridge grid for svd_free selection");
    cmd->add_option("--ridge", opt.ridge, "ridge regularization for the linear solves");
    cmd->add_option("--alphas", opt.alphas, "deep_rfm layer exponents");
    cmd->add_option("--p", opt.p_exponent, "IRLS p exponent");
    cmd->add_option("--eps0", opt.eps0, "IRLS initial epsilon");
    cmd->add_option("--depth", opt.depth, "network depth");
    cmd->add_option("--optimizer", opt.optimizer, "gd or rmsprop");
    cmd->add_option("--lr", opt.lr, "learning rate override");
    cmd->add_option("--steps", opt.steps, "training step budget");
    cmd->add_option("--max-iters", opt.max_iters, "iteration cap for the RFM family");
    cmd->add_option("--tol", opt.tol, "relative-change stopping tolerance");
}

void add_problem_flags(CLI::App* cmd, CommonOptions& opt) {
    cmd->add_option("--kind", opt.kind, "completion or regression");
    cmd->add_option("--d", opt.d, "problem dimension");
    cmd->add_option("--d2", opt.d2, "second dimension (defaults to d)");
    cmd->add_option("--r", opt.r, "rank / sparsity");
    cmd->add_option("--n", opt.n, "number of observations / samples");
    cmd->add_option("--noise-sigma", opt.noise_sigma, "label noise standard deviation");
    cmd->add_option("--seeds", opt.seeds, "random seeds");
}

MethodSpec build_spec(const CommonOptions& opt, const std::string& name) {
    MethodSpec spec;
    spec.method = parse_method(name);
    spec.alpha = opt.alpha;
    spec.epsilon = opt.epsilon;
    spec.alpha_numerator = opt.alpha_num;
    spec.ridge_grid = opt.ridge_grid;
    spec.alphas = opt.alphas;
    spec.p = opt.p_exponent;
    spec.eps0 = opt.eps0;
    spec.depth = opt.depth;
    // Defaults follow the experiment protocols: completion nets use RMSProp at
    // 1e-3, diagonal regression nets use GD at 1e-1.
    std::string optimizer = opt.optimizer;
    if (optimizer.empty()) {
        optimizer = spec.method == Method::DiagNet ? "gd" : "rmsprop";
    }
    if (optimizer == "gd") {
        spec.optimizer = TrainConfig::Optimizer::GD;
    } else if (optimizer == "rmsprop") {
        spec.optimizer = TrainConfig::Optimizer::RMSProp;
    } else {
        throw ConfigError("unknown optimizer '" + optimizer + "'");
    }
    spec.lr = opt.lr > 0.0 ? opt.lr : (spec.method == Method::DiagNet ? 0.1 : 1e-3);
    spec.steps = opt.steps;
    spec.ridge = opt.ridge;
    spec.max_iters = opt.max_iters;
    spec.tol = opt.tol;
    spec.early_stop_mse = opt.threshold;
    return spec;
}

SweepConfig build_sweep_config(const CommonOptions& opt) {
    SweepConfig cfg;
    cfg.kind = opt.kind == "regression" ? SweepConfig::Kind::Regression
                                        : SweepConfig::Kind::Completion;
    cfg.d = opt.d;
    cfg.r = opt.r;
    cfg.noise_sigma = opt.noise_sigma;
    cfg.n_grid = opt.n_grid;
    cfg.seeds = opt.seeds;
    cfg.success_threshold = opt.threshold;
    cfg.threads = opt.threads;
    for (const std::string& name : opt.methods) cfg.methods.push_back(build_spec(opt, name));
    return cfg;
}

int run_gen(const CommonOptions& opt) {
    if (opt.out.empty()) throw ConfigError("gen: --out is required");
    if (opt.n < 0) throw ConfigError("gen: --n is required");
    const std::uint64_t seed = opt.seeds.empty() ? 1 : opt.seeds[0];
    if (opt.kind == "completion") {
        CompletionProblem p = gen_low_rank_completion(opt.d, opt.r, opt.n, seed);
        if (opt.noise_sigma > 0.0) p = add_label_noise(p, opt.noise_sigma, derive_seed(seed, 1));
        save_problem(p, opt.out);
    } else if (opt.kind == "regression") {
        SparseRegressionProblem p = gen_sparse_regression(opt.n, opt.d, opt.r, seed);
        if (opt.noise_sigma > 0.0) p = add_label_noise(p, opt.noise_sigma, derive_seed(seed, 1));
        save_problem(p, opt.out);
    } else {
        throw ConfigError("gen: unknown kind '" + opt.kind + "'");
    }
    return kExitOk;
}

int run_solve(const CommonOptions& opt, const std::string& problem_path,
              const std::string& trace_path) {
    if (opt.methods.size() != 1) throw ConfigError("solve: exactly one --method");
    const MethodSpec spec = build_spec(opt, opt.methods[0]);

    Problem problem;
    if (!problem_path.empty()) {
        problem = load_problem(problem_path);
    } else if (opt.kind == "completion") {
        if (opt.n < 0) throw ConfigError("solve: --n required when generating");
        CompletionProblem p =
            gen_low_rank_completion(opt.d, opt.r, opt.n, opt.seeds.empty() ? 1 : opt.seeds[0]);
        if (opt.noise_sigma > 0.0) {
            p = add_label_noise(p, opt.noise_sigma,
                                derive_seed(opt.seeds.empty() ? 1 : opt.seeds[0], 1));
        }
        problem = std::move(p);
    } else {
        if (opt.n < 0) throw ConfigError("solve: --n required when generating");
        problem = gen_sparse_regression(opt.n, opt.d, opt.r, opt.seeds.empty() ? 1 : opt.seeds[0]);
    }

    const SolveOutcome outcome = std::visit(
        [&spec](const auto& p) { return solve_method(spec, p); }, problem);
    std::cout << "method,test_mse,wall_ms,iterations\n"
              << spec.label() << ',' << format_double(outcome.test_mse) << ','
              << format_double(outcome.wall_ms) << ',' << outcome.iterations << '\n';
    if (!trace_path.empty()) {
        std::ofstream trace = open_out(trace_path);
        outcome.trace.write_csv(trace);
    }
    return kExitOk;
}

int run_sweep_cmd(const CommonOptions& opt) {
    if (opt.out.empty()) throw ConfigError("sweep: --out is required");
    SweepConfig cfg = build_sweep_config(opt);

    std::ofstream out = open_out(opt.out);
    out << "method,d,r,n,seed,test_mse,wall_ms\n";
    const SweepResult result = run_sweep(cfg, &out);

    const std::string summary_path = opt.out + ".summary.csv";
    std::ofstream summary = open_out(summary_path);
    write_summary_csv(summary, result);

    if (opt.plot) {
        std::ofstream svg = open_out(opt.out + ".svg");
        write_sweep_plot_svg(svg, result, cfg.d, cfg.r, cfg.success_threshold);
    }
    for (const MethodSummary& m : result.summaries) {
        std::cout << m.method << " threshold_n=";
        if (m.threshold_n) {
            std::cout << *m.threshold_n;
        } else {
            std::cout << "none";
        }
        std::cout << " (degrees of freedom " << result.degrees_of_freedom << ")\n";
    }
    return kExitOk;
}

int run_oracle(double a, double b, double s, double c, double d, const std::string& out_path,
               const std::string& grid_path) {
    Mx2Problem problem;
    problem.a = a;
    problem.b = b;
    problem.s = s;
    Eigen::Matrix2d m0;
    m0 << 1.0, 0.25, 0.25, 1.0;
    const double deviation = k_trace_deviation(problem, m0, 2, 15);

    if (!out_path.empty()) {
        std::ofstream out = open_out(out_path);
        write_fixed_point_report(out, problem, deviation);
    } else {
        write_fixed_point_report(std::cout, problem, deviation);
    }
    if (!grid_path.empty()) {
        std::ofstream grid = open_out(grid_path);
        write_basin_grid(grid, a, b, c, d, -2.0 * b / a, 3.0 * b / a, -2.0 * a / b, 3.0 * a / b,
                         41);
    }
    return kExitOk;
}

int run_verify() {
    int failures = 0;
    auto report = [&failures](const std::string& name, bool ok, const std::string& detail) {
        std::cout << (ok ? "[PASS] " : "[FAIL] ") << name << " (" << detail << ")\n";
        if (!ok) ++failures;
    };

    {
        const CompletionProblem p = gen_low_rank_completion(20, 3, 150, 11);
        double worst = 0.0;
        for (double alpha : {0.25, 0.5, 0.75}) {
            worst = std::max(worst, rfm_irls_equivalence_check(p, alpha, 1e-6, 10));
        }
        report("irls equivalence (p = 2 - 4 alpha)", worst < 1e-7,
               "max deviation " + format_double(worst));
    }
    {
        const CompletionProblem p = gen_low_rank_completion(20, 2, 140, 13);
        LinearMeasurements meas(p);
        RfmConfig cfg;
        cfg.phi = SpectralFunction::half_integer_power(1);
        cfg.ridge = 1e-3;
        SvdFreeState state = svdfree_init(p, 1);
        RfmState dense = lin_rfm_init(meas, cfg);
        double worst = 0.0;
        for (int t = 0; t < 15; ++t) {
            solve_gamma(state, p, cfg.ridge);
            const Eigen::MatrixXd z = reconstruct(state, p);
            worst = std::max(worst, (z - dense.Z).norm() / dense.Z.norm());
            state = msq_update(state, p);
            dense = lin_rfm_step(dense, meas, cfg);
        }
        report("svd-free / svd-path equivalence", worst < 1e-6,
               "max deviation " + format_double(worst));
    }
    {
        const CompletionProblem p = gen_low_rank_completion(20, 2, 200, 5);
        RfmConfig cfg;
        cfg.phi = SpectralFunction::power(0.375, 1e-4);
        cfg.tol = 1e-12;
        cfg.max_iters = 20000;
        const RfmRunResult run = lin_rfm_run(p, cfg);
        const FixedPointCertificate cert =
            fixed_point_residual(run.state.Z, LinearMeasurements(p), cfg.phi);
        report("fixed-point stationarity", run.converged && cert.stationarity_relative < 1e-5,
               "relative residual " + format_double(cert.stationarity_relative));
    }
    {
        Mx2Problem problem;
        problem.a = 2.0;
        problem.b = 1.0;
        problem.s = 2.25;
        Eigen::Matrix2d m0;
        m0 << 1.0, 0.3, 0.3, 0.8;
        const double deviation = k_trace_deviation(problem, m0, 2, 15);
        report("closed-form oracle agreement", deviation < 1e-8,
               "max deviation " + format_double(deviation));
    }
    {
        Eigen::MatrixXd u(6, 2), v(6, 2);
        Rng rng = make_rng(19);
        std::normal_distribution<double> normal(0.0, 1.0);
        for (int i = 0; i < 6; ++i) {
            for (int j = 0; j < 2; ++j) {
                u(i, j) = normal(rng);
                v(i, j) = normal(rng);
            }
        }
        Eigen::MatrixXd target = u * v.transpose();
        target *= 0.5 / target.norm();
        const SensingProblem p = gen_gaussian_sensing(target, 10, 21);
        LinearNet net = balanced_init(3, 6, 6, 6, 0.05, 23);
        TrainConfig cfg;
        cfg.optimizer = TrainConfig::Optimizer::GD;
        cfg.lr = 1e-3;
        cfg.steps = 10000;
        const NetTrainResult run = train_linear_net(LinearMeasurements(p), std::move(net), cfg);
        double worst_nfa = 0.0;
        for (int l = 1; l <= 3; ++l) worst_nfa = std::max(worst_nfa, nfa_defect(run.net, l));
        const double bal = balancedness_defect(run.net);
        report("balancedness / NFA under gradient descent", bal < 1e-3 && worst_nfa < 1e-3,
               "balancedness " + format_double(bal) + ", nfa " + format_double(worst_nfa));
    }
    return failures == 0 ? kExitOk : kExitSolver;
}

int run_bench(const std::string& out_path) {
    std::ostream* out = &std::cout;
    std::ofstream file;
    if (!out_path.empty()) {
        file = open_out(out_path);
        out = &file;
    }
    *out << "experiment,parameter,wall_ms\n";

    // Per-row solve cost scaling in the per-row observation count.
    for (int ni : {8, 16, 32, 64}) {
        const int d = 256;
        CompletionProblem p;
        p.d1 = 256;
        p.d2 = d;
        Rng rng = make_rng(100 + ni);
        std::uniform_real_distribution<double> uniform(-1.0, 1.0);
        for (int i = 0; i < p.d1; ++i) {
            for (int j = 0; j < ni; ++j) {
                p.observations.push_back({i, (j * 37 + i) % d, uniform(rng)});
            }
        }
        SvdFreeState state = svdfree_init(p, 1);
        state.tracked = Eigen::MatrixXd::Identity(d, d) * 1.5;
        WallTimer timer;
        const int reps = 20;
        for (int rep = 0; rep < reps; ++rep) solve_gamma(state, p, 1e-3);
        *out << "solve_gamma_ni," << ni << ',' << format_double(timer.elapsed_ms() / reps)
             << '\n';
    }

    // Full iteration cost scaling in the dimension.
    for (int d : {50, 100, 200}) {
        const CompletionProblem p = gen_low_rank_completion(d, 5, 4 * d, 200 + d);
        WallTimer timer;
        svdfree_run(p, 1, 1e-2, 25, 0.0);
        *out << "svdfree_iteration_d," << d << ',' << format_double(timer.elapsed_ms() / 25)
             << '\n';
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"lin-RFM experiment harness"};
    app.require_subcommand(1);
    // key = value sections per subcommand, e.g. [sweep]; given before the
    // subcommand name: linrfm --config run.ini sweep --out results.csv
    app.set_config("--config", "", "configuration file with [subcommand] sections");

    CommonOptions opt;
    std::string problem_path, trace_path, grid_path;
    double oracle_a = 1.0, oracle_b = 1.0, oracle_s = 1.0, oracle_c = 1.0, oracle_d = 1.0;
    std::string bench_out;

    CLI::App* gen = app.add_subcommand("gen", "generate a problem file");
    add_problem_flags(gen, opt);
    gen->add_option("--out", opt.out, "output path")->required();

    CLI::App* solve = app.add_subcommand("solve", "run one method on one problem");
    add_problem_flags(solve, opt);
    add_method_flags(solve, opt);
    solve->add_option("--problem", problem_path, "problem file (generated otherwise)");
    solve->add_option("--trace", trace_path, "per-iteration trace CSV path");
    solve->add_option("--out", opt.out, "unused, accepted for symmetry");

    CLI::App* sweep = app.add_subcommand("sweep", "n-grid x seeds phase-transition sweep");
    add_problem_flags(sweep, opt);
    add_method_flags(sweep, opt);
    sweep->add_option("--n-grid", opt.n_grid, "observation grid (default: dof start, x1.15)");
    sweep->add_option("--threshold", opt.threshold, "success threshold on test MSE");
    sweep->add_option("--threads", opt.threads, "worker threads (0 = hardware)");
    sweep->add_option("--out", opt.out, "long-form CSV path")->required();
    sweep->add_flag("--plot", opt.plot, "also write an SVG plot next to the CSV");

    CLI::App* oracle_cmd = app.add_subcommand("oracle", "closed-form m x 2 oracle reports");
    oracle_cmd->add_option("--a", oracle_a, "first-row observation a");
    oracle_cmd->add_option("--b", oracle_b, "first-row observation b");
    oracle_cmd->add_option("--s", oracle_s, "sum of squares of the remaining column");
    oracle_cmd->add_option("--c", oracle_c, "column-1 observation (basin grid)");
    oracle_cmd->add_option("--grid-d", oracle_d, "column-2 observation (basin grid)");
    oracle_cmd->add_option("--out", opt.out, "report CSV path (stdout otherwise)");
    oracle_cmd->add_option("--grid-out", grid_path, "vector-field grid dump path");

    CLI::App* verify = app.add_subcommand("verify", "equivalence / NFA / fixed-point suites");

    CLI::App* bench = app.add_subcommand("bench", "wall-time scaling tables");
    bench->add_option("--out", bench_out, "CSV path (stdout otherwise)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (gen->parsed()) return run_gen(opt);
        if (solve->parsed()) return run_solve(opt, problem_path, trace_path);
        if (sweep->parsed()) return run_sweep_cmd(opt);
        if (oracle_cmd->parsed()) {
            return run_oracle(oracle_a, oracle_b, oracle_s, oracle_c, oracle_d, opt.out,
                              grid_path);
        }
        if (verify->parsed()) return run_verify();
        if (bench->parsed()) return run_bench(bench_out);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const Error& e) {
        std::cerr << "solver error: " << e.what() << '\n';
        return kExitSolver;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitSolver;
    }
    return kExitConfig;
}
