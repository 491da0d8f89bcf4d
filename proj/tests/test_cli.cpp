// Process-level checks of the command-line harness.

#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

namespace {

std::string cli_path() { return LINRFM_CLI_PATH; }

std::string temp_path(const std::string& name) { return ::testing::TempDir() + "/" + name; }

int run_cli(const std::string& args) {
    const std::string command = cli_path() + " " + args + " > /dev/null 2>&1";
    const int status = std::system(command.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

}  // namespace

TEST(CliTest, GenSolveRoundTrip) {
    const std::string problem = temp_path("cli_problem.txt");
    ASSERT_EQ(run_cli("gen --kind completion --d 12 --r 1 --n 70 --seeds 3 --out " + problem), 0);
    const std::string trace = temp_path("cli_trace.csv");
    ASSERT_EQ(run_cli("solve --method svd_free --alpha-num 1 --ridge 1e-3 --max-iters 400 "
                      "--problem " + problem + " --trace " + trace),
              0);
    const std::string contents = slurp(trace);
    EXPECT_NE(contents.find("iter,wall_ms,recon_change"), std::string::npos);
}

TEST(CliTest, SolveIsByteDeterministic) {
    const std::string t1 = temp_path("det_a.csv");
    const std::string t2 = temp_path("det_b.csv");
    const std::string args = "solve --kind completion --d 10 --r 1 --n 50 --seeds 7 "
                             "--method lin_rfm --alpha 0.5 --epsilon 1e-6 --max-iters 60 ";
    ASSERT_EQ(run_cli(args + "--trace " + t1), 0);
    ASSERT_EQ(run_cli(args + "--trace " + t2), 0);
    const std::string a = slurp(t1);
    EXPECT_FALSE(a.empty());
    EXPECT_EQ(a, slurp(t2));
}

TEST(CliTest, SweepEmitsCsvSummaryAndPlot) {
    const std::string out = temp_path("sweep.csv");
    ASSERT_EQ(run_cli("sweep --kind completion --d 10 --r 1 --n-grid 40 70 --seeds 1 2 "
                      "--method svd_free --alpha-num 1 --ridge-grid 1e-2 1e-3 "
                      "--max-iters 400 --threshold 1e-3 --plot --out " + out),
              0);
    const std::string csv = slurp(out);
    EXPECT_NE(csv.find("method,d,r,n,seed,test_mse,wall_ms"), std::string::npos);
    EXPECT_NE(csv.find("svd_free_k1,10,1,40,1,"), std::string::npos);
    EXPECT_NE(slurp(out + ".summary.csv").find("threshold_n"), std::string::npos);
    EXPECT_NE(slurp(out + ".svg").find("<svg"), std::string::npos);
}

namespace {

// The wall_ms column is physical time and legitimately differs between runs;
// every numeric result column must be byte-identical.
std::string strip_wall_column(const std::string& csv) {
    std::istringstream in(csv);
    std::string line, out;
    while (std::getline(in, line)) {
        const std::size_t cut = line.rfind(',');
        out += line.substr(0, cut);
        out += '\n';
    }
    return out;
}

}  // namespace

TEST(CliTest, SweepIsByteDeterministic) {
    const std::string o1 = temp_path("sweep_a.csv");
    const std::string o2 = temp_path("sweep_b.csv");
    const std::string args = "sweep --kind regression --d 24 --r 2 --n-grid 16 22 --seeds 1 2 "
                             "--method l1 --tol 1e-8 --threshold 1e-3 --threads 2 --out ";
    ASSERT_EQ(run_cli(args + o1), 0);
    ASSERT_EQ(run_cli(args + o2), 0);
    const std::string a = slurp(o1);
    EXPECT_FALSE(a.empty());
    EXPECT_EQ(strip_wall_column(a), strip_wall_column(slurp(o2)));
    EXPECT_EQ(slurp(o1 + ".summary.csv"), slurp(o2 + ".summary.csv"));
}

TEST(CliTest, OracleReportAndGrid) {
    const std::string report = temp_path("oracle.csv");
    const std::string grid = temp_path("grid.csv");
    ASSERT_EQ(run_cli("oracle --a 2 --b 1 --s 2.25 --out " + report + " --grid-out " + grid), 0);
    EXPECT_NE(slurp(report).find("attractor"), std::string::npos);
    EXPECT_NE(slurp(grid).find("x,y,fx,fy"), std::string::npos);
}

TEST(CliTest, ConfigErrorsUseExitCodeTwo) {
    EXPECT_EQ(run_cli("solve --method banana --kind completion --d 6 --r 1 --n 10"), 2);
    EXPECT_EQ(run_cli("sweep --method l1 --kind completion --d 6 --r 1 --out /tmp/x.csv"), 2);
    EXPECT_EQ(run_cli("definitely-not-a-subcommand"), 2);
}

TEST(CliTest, VerifySuitePasses) {
    EXPECT_EQ(run_cli("verify"), 0);
}

TEST(CliTest, ConfigFileProvidesDefaults) {
    const std::string config = temp_path("cli_config.ini");
    {
        std::ofstream out(config);
        out << "[solve]\nd = 10\nr = 1\nn = 50\nkind = completion\nseeds = 5\n";
    }
    const std::string trace = temp_path("cfg_trace.csv");
    ASSERT_EQ(run_cli("--config " + config +
                      " solve --method lin_rfm --alpha 0.5 --epsilon 1e-6 --max-iters 40 --trace " +
                      trace),
              0);
    EXPECT_NE(slurp(trace).find("iter,objective"), std::string::npos);
}
