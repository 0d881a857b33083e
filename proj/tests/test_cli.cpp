#include <gtest/gtest.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sys/wait.h>

#include <nlohmann/json.hpp>

namespace fs = std::filesystem;

namespace {

struct Result {
    int code = -1;
    std::string out;
};

Result run(const std::string& args) {
    const std::string cmd = std::string("CORRQ_SEED= ") + CORRQ_CLI_PATH + " " + args + " 2>/dev/null";
    Result r;
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe) return r;
    std::array<char, 4096> buf{};
    std::size_t got = 0;
    while ((got = fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), got);
    const int status = pclose(pipe);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

class Cli : public ::testing::Test {
protected:
    void SetUp() override {
        dir = fs::temp_directory_path() / ("corrq_cli_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
                                           "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    void TearDown() override { fs::remove_all(dir); }

    std::string write(const std::string& name, const std::string& text) {
        const fs::path p = dir / name;
        std::ofstream(p) << text;
        return p.string();
    }

    fs::path dir;
};

}  // namespace

TEST_F(Cli, SimulateWritesTraceCsv) {
    const auto cfg = write("sim.toml", "n = 1\nbeta = 0.0\ntheta = 1.0\nhorizon = 10.0\n");
    const auto r = run("simulate --config " + cfg + " --seed 5");
    ASSERT_EQ(r.code, 0);
    EXPECT_EQ(r.out.substr(0, r.out.find('\n')), "t,X,Q,Z1,Z2,L,w,w_v");
    EXPECT_EQ(std::count(r.out.begin(), r.out.end(), '\n'), 102);
}

TEST_F(Cli, SimulateIsDeterministic) {
    const auto cfg = write("sim.toml", "n = 8\nbeta = -0.5\ntheta = 0.5\nhorizon = 50.0\ndt = 0.5\n");
    const auto a = run("simulate --config " + cfg + " --seed 9");
    const auto b = run("simulate --config " + cfg + " --seed 9");
    const auto c = run("simulate --config " + cfg + " --seed 10");
    ASSERT_EQ(a.code, 0);
    EXPECT_EQ(a.out, b.out);
    EXPECT_NE(a.out, c.out);
}

TEST_F(Cli, SimulateToDirectoryEchoesSeed) {
    const auto cfg = write("sim.json", R"({"n": 4, "beta": 0.5, "theta": 1, "horizon": 5, "seed": 77})");
    const auto out = (dir / "out").string();
    ASSERT_EQ(run("simulate --config " + cfg + " --out " + out).code, 0);
    EXPECT_TRUE(fs::exists(dir / "out" / "trace.csv"));
    std::ifstream js(dir / "out" / "trace_summary.json");
    const auto j = nlohmann::json::parse(js);
    EXPECT_EQ(j["seed"], 77u);
    EXPECT_EQ(j["invariant_violations"], 0u);
}

TEST_F(Cli, MissingThetaIsConfigError) {
    const auto cfg = write("sim.toml", "n = 1\nbeta = 0.0\nhorizon = 10.0\n");
    const std::string cmd = std::string(CORRQ_CLI_PATH) + " simulate --config " + cfg + " 2>&1";
    FILE* pipe = popen(cmd.c_str(), "r");
    ASSERT_NE(pipe, nullptr);
    std::string text;
    std::array<char, 512> buf{};
    std::size_t got = 0;
    while ((got = fread(buf.data(), 1, buf.size(), pipe)) > 0) text.append(buf.data(), got);
    const int status = pclose(pipe);
    EXPECT_EQ(WEXITSTATUS(status), 2);
    EXPECT_NE(text.find("theta"), std::string::npos);
}

TEST_F(Cli, InfeasibleStaffingIsConfigError) {
    const auto cfg = write("sim.toml", "n = 4\nbeta = 3.0\ntheta = 1.0\nhorizon = 10.0\n");
    EXPECT_EQ(run("simulate --config " + cfg).code, 2);
}

TEST_F(Cli, LimitsXStar) {
    const auto r = run("limits --xstar --beta=-2 --theta=1");
    EXPECT_EQ(r.code, 0);
    EXPECT_EQ(r.out, "2\n");
    EXPECT_EQ(run("limits --xstar --beta=1 --theta=1").code, 2);
}

TEST_F(Cli, LimitsTables) {
    const auto hw = run("limits --hw --beta=1 --points=5");
    ASSERT_EQ(hw.code, 0);
    EXPECT_EQ(hw.out.substr(0, hw.out.find('\n')), "x,pdf,cdf");
    const auto lof = run("limits --lof --beta=-1 --theta=1 --x0=3 --points=11");
    ASSERT_EQ(lof.code, 0);
    EXPECT_EQ(std::count(lof.out.begin(), lof.out.end(), '\n'), 12);
}

TEST_F(Cli, CoupleInfServer) {
    const auto r = run("couple --kind=pc_infserver --n=4 --beta=-1 --theta=1 --horizon=200 --seed=3");
    ASSERT_EQ(r.code, 0);
    const auto j = nlohmann::json::parse(r.out);
    EXPECT_EQ(j["violations"], 0u);
    EXPECT_EQ(j["seed"], 3u);
    EXPECT_EQ(j["kind"], "pc_infserver");
}

TEST_F(Cli, CouplePcPcFromConfig) {
    const auto cfg = write("couple.toml", R"(
kind = "pc_pc"
n = 1
customers = 5000
[system1]
lambda = 0.8
theta = 0.4
[system2]
lambda = 0.8
theta = 0.7
)");
    const auto r = run("couple --config " + cfg);
    ASSERT_EQ(r.code, 0);
    const auto j = nlohmann::json::parse(r.out);
    EXPECT_EQ(j["customers_checked"], 5000u);
    EXPECT_EQ(j["violations"], 0u);
}

TEST_F(Cli, ExperimentMissingPlan) {
    EXPECT_EQ(run("experiment --plan " + (dir / "missing.toml").string()).code, 2);
}

TEST_F(Cli, ExperimentRunsSmallPlan) {
    const auto plan = write("plan.toml", R"(
kind = "lof_fixed_point"
n = [16, 64]
beta = -1.0
theta = 1.0
[estimator]
samples = 100
)");
    const auto out = (dir / "exp").string();
    const auto r = run("experiment --plan " + plan + " --seed 4 --out " + out);
    ASSERT_EQ(r.code, 0);
    const auto j = nlohmann::json::parse(r.out);
    EXPECT_EQ(j["params"]["seed"], 4u);
    EXPECT_TRUE(fs::exists(dir / "exp" / "lof_fixed_point_summary.json"));
    EXPECT_TRUE(fs::exists(dir / "exp" / "lof_fixed_point_Q_n64.csv"));
}

TEST_F(Cli, SeedFromEnvironment) {
    const auto cfg = write("sim.toml", "n = 2\nbeta = 0.0\ntheta = 1.0\nhorizon = 5.0\n");
    const std::string base = std::string(CORRQ_CLI_PATH) + " simulate --config " + cfg;
    auto capture = [](const std::string& cmd) {
        std::string text;
        FILE* pipe = popen(cmd.c_str(), "r");
        std::array<char, 4096> buf{};
        std::size_t got = 0;
        while ((got = fread(buf.data(), 1, buf.size(), pipe)) > 0) text.append(buf.data(), got);
        pclose(pipe);
        return text;
    };
    EXPECT_EQ(capture("CORRQ_SEED=12 " + base), capture(base + " --seed 12"));
    EXPECT_NE(capture("CORRQ_SEED=12 " + base), capture("CORRQ_SEED=13 " + base));
}

TEST_F(Cli, UnknownSubcommandIsUsageError) {
    EXPECT_EQ(run("frobnicate").code, 2);
    EXPECT_EQ(run("").code, 2);
}
