#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "hptrim/network_model.hpp"

#ifndef HPTRIM_CLI_PATH
#error "HPTRIM_CLI_PATH must name the command-line binary"
#endif

namespace fs = std::filesystem;

namespace {

int run(const std::string& args) {
    const std::string cmd = std::string("\"") + HPTRIM_CLI_PATH + "\" " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

class Cli : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("hptrim_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }
    std::string path(const std::string& name) const { return (dir_ / name).string(); }
    fs::path dir_;
};

} // namespace

TEST_F(Cli, SimulateFitExport) {
    ASSERT_EQ(run("simulate --preset fig2-desk --horizon 300 --seed 4 -o " + path("ev.csv")), 0);
    ASSERT_EQ(run("fit --events " + path("ev.csv") + " --method naive -o " + path("est.json") + " --dot " +
                  path("g.dot")),
              0);
    EXPECT_NE(slurp(path("g.dot")).find("digraph"), std::string::npos);
    EXPECT_EQ(run("export --estimate " + path("est.json") + " --format csv -o " + path("adj.csv")), 0);
    EXPECT_EQ(slurp(path("adj.csv")).rfind("target,source", 0), 0u);
}

TEST_F(Cli, ConfigErrorsExitTwo) {
    EXPECT_EQ(run("simulate --preset fig2-desk --horizon 100"), 2);
    EXPECT_EQ(run("experiment --preset nope --seed 1"), 2);
    EXPECT_EQ(run("bogus"), 2);
    std::ofstream(path("cfg.json")) << R"({"p": 12, "block_size": 5})";
    EXPECT_EQ(run("experiment --config " + path("cfg.json") + " --seed 1"), 2);
}

TEST_F(Cli, UnstableNetworkExitsThree) {
    hptrim::NetworkSpec s;
    s.p = 2;
    s.q = 0;
    s.mu = Eigen::VectorXd::Constant(2, 0.1);
    s.theta = Eigen::MatrixXd::Constant(2, 2, 0.9);
    s.delta = Eigen::MatrixXd::Zero(2, 0);
    s.hidden_block = Eigen::MatrixXd::Zero(0, 2);
    s.kernels.assign(2, hptrim::TransitionKernel{});
    hptrim::save_network(s, path("net.json"));
    EXPECT_EQ(run("simulate --network " + path("net.json") + " --horizon 100 --seed 1"), 3);
    std::ofstream(path("cfg.json")) << R"({"p": 10, "q": 5, "beta": 0.5, "n_replicates": 1})";
    EXPECT_EQ(run("experiment --config " + path("cfg.json") + " --seed 1"), 3);
}

TEST_F(Cli, BadDataExitsFour) {
    std::ofstream(path("bad.csv")) << "0,5\n0,3\n";
    EXPECT_EQ(run("ingest --input " + path("bad.csv") + " --time-unit 1 -o " + path("out.csv")), 4);
    std::ofstream(path("empty.csv")) << "";
    EXPECT_EQ(run("ingest --input " + path("empty.csv") + " -o " + path("out.csv")), 4);
    std::ofstream(path("garbage.csv")) << "# horizon=10 n_components=1 observed=0\n0,abc\n";
    EXPECT_EQ(run("fit --events " + path("garbage.csv")), 4);
}

TEST_F(Cli, IngestThenHoldout) {
    std::ofstream out(path("spikes.csv"));
    for (int k = 0; k < 3000; ++k) out << (k * 7919 % 5) << ',' << k * 10 << '\n';
    out.close();
    ASSERT_EQ(run("ingest --input " + path("spikes.csv") + " --time-unit 0.01 --decimation 10 -o " + path("ev.csv") +
                  " --mapping " + path("map.csv")),
              0);
    EXPECT_EQ(slurp(path("map.csv")), "index,source_id\n0,0\n1,1\n2,2\n3,3\n4,4\n");
    EXPECT_EQ(run("holdout --events " + path("ev.csv") + " --hide 1,3 --method naive -o " + path("h.json")), 0);
    EXPECT_NE(slurp(path("h.json")).find("overlap_fraction"), std::string::npos);
}
