#include <gtest/gtest.h>

#include <filesystem>

#include "hptrim/errors.hpp"
#include "hptrim/network_model.hpp"
#include "oracles.hpp"

using namespace hptrim;
using Eigen::MatrixXd;

namespace {

NetworkSpec two_node(double b) {
    NetworkSpec s;
    s.p = 2;
    s.q = 0;
    s.mu = Eigen::VectorXd::Constant(2, 0.05);
    s.theta = MatrixXd::Zero(2, 2);
    s.theta(0, 1) = s.theta(1, 0) = b;
    s.delta = MatrixXd::Zero(2, 0);
    s.hidden_block = MatrixXd::Zero(0, 2);
    s.kernels.assign(2, TransitionKernel{KernelFamily::Exponential, 1.0});
    return s;
}

} // namespace

TEST(Kernel, ExponentialIntegrals) {
    const TransitionKernel k{KernelFamily::Exponential, 2.0};
    EXPECT_DOUBLE_EQ(k.value(0.0), 1.0);
    EXPECT_NEAR(k.value(1.0), std::exp(-2.0), 1e-15);
    EXPECT_DOUBLE_EQ(k.integral(), 0.5);
    EXPECT_DOUBLE_EQ(k.integral_sq(), 0.25);
}

TEST(Stationarity, TwoNodeSpectrum) {
    const auto rep = check_stationarity(two_node(0.5));
    EXPECT_NEAR(rep.lambda_max_omega, 0.25, 1e-12);
    EXPECT_NEAR(rep.max_row_sum, 0.5, 1e-15);
    EXPECT_TRUE(rep.passes_a1);
    EXPECT_TRUE(rep.passes_a4);

    const auto bad = check_stationarity(two_node(1.2));
    EXPECT_FALSE(bad.passes_a1);
    EXPECT_FALSE(bad.passes_a4);
}

TEST(Stationarity, OmegaUsesAbsoluteValuesAndKernelMass) {
    auto s = two_node(-0.4);
    s.kernels[1].rate = 2.0;
    const MatrixXd om = s.omega();
    EXPECT_NEAR(om(0, 1), 0.2, 1e-15);
    EXPECT_NEAR(om(1, 0), 0.4, 1e-15);
    EXPECT_NEAR(s.integrated_coefficients()(0, 1), -0.2, 1e-15);
}

TEST(Validate, RejectsBadShapesAndRates) {
    auto s = two_node(0.1);
    s.mu[0] = 0.0;
    EXPECT_THROW(s.validate(), ConfigError);
    s = two_node(0.1);
    s.kernels[0].rate = -1.0;
    EXPECT_THROW(s.validate(), ConfigError);
    s = two_node(0.1);
    s.theta = MatrixXd::Zero(3, 3);
    EXPECT_THROW(s.validate(), ConfigError);
}

TEST(BlockNetwork, StructureAndConfounding) {
    const auto s = make_block_network(10, 5, 5, 0.12, 0.10, 0.05, 0.5);
    EXPECT_EQ(s.p, 10);
    EXPECT_EQ(s.q, 5);
    for (int i = 0; i < 10; ++i) {
        EXPECT_EQ(s.theta(i, i), 0.0);
        for (int j = 0; j < 10; ++j)
            if (i != j) EXPECT_EQ(s.theta(i, j), (i / 5 == j / 5) ? 0.12 : 0.0);
    }
    EXPECT_EQ(s.delta.topRows(5).minCoeff(), 0.10);
    EXPECT_EQ(s.delta.bottomRows(5).maxCoeff(), 0.0);
    EXPECT_EQ(s.hidden_block.norm(), 0.0);
    EXPECT_EQ(delta_rank(s), 1);
}

TEST(BlockNetwork, Errors) {
    EXPECT_THROW(make_block_network(11, 5, 5, 0.1, 0.1, 0.05, 0.5), ConfigError);
    EXPECT_THROW(make_block_network(20, 5, 5, 0.1, 0.1, 0.05, 0.5), ConfigError);
    EXPECT_THROW(make_block_network(10, 5, 5, 0.3, 0.1, 0.05, 0.5), StationarityError);
    EXPECT_THROW(make_block_network(10, 5, 5, 0.1, 0.1, 0.05, 1.5), ConfigError);
}

TEST(OrthogonalNetwork, DisjointRowSupports) {
    const auto s = make_orthogonal_block_network(20, 20, 5, 0.2, 0.18, 0.05);
    EXPECT_NEAR((s.theta.transpose() * s.delta).norm(), 0.0, 0.0);
    for (int i = 0; i < 20; ++i) {
        const bool confounded = s.delta.row(i).norm() > 0;
        const bool wired = s.theta.row(i).norm() > 0;
        EXPECT_NE(confounded, wired) << "row " << i;
    }
    EXPECT_EQ(delta_rank(s), 2);
}

TEST(Stationarity, BlockSpectrumMatchesPowerIteration) {
    const auto s = make_block_network(10, 5, 5, 0.12, 0.10, 0.05, 0.5);
    const MatrixXd om = s.omega();
    const auto rep = check_stationarity(s);
    EXPECT_NEAR(rep.lambda_max_omega, oracle::power_iteration(om.transpose() * om), 1e-10);
    EXPECT_LT(rep.lambda_max_omega, 1.0);

    NetworkSpec empty = s;
    empty.theta.setZero();
    empty.delta.setZero();
    EXPECT_EQ(check_stationarity(empty).lambda_max_omega, 0.0);
    EXPECT_TRUE(check_stationarity(empty).passes_a1);
}

TEST(BetaMin, Threshold) {
    const auto s = make_block_network(10, 5, 5, 0.12, 0.10, 0.05, 0.5);
    EXPECT_TRUE(check_beta_min(s, 0.05));
    EXPECT_FALSE(check_beta_min(s, 0.06));
}

TEST(NetworkJson, RoundTrip) {
    const auto s = make_block_network(10, 5, 5, 0.12, 0.10, 0.05, 0.5, 1.5);
    const auto back = network_from_json(network_to_json(s));
    EXPECT_EQ(back.p, s.p);
    EXPECT_EQ(back.q, s.q);
    EXPECT_EQ(back.full_coefficients(), s.full_coefficients());
    EXPECT_EQ(back.mu, s.mu);
    ASSERT_EQ(back.kernels.size(), s.kernels.size());
    EXPECT_EQ(back.kernels[3].rate, 1.5);

    const auto path = std::filesystem::temp_directory_path() / "hptrim_network_rt.json";
    save_network(s, path);
    EXPECT_EQ(load_network(path).full_coefficients(), s.full_coefficients());
    std::filesystem::remove(path);
}

TEST(NetworkJson, MalformedInput) {
    EXPECT_THROW(network_from_json("{not json"), ConfigError);
    EXPECT_THROW(network_from_json(R"({"p": 2})"), ConfigError);
}
