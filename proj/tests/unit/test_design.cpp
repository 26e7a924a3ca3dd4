#include <gtest/gtest.h>

#include <filesystem>
#include <random>

#include "hptrim/design.hpp"
#include "hptrim/errors.hpp"
#include "hptrim/hawkes_sim.hpp"
#include "oracles.hpp"

using namespace hptrim;
using Eigen::MatrixXd;
using Eigen::VectorXd;

TEST(Design, MatchesBruteForceWithMixedRates) {
    std::mt19937_64 rng(123);
    for (int rep = 0; rep < 10; ++rep) {
        auto ev = oracle::random_events(4, 50.0, 60, rng);
        ev.observed_ids = {0, 2, 3};
        const std::vector<TransitionKernel> kernels{{KernelFamily::Exponential, 0.7},
                                                    {KernelFamily::Exponential, 1.3},
                                                    {KernelFamily::Exponential, 2.0},
                                                    {KernelFamily::Exponential, 0.4}};
        const double bw = 0.5;
        const auto reg = build_design(ev, kernels, bw, true);
        ASSERT_EQ(reg.n_bins, 100);
        const auto brute = oracle::brute_force_design(ev, {0, 2, 3}, {0.7, 2.0, 0.4}, bw, reg.n_bins);
        EXPECT_LT((reg.X - brute.X).cwiseAbs().maxCoeff(), 1e-10);
        EXPECT_EQ(reg.Y, brute.Y);
        ASSERT_TRUE(reg.Z.has_value());
        const auto hidden = oracle::brute_force_design(ev, {1}, {1.3}, bw, reg.n_bins);
        EXPECT_LT((*reg.Z - hidden.X).cwiseAbs().maxCoeff(), 1e-10);
        EXPECT_EQ(reg.hidden_ids, std::vector<int>{1});
        EXPECT_EQ(reg.kernel_rates, (std::vector<double>{0.7, 2.0, 0.4}));
    }
}

TEST(Design, FirstRowIsZeroAndEventsOnEdgesCountForward) {
    EventData ev;
    ev.n_components = 1;
    ev.horizon = 10.0;
    ev.events = {{0.0, 1.0, 1.5}};
    ev.observed_ids = {0};
    const auto reg = build_design(ev, TransitionKernel{}, 1.0);
    EXPECT_EQ(reg.X(0, 0), 0.0);
    EXPECT_EQ(reg.Y(0, 0), 1.0);
    EXPECT_EQ(reg.Y(1, 0), 2.0);
    // The event at t = 1 sits on the edge of bin 1 and is not yet in X(1).
    EXPECT_NEAR(reg.X(1, 0), std::exp(-1.0), 1e-15);
    EXPECT_NEAR(reg.X(2, 0), std::exp(-2.0) + std::exp(-1.0) + std::exp(-0.5), 1e-15);
    EXPECT_FALSE(reg.Z.has_value());
}

TEST(Design, Errors) {
    EventData ev;
    ev.n_components = 1;
    ev.horizon = 5.0;
    ev.events = {{}};
    ev.observed_ids = {0};
    EXPECT_THROW(build_design(ev, TransitionKernel{}, 1.0), ConfigError);
    ev.horizon = 100.0;
    EXPECT_THROW(build_design(ev, TransitionKernel{}, 0.0), ConfigError);
    const std::vector<TransitionKernel> two(2);
    EXPECT_THROW(build_design(ev, two, 1.0), ConfigError);
}

TEST(Design, Scaling) {
    MatrixXd x(4, 2);
    x << 1, 5, 2, 5, 3, 5, 4, 5;
    const auto s = column_scaling(x);
    EXPECT_DOUBLE_EQ(s.mean[0], 2.5);
    EXPECT_EQ(s.scale[1], 1.0);
    const MatrixXd z = standardize(x, s);
    EXPECT_NEAR(z.col(0).mean(), 0.0, 1e-15);
    EXPECT_NEAR(z.col(0).squaredNorm() / 4.0, 1.0, 1e-12);
    EXPECT_EQ(z.col(1).norm(), 0.0);
}

TEST(Design, ConfoundingBiasMatchesLeastSquares) {
    const auto spec = make_block_network(10, 5, 5, 0.12, 0.10, 0.05, 0.5);
    const auto ev = simulate(spec, 2000.0, 4);
    const auto reg = build_design(ev, spec.kernels, 1.0, true);
    const VectorXd d = spec.delta.row(0).transpose();
    const auto diag = oracle_confounding_bias(reg, d);

    MatrixXd a(reg.n_bins, reg.p() + 1);
    a.col(0).setOnes();
    a.rightCols(reg.p()) = reg.X;
    const VectorXd target = *reg.Z * d;
    const VectorXd coef = a.colPivHouseholderQr().solve(target);
    EXPECT_LT((diag.b - coef.tail(reg.p())).cwiseAbs().maxCoeff(), 1e-6);
    EXPECT_NEAR(diag.intercept, coef[0], 1e-6);
    EXPECT_NEAR(diag.b_l2_sq, diag.b.squaredNorm(), 1e-15);
    EXPECT_NEAR(diag.b_l1, diag.b.lpNorm<1>(), 1e-15);

    auto no_hidden = reg;
    no_hidden.Z.reset();
    EXPECT_THROW(oracle_confounding_bias(no_hidden, d), DataError);
}

TEST(Design, ContainerRoundTrip) {
    const auto spec = make_block_network(10, 5, 5, 0.12, 0.10, 0.05, 0.5);
    const auto reg = build_design(simulate(spec, 200.0, 8), spec.kernels, 0.5, true);
    const auto path = std::filesystem::temp_directory_path() / "hptrim_regdata.bin";
    save_regression_data(reg, path);
    const auto back = load_regression_data(path);
    std::filesystem::remove(path);
    EXPECT_EQ(back.n_bins, reg.n_bins);
    EXPECT_EQ(back.bin_width, reg.bin_width);
    EXPECT_EQ(back.X, reg.X);
    EXPECT_EQ(back.Y, reg.Y);
    ASSERT_TRUE(back.Z.has_value());
    EXPECT_EQ(*back.Z, *reg.Z);
    EXPECT_EQ(back.observed_ids, reg.observed_ids);
    EXPECT_EQ(back.kernel_rates, reg.kernel_rates);
}
