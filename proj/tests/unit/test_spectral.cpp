#include <gtest/gtest.h>

#include <random>

#include "hptrim/errors.hpp"
#include "hptrim/spectral.hpp"
#include "oracles.hpp"

using namespace hptrim;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

VectorXd singular_values(const MatrixXd& m) { return Eigen::JacobiSVD<MatrixXd>(m).singularValues(); }

} // namespace

TEST(Svd, ReconstructsAndSorts) {
    std::mt19937_64 rng(1);
    const MatrixXd x = oracle::gaussian_matrix(30, 6, rng);
    const auto s = compute_svd(x);
    EXPECT_LT((s.u * s.d.asDiagonal() * s.v.transpose() - x).norm(), 1e-10);
    for (Eigen::Index k = 1; k < s.d.size(); ++k) EXPECT_GE(s.d[k - 1], s.d[k]);
    MatrixXd bad = x;
    bad(0, 0) = std::nan("");
    EXPECT_THROW(compute_svd(bad), DataError);
}

TEST(Median, OddEvenAndTolerance) {
    EXPECT_EQ(median_singular_value(VectorXd::LinSpaced(5, 5, 1)), 3.0);
    VectorXd d(4);
    d << 8, 4, 2, 0;
    EXPECT_EQ(median_singular_value(d), 4.0);
    EXPECT_EQ(median_singular_value(d, 3.0), 6.0);
    EXPECT_THROW(median_singular_value(VectorXd::Zero(3)), DataError);
}

TEST(Trim, SpectrumIsClipped) {
    std::mt19937_64 rng(2);
    const MatrixXd x = oracle::gaussian_matrix(40, 8, rng) * oracle::gaussian_matrix(8, 8, rng);
    const auto tf = trim_transform(x);
    const VectorXd d = singular_values(x);
    EXPECT_NEAR(tf.tau, 0.5 * (d[3] + d[4]), 1e-10);
    const VectorXd dt = singular_values(tf.left_multiply(x));
    for (Eigen::Index k = 0; k < d.size(); ++k) EXPECT_NEAR(dt[k], std::min(tf.tau, d[k]), 1e-8);
    EXPECT_NEAR(tf.lambda_max(), 1.0, 1e-12);
    EXPECT_LE(tf.ratios().maxCoeff(), 1.0 + 1e-15);
}

TEST(Trim, LargeTauIsIdentityOnColumnSpace) {
    std::mt19937_64 rng(3);
    const MatrixXd x = oracle::gaussian_matrix(25, 5, rng);
    const auto tf = trim_transform(x, 1e6);
    EXPECT_LT((tf.left_multiply(x) - x).norm(), 1e-10);
    EXPECT_THROW(trim_transform(x, 0.0), ConfigError);
}

TEST(Trim, RankDeficientDirectionsMapToZero) {
    std::mt19937_64 rng(4);
    MatrixXd x = oracle::gaussian_matrix(20, 4, rng);
    x.col(3) = x.col(0) + x.col(1);
    const auto tf = trim_transform(x);
    const VectorXd dt = singular_values(tf.left_multiply(x));
    EXPECT_LT(dt[3], 1e-10);
}

TEST(Trim, ApplyChecksRows) {
    std::mt19937_64 rng(5);
    const MatrixXd x = oracle::gaussian_matrix(20, 4, rng);
    const auto tf = trim_transform(x);
    const auto td = apply(tf, x, MatrixXd::Ones(20, 2));
    EXPECT_EQ(td.y.rows(), 20);
    EXPECT_THROW(apply(tf, x, MatrixXd::Ones(19, 2)), DataError);
}
