#pragma once

// Reference computations that share no code with the library. Each one is
// deliberately naive: slow, direct and easy to check by eye.

#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "hptrim/events.hpp"

namespace hptrim::oracle {

// Direct summation of exp(-rate (edge - s)) over events s strictly before
// each bin's left edge, and raw counts per bin divided by the width.
struct BruteDesign {
    Eigen::MatrixXd X;
    Eigen::MatrixXd Y;
};
BruteDesign brute_force_design(const EventData& ev, const std::vector<int>& columns, const std::vector<double>& rates,
                               double bin_width, int n_bins);

// Largest eigenvalue of a symmetric PSD matrix by power iteration.
double power_iteration(const Eigen::MatrixXd& A, int max_iter = 100000, double tol = 1e-14);

struct ProxFit {
    double intercept = 0.0;
    Eigen::VectorXd beta;
    double objective = 0.0;
    int iterations = 0;
};

// FISTA on (1/n) ||y - b0 - X beta||^2 + lambda ||beta||_1 with the
// intercept profiled out by explicit centring.
ProxFit proximal_gradient_lasso(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double lambda,
                                int max_iter = 200000, double tol = 1e-15);

// Kolmogorov-Smirnov statistic of `sample` against Exp(rate) and its
// asymptotic p-value.
struct KsResult {
    double statistic = 0.0;
    double p_value = 0.0;
};
KsResult ks_exponential(std::vector<double> sample, double rate);

// Spectral norm of (I - V V^T) U for orthonormal U, V of equal width.
double sin_theta(const Eigen::MatrixXd& U, const Eigen::MatrixXd& V);

// Uniformly random p x k matrix with orthonormal columns.
Eigen::MatrixXd random_orthonormal(int p, int k, std::mt19937_64& rng);

Eigen::MatrixXd gaussian_matrix(int rows, int cols, std::mt19937_64& rng);

// Events with independent uniform times on [0, horizon), sizes drawn from
// [0, max_per_component].
EventData random_events(int n_components, double horizon, int max_per_component, std::mt19937_64& rng);

} // namespace hptrim::oracle
