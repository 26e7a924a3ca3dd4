#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace hptrim {

enum class KernelFamily { Exponential };

// kappa(t) = exp(-rate * t) for t >= 0.
struct TransitionKernel {
    KernelFamily family = KernelFamily::Exponential;
    double rate = 1.0;

    double value(double t) const noexcept;
    // Integral over [0, inf).
    double integral() const noexcept { return 1.0 / rate; }
    // Integral of kappa^2 over [0, inf).
    double integral_sq() const noexcept { return 0.5 / rate; }
};

/**
 * Ground-truth generative model over p observed and q hidden components.
 *
 * Component order is observed first (0..p-1) then hidden (p..p+q-1). The full
 * (p+q) x (p+q) coefficient matrix stacks [theta delta] over hidden_block; row
 * i holds the coefficients on sources feeding component i.
 */
struct NetworkSpec {
    int p = 0;
    int q = 0;
    Eigen::VectorXd mu;            // length p + q
    Eigen::MatrixXd theta;         // p x p, observed -> observed
    Eigen::MatrixXd delta;         // p x q, hidden -> observed
    Eigen::MatrixXd hidden_block;  // q x (p + q), drivers of hidden components
    std::vector<TransitionKernel> kernels;  // one per source component

    int n_components() const noexcept { return p + q; }
    Eigen::MatrixXd full_coefficients() const;
    // Omega_ij = |B_ij| * integral(kappa_j).
    Eigen::MatrixXd omega() const;
    // B_ij * integral(kappa_j), signed.
    Eigen::MatrixXd integrated_coefficients() const;
    std::vector<TransitionKernel> observed_kernels() const;
    std::vector<TransitionKernel> hidden_kernels() const;

    // Throws ConfigError on inconsistent dimensions, non-positive mu or kernel rates.
    void validate() const;
};

struct SpectrumReport {
    double lambda_max_omega = 0.0;  // largest eigenvalue of Omega^T Omega
    double max_row_sum = 0.0;
    double max_col_sum = 0.0;
    bool passes_a1 = false;  // lambda_max_omega < 1
    bool passes_a4 = false;  // max_row_sum < 1

    std::string describe() const;
};

SpectrumReport check_stationarity(const NetworkSpec& spec);

// True when every nonzero observed coefficient exceeds 2 * tau in magnitude.
bool check_beta_min(const NetworkSpec& spec, double tau);

/**
 * Observed nodes are wired in fully connected blocks (no self edges) with
 * weight beta. The first round(confounded_fraction * n_blocks) blocks each
 * receive delta from a dedicated, disjoint group of block_size hidden nodes.
 * Hidden nodes have baseline mu and no incoming edges.
 *
 * Throws ConfigError for bad shapes and StationarityError when the result
 * fails the stationarity check.
 */
NetworkSpec make_block_network(int p, int q, int block_size, double beta, double delta, double mu,
                               double confounded_fraction, double kernel_rate = 1.0);

/**
 * Like make_block_network with half of the blocks confounded, but the
 * confounded blocks carry no observed edges, so theta and delta have disjoint
 * row supports and theta^T delta = 0.
 */
NetworkSpec make_orthogonal_block_network(int p, int q, int block_size, double beta, double delta,
                                          double mu, double kernel_rate = 1.0);

// Number of nonzero singular values of delta (relative tolerance 1e-10).
int delta_rank(const NetworkSpec& spec);

std::string network_to_json(const NetworkSpec& spec);
NetworkSpec network_from_json(std::string_view text);
void save_network(const NetworkSpec& spec, const std::filesystem::path& path);
NetworkSpec load_network(const std::filesystem::path& path);

} // namespace hptrim
