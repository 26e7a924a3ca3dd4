#pragma once

#include <compare>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hptrim/design.hpp"
#include "hptrim/lasso.hpp"
#include "hptrim/network_model.hpp"

namespace hptrim {

enum class Method { HpTrim, Naive, HiveOracle, HiveEmpirical };

std::string to_string(Method m);
Method method_from_string(const std::string& s);

// Directed edge source -> target; beta_hat(target, source) is its weight.
struct Edge {
    int target = 0;
    int source = 0;
    auto operator<=>(const Edge&) const = default;
};

struct NetworkEstimate {
    Method method = Method::HpTrim;
    Eigen::VectorXd intercepts;
    Eigen::MatrixXd beta_hat;  // row i estimates beta_i
    Eigen::MatrixXd selected;  // beta_hat with entries at or below tau_select zeroed
    double lambda = 0.0;
    double tau_select = 0.0;
    std::vector<Edge> edges;  // row-major order
    std::optional<int> q_used;
    bool q_low_confidence = false;
    std::vector<int> observed_ids;
    std::string note;
};

struct EstimatorOptions {
    PenaltyRule penalty;
    // Selection threshold; defaults to lambda / 2.
    std::optional<double> tau_select;
    // Trim threshold; defaults to the median singular value.
    std::optional<double> trim_tau;
    LassoOptions lasso;
    int hetero_pca_iters = 10;
};

// Per-target lasso on the standardized, untransformed design.
NetworkEstimate fit_naive(const RegressionData& reg, const EstimatorOptions& opts = {});

// Trim transform of the standardized design, per-target lasso on the
// transformed data, coefficients mapped back to the original column scale.
NetworkEstimate fit_hp_trim(const RegressionData& reg, const EstimatorOptions& opts = {});

struct QEstimate {
    int q_hat = 0;
    Eigen::VectorXd eigenvalues;  // descending
    Eigen::VectorXd eigengaps;    // eigengaps[k-1] = lambda_k - lambda_{k+1}
    bool low_confidence = false;  // tied or vanishing largest gap
};

// Largest eigengap rule; ties go to the smallest k. Throws ConfigError for p < 2.
QEstimate estimate_q(const Eigen::MatrixXd& resid_cov);

/**
 * heteroPCA: start from sigma with its diagonal zeroed; on each iteration take
 * the top-q eigenpairs, overwrite the diagonal with that of the rank-q
 * reconstruction and keep the original off-diagonal. Stops early once the
 * diagonal moves by less than 1e-8 (max norm). Returns a p x q orthonormal
 * basis of the top-q eigenspace of the final matrix.
 */
Eigen::MatrixXd hetero_pca(const Eigen::MatrixXd& sigma, int q, int iters = 10);

struct HiveState {
    Eigen::MatrixXd residuals;  // n_bins x p
    Eigen::MatrixXd resid_cov;
    Eigen::VectorXd eigengaps;
    int q_hat = 0;
    Eigen::MatrixXd p_delta;
    Eigen::MatrixXd p_delta_perp;
};

// Projector onto the column space of `basis` (assumed orthonormal) and its complement.
Eigen::MatrixXd projector(const Eigen::MatrixXd& basis);

/**
 * HIVE adapted to binned Hawkes data: residuals of the naive fit give a
 * residual covariance; heteroPCA of it estimates col(Delta) with q taken from
 * the argument (HiveOracle) or the eigengap rule (HiveEmpirical); outcomes are
 * projected per time row onto the orthogonal complement and refitted.
 * q = 0 reduces to the naive fit. Throws ConfigError for q >= p.
 */
NetworkEstimate fit_hive(const RegressionData& reg, const EstimatorOptions& opts = {},
                         std::optional<int> q = std::nullopt, HiveState* state = nullptr);

NetworkEstimate fit_method(Method m, const RegressionData& reg, const EstimatorOptions& opts,
                           std::optional<int> oracle_q = std::nullopt);

// Keeps |beta_hat_ij| > tau_select; beta_hat itself is left untouched.
NetworkEstimate threshold_edges(NetworkEstimate est, double tau_select);

struct EdgeMetrics {
    int tp = 0;
    int fp = 0;
    int fn = 0;
    double precision = 1.0;  // 1 when nothing is selected
    double recall = 1.0;     // 1 when the truth is empty
    double l1_error = 0.0;   // sum_i ||beta_hat_i - beta_i||_1
};

EdgeMetrics edge_metrics(const NetworkEstimate& est, const Eigen::MatrixXd& truth_theta);
EdgeMetrics edge_metrics(const NetworkEstimate& est, const NetworkSpec& truth);

std::string estimate_to_json(const NetworkEstimate& est);
NetworkEstimate estimate_from_json(const std::string& text);
// Rows target,source,beta_hat,selected for every nonzero beta_hat entry.
void write_adjacency_csv(const NetworkEstimate& est, std::ostream& out);
// digraph with one statement per selected edge, pen width scaled by |beta_hat|.
void write_dot(const NetworkEstimate& est, std::ostream& out);

} // namespace hptrim
