#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace hptrim {

struct LassoOptions {
    double tol = 1e-7;     // on the largest coefficient change in a sweep
    int max_iter = 10000;  // sweeps
    bool record_trace = false;
};

/**
 * Minimiser of (1/T) ||y - intercept - X beta||_2^2 + lambda ||beta||_1 with
 * an unpenalised intercept. Note the 1/T (not 1/(2T)) scaling: the coordinate
 * update soft-thresholds at lambda / 2.
 */
struct LassoFit {
    double intercept = 0.0;
    Eigen::VectorXd beta;
    double lambda = 0.0;
    int n_iter = 0;
    double objective = 0.0;
    bool converged = false;
    std::vector<double> objective_trace;  // after each sweep, when requested
};

// Objective value evaluated directly from the residual.
double lasso_objective(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double intercept,
                       const Eigen::VectorXd& beta, double lambda);

/**
 * Covariance-form coordinate descent for one design and many responses.
 *
 * The design is centred once and its Gram matrix cached, so each coordinate
 * update costs O(p). The intercept equals mean(y) - mean(X) beta after every
 * sweep, which is its exact minimiser.
 */
class LassoProblem {
public:
    explicit LassoProblem(const Eigen::MatrixXd& X);

    Eigen::Index n() const noexcept { return xc_.rows(); }
    Eigen::Index p() const noexcept { return xc_.cols(); }

    // Smallest lambda with an all-zero solution: max_j (2/T) |x_j^T (y - mean(y))|.
    double lambda_max(const Eigen::VectorXd& y) const;

    LassoFit solve(const Eigen::VectorXd& y, double lambda, const LassoOptions& opts = {},
                   const Eigen::VectorXd* warm_start = nullptr) const;

private:
    Eigen::MatrixXd xc_;
    Eigen::VectorXd xmean_;
    Eigen::MatrixXd gram_;  // xc^T xc / T
};

LassoFit fit_lasso(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double lambda, const LassoOptions& opts = {},
                   const Eigen::VectorXd* warm_start = nullptr);

// Per-coordinate subgradient slack with r = y - intercept - X beta and
// g_j = (2/T) x_j^T r: |g_j - lambda sign(beta_j)| on the support and
// max(0, |g_j| - lambda) off it.
Eigen::VectorXd kkt_residuals(const LassoFit& fit, const Eigen::MatrixXd& X, const Eigen::VectorXd& y);

enum class PenaltyStrategy { RateRule, EdgeBudget, TimeSplitCV };

struct PenaltyRule {
    PenaltyStrategy strategy = PenaltyStrategy::RateRule;
    double c = 0.5;               // RateRule: lambda = c * F_norm^2 * T^(-2/5)
    int budget = 30;              // EdgeBudget: pooled nonzero count
    int folds = 1;                // TimeSplitCV: a single contiguous split
    double train_fraction = 0.8;  // TimeSplitCV
    int path_length = 50;
    double path_min_ratio = 1e-3;

    void validate() const;
};

std::string to_string(PenaltyStrategy s);
PenaltyStrategy penalty_strategy_from_string(const std::string& s);

struct PathPoint {
    double lambda = 0.0;
    int nnz = 0;
    double objective = 0.0;       // summed over responses
    double validation_mse = 0.0;  // TimeSplitCV only
};

struct LambdaSelection {
    double lambda = 0.0;
    std::vector<PathPoint> path;
    std::string note;
};

// Log-spaced, descending from lambda_max to lambda_max * min_ratio.
std::vector<double> lambda_path(double lambda_max, int length, double min_ratio);

/**
 * Chooses one lambda shared by all responses (columns of Y).
 *
 * RateRule ignores the data; T is the observation horizon. EdgeBudget scans the pooled path downward and
 * keeps the last lambda whose total support is within budget; when even the
 * smallest lambda stays within budget it is returned with a note. TimeSplitCV
 * trains on the leading rows and scores the trailing rows.
 */
LambdaSelection select_lambda(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y, const PenaltyRule& rule,
                              double f_norm, double T, const LassoOptions& opts = {});

// Fits the path on the training pair and keeps the lambda with the smallest
// validation mean squared error (ties keep the larger lambda).
LambdaSelection select_lambda_holdout(const Eigen::MatrixXd& x_train, const Eigen::MatrixXd& y_train,
                                      const Eigen::MatrixXd& x_val, const Eigen::MatrixXd& y_val,
                                      const PenaltyRule& rule, const LassoOptions& opts = {});

void write_path_csv(const std::vector<PathPoint>& path, const std::filesystem::path& file);

} // namespace hptrim
