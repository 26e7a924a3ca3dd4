#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "hptrim/events.hpp"
#include "hptrim/network_model.hpp"

namespace hptrim {

/**
 * Binned regression view of an event stream.
 *
 * Row t of X holds the integrated process x_j evaluated at the left edge of
 * bin t, so it only sees events strictly before t * bin_width. Row t of Y is
 * the event count in [t * bin_width, (t + 1) * bin_width) divided by bin_width.
 * Z is built like X from the hidden components and only exists for simulated
 * data.
 */
struct RegressionData {
    int n_bins = 0;
    double bin_width = 1.0;
    Eigen::MatrixXd X;  // n_bins x p
    Eigen::MatrixXd Y;  // n_bins x p
    std::optional<Eigen::MatrixXd> Z;  // n_bins x q
    std::vector<int> observed_ids;
    std::vector<int> hidden_ids;
    std::vector<double> kernel_rates;  // per observed column

    int p() const noexcept { return static_cast<int>(X.cols()); }
};

// `kernels` has one entry per component of `ev`.
RegressionData build_design(const EventData& ev, std::span<const TransitionKernel> kernels, double bin_width,
                            bool keep_hidden = false);

// Same kernel for every component.
RegressionData build_design(const EventData& ev, const TransitionKernel& kernel, double bin_width,
                            bool keep_hidden = false);

// Column means and standard deviations; zero-variance columns get scale 1.
struct ColumnScaling {
    Eigen::VectorXd mean;
    Eigen::VectorXd scale;
};

ColumnScaling column_scaling(const Eigen::MatrixXd& X);
Eigen::MatrixXd standardize(const Eigen::MatrixXd& X, const ColumnScaling& s);

struct ConfoundingDiagnostic {
    Eigen::VectorXd b;
    double intercept = 0.0;
    double b_l1 = 0.0;
    double b_l2_sq = 0.0;
    double dense_fraction = 0.0;  // share of |b_j| > 1e-8
};

/**
 * Least-squares projection of the hidden contribution Z * delta_i onto the
 * observed covariates (with an intercept, i.e. the covariance projection).
 * Solved from the normal equations with a 1e-10 ridge jitter.
 * Throws DataError when Z is absent.
 */
ConfoundingDiagnostic oracle_confounding_bias(const RegressionData& reg, const Eigen::VectorXd& delta_i);

/**
 * Binary container: the line "HPTRIM-REGDATA 1", then a JSON header line
 * (dimensions, bin_width, ids, kernel rates, matrix list), then the matrices
 * X, Y and optionally Z as column-major little-endian float64.
 */
void save_regression_data(const RegressionData& reg, const std::filesystem::path& path);
RegressionData load_regression_data(const std::filesystem::path& path);

} // namespace hptrim
