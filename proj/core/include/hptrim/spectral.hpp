#pragma once

#include <filesystem>
#include <optional>

#include <Eigen/Dense>

namespace hptrim {

// Thin SVD, X = u * diag(d) * v^T with d descending.
struct Svd {
    Eigen::MatrixXd u;  // n x r
    Eigen::VectorXd d;  // r
    Eigen::MatrixXd v;  // p x r
};

// Throws DataError on non-finite input.
Svd compute_svd(const Eigen::MatrixXd& X);

/**
 * Spectral map F = u * diag(d_tilde / d) * u^T built from the SVD of a design.
 * Directions with d_k = 0 are mapped to zero.
 */
struct SpectralTransform {
    Eigen::MatrixXd u;
    Eigen::VectorXd d;
    Eigen::VectorXd d_tilde;
    double tau = 0.0;
    Eigen::MatrixXd v;

    Eigen::VectorXd ratios() const;
    // Largest eigenvalue of F.
    double lambda_max() const;
    // F * M for any M with u.rows() rows.
    Eigen::MatrixXd left_multiply(const Eigen::MatrixXd& M) const;
};

// Median of the singular values above `tol` (mean of the two central ones for
// an even count). Throws DataError when none is above `tol`.
double median_singular_value(const Eigen::VectorXd& d, double tol = 0.0);

// d_tilde_k = min(tau, d_k); tau defaults to the median singular value.
// Throws ConfigError for tau <= 0.
SpectralTransform trim_transform(const Eigen::MatrixXd& X, std::optional<double> tau = std::nullopt);
SpectralTransform trim_transform(Svd svd, std::optional<double> tau = std::nullopt);

struct TransformedData {
    Eigen::MatrixXd x;
    Eigen::MatrixXd y;
};

// (F X, F Y). Throws DataError on a row-count mismatch.
TransformedData apply(const SpectralTransform& tf, const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y);

// CSV with columns index,d,d_tilde.
void write_spectrum_csv(const SpectralTransform& tf, const std::filesystem::path& path);

} // namespace hptrim
