#include "hptrim/spectral.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <limits>
#include <vector>

#include "hptrim/errors.hpp"

namespace hptrim {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

double rank_tolerance(const VectorXd& d, Eigen::Index rows, Eigen::Index cols) {
    if (d.size() == 0) return 0.0;
    return static_cast<double>(std::max(rows, cols)) * std::numeric_limits<double>::epsilon() * d[0];
}

} // namespace

Svd compute_svd(const MatrixXd& X) {
    if (!X.allFinite()) throw DataError("compute_svd: matrix has non-finite entries");
    Eigen::BDCSVD<MatrixXd> svd(X, Eigen::ComputeThinU | Eigen::ComputeThinV);
    return {svd.matrixU(), svd.singularValues(), svd.matrixV()};
}

VectorXd SpectralTransform::ratios() const {
    const double tol = rank_tolerance(d, u.rows(), v.rows());
    VectorXd r(d.size());
    for (Eigen::Index k = 0; k < d.size(); ++k) r[k] = d[k] > tol && d[k] > 0.0 ? d_tilde[k] / d[k] : 0.0;
    return r;
}

double SpectralTransform::lambda_max() const {
    const VectorXd r = ratios();
    return r.size() ? r.maxCoeff() : 0.0;
}

MatrixXd SpectralTransform::left_multiply(const MatrixXd& M) const {
    if (M.rows() != u.rows()) throw DataError("spectral transform: row count mismatch");
    return u * (ratios().asDiagonal() * (u.transpose() * M));
}

double median_singular_value(const VectorXd& d, double tol) {
    std::vector<double> nz;
    for (Eigen::Index k = 0; k < d.size(); ++k)
        if (d[k] > tol && d[k] > 0.0) nz.push_back(d[k]);
    if (nz.empty()) throw DataError("trim transform: design has no nonzero singular value");
    std::sort(nz.begin(), nz.end());
    const std::size_t m = nz.size();
    return m % 2 ? nz[m / 2] : 0.5 * (nz[m / 2 - 1] + nz[m / 2]);
}

SpectralTransform trim_transform(Svd svd, std::optional<double> tau) {
    SpectralTransform tf;
    tf.tau = tau ? *tau : median_singular_value(svd.d, rank_tolerance(svd.d, svd.u.rows(), svd.v.rows()));
    if (!(tf.tau > 0.0)) throw ConfigError("trim transform: tau must be positive");
    tf.d = std::move(svd.d);
    tf.d_tilde = tf.d.cwiseMin(tf.tau);
    tf.u = std::move(svd.u);
    tf.v = std::move(svd.v);
    return tf;
}

SpectralTransform trim_transform(const MatrixXd& X, std::optional<double> tau) {
    if (tau && !(*tau > 0.0)) throw ConfigError("trim transform: tau must be positive");
    return trim_transform(compute_svd(X), tau);
}

TransformedData apply(const SpectralTransform& tf, const MatrixXd& X, const MatrixXd& Y) {
    if (X.rows() != tf.u.rows() || Y.rows() != tf.u.rows())
        throw DataError("apply: data rows do not match the transform");
    if (X.cols() != tf.v.rows()) throw DataError("apply: design columns do not match the transform");
    return {tf.left_multiply(X), tf.left_multiply(Y)};
}

void write_spectrum_csv(const SpectralTransform& tf, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    out << "index,d,d_tilde\n" << std::setprecision(17);
    for (Eigen::Index k = 0; k < tf.d.size(); ++k) out << k << ',' << tf.d[k] << ',' << tf.d_tilde[k] << '\n';
}

} // namespace hptrim
