#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace hptrim::oracle {

using Eigen::MatrixXd;
using Eigen::VectorXd;

BruteDesign brute_force_design(const EventData& ev, const std::vector<int>& columns, const std::vector<double>& rates,
                               double bin_width, int n_bins) {
    BruteDesign d;
    const auto p = static_cast<Eigen::Index>(columns.size());
    d.X = MatrixXd::Zero(n_bins, p);
    d.Y = MatrixXd::Zero(n_bins, p);
    for (int t = 0; t < n_bins; ++t) {
        const double left = t * bin_width;
        const double right = (t + 1) * bin_width;
        for (Eigen::Index j = 0; j < p; ++j) {
            const auto& times = ev.events[static_cast<std::size_t>(columns[static_cast<std::size_t>(j)])];
            double x = 0.0;
            int count = 0;
            for (double s : times) {
                if (s < left) x += std::exp(-rates[static_cast<std::size_t>(j)] * (left - s));
                if (s >= left && s < right) ++count;
            }
            d.X(t, j) = x;
            d.Y(t, j) = count / bin_width;
        }
    }
    return d;
}

double power_iteration(const MatrixXd& A, int max_iter, double tol) {
    VectorXd v = VectorXd::Ones(A.rows()) / std::sqrt(static_cast<double>(A.rows()));
    // A fixed non-symmetric start avoids landing orthogonal to the top vector.
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] += 1e-3 * static_cast<double>(i % 7);
    v.normalize();
    double lambda = 0.0;
    for (int it = 0; it < max_iter; ++it) {
        VectorXd w = A * v;
        const double norm = w.norm();
        if (norm == 0.0) return 0.0;
        w /= norm;
        const double next = w.dot(A * w);
        v = w;
        if (std::abs(next - lambda) <= tol * std::max(1.0, std::abs(next))) return next;
        lambda = next;
    }
    return lambda;
}

ProxFit proximal_gradient_lasso(const MatrixXd& X, const VectorXd& y, double lambda, int max_iter, double tol) {
    const auto n = static_cast<double>(X.rows());
    const VectorXd xbar = X.colwise().mean();
    const double ybar = y.mean();
    const MatrixXd xc = X.rowwise() - xbar.transpose();
    const VectorXd yc = y.array() - ybar;
    const MatrixXd H = 2.0 / n * xc.transpose() * xc;
    const double L = std::max(power_iteration(H), 1e-12);

    auto smooth = [&](const VectorXd& b) { return (yc - xc * b).squaredNorm() / n; };
    auto objective = [&](const VectorXd& b) { return smooth(b) + lambda * b.lpNorm<1>(); };
    auto soft = [](const VectorXd& v, double t) {
        return VectorXd((v.array().abs() - t).max(0.0) * v.array().sign());
    };

    VectorXd beta = VectorXd::Zero(X.cols());
    VectorXd z = beta;
    double tk = 1.0;
    double prev = objective(beta);
    ProxFit fit;
    for (int it = 0; it < max_iter; ++it) {
        const VectorXd grad = -2.0 / n * xc.transpose() * (yc - xc * z);
        const VectorXd next = soft(z - grad / L, lambda / L);
        const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * tk * tk));
        z = next + ((tk - 1.0) / t_next) * (next - beta);
        beta = next;
        tk = t_next;
        const double obj = objective(beta);
        // Restart momentum when the objective goes up.
        if (obj > prev) {
            z = beta;
            tk = 1.0;
        }
        fit.iterations = it + 1;
        if (std::abs(prev - obj) <= tol && it > 100) {
            prev = obj;
            break;
        }
        prev = obj;
    }
    fit.beta = beta;
    fit.intercept = ybar - xbar.dot(beta);
    fit.objective = objective(beta);
    return fit;
}

KsResult ks_exponential(std::vector<double> sample, double rate) {
    std::sort(sample.begin(), sample.end());
    const auto n = static_cast<double>(sample.size());
    double d = 0.0;
    for (std::size_t i = 0; i < sample.size(); ++i) {
        const double cdf = 1.0 - std::exp(-rate * sample[i]);
        d = std::max({d, (static_cast<double>(i) + 1.0) / n - cdf, cdf - static_cast<double>(i) / n});
    }
    // Kolmogorov distribution with the usual small-sample correction.
    const double lam = (std::sqrt(n) + 0.12 + 0.11 / std::sqrt(n)) * d;
    double p = 0.0;
    for (int k = 1; k <= 100; ++k) p += 2.0 * ((k % 2) ? 1.0 : -1.0) * std::exp(-2.0 * k * k * lam * lam);
    return {d, std::clamp(p, 0.0, 1.0)};
}

double sin_theta(const MatrixXd& U, const MatrixXd& V) {
    const MatrixXd resid = U - V * (V.transpose() * U);
    Eigen::JacobiSVD<MatrixXd> svd(resid);
    return svd.singularValues().size() ? svd.singularValues()[0] : 0.0;
}

MatrixXd gaussian_matrix(int rows, int cols, std::mt19937_64& rng) {
    std::normal_distribution<double> n01;
    MatrixXd m(rows, cols);
    for (int j = 0; j < cols; ++j)
        for (int i = 0; i < rows; ++i) m(i, j) = n01(rng);
    return m;
}

MatrixXd random_orthonormal(int p, int k, std::mt19937_64& rng) {
    const MatrixXd g = gaussian_matrix(p, k, rng);
    Eigen::HouseholderQR<MatrixXd> qr(g);
    return qr.householderQ() * MatrixXd::Identity(p, k);
}

EventData random_events(int n_components, double horizon, int max_per_component, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unif(0.0, horizon);
    std::uniform_int_distribution<int> count(0, max_per_component);
    EventData ev;
    ev.n_components = n_components;
    ev.horizon = horizon;
    for (int c = 0; c < n_components; ++c) {
        std::set<double> times;
        const int k = count(rng);
        while (static_cast<int>(times.size()) < k) times.insert(unif(rng));
        ev.events.emplace_back(times.begin(), times.end());
        ev.observed_ids.push_back(c);
    }
    return ev;
}

} // namespace hptrim::oracle
