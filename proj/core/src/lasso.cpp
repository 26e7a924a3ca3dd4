#include "hptrim/lasso.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>

#include "hptrim/errors.hpp"

namespace hptrim {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

double soft_threshold(double z, double t) {
    if (z > t) return z - t;
    if (z < -t) return z + t;
    return 0.0;
}

} // namespace

double lasso_objective(const MatrixXd& X, const VectorXd& y, double intercept, const VectorXd& beta, double lambda) {
    const VectorXd r = (y - X * beta).array() - intercept;
    return r.squaredNorm() / static_cast<double>(y.size()) + lambda * beta.lpNorm<1>();
}

LassoProblem::LassoProblem(const MatrixXd& X) {
    if (X.rows() == 0) throw DataError("lasso: design has no rows");
    if (!X.allFinite()) throw DataError("lasso: design has non-finite entries");
    xmean_ = X.colwise().mean().transpose();
    xc_ = X.rowwise() - xmean_.transpose();
    gram_ = xc_.transpose() * xc_ / static_cast<double>(X.rows());
}

double LassoProblem::lambda_max(const VectorXd& y) const {
    if (y.size() != n()) throw DataError("lasso: response length does not match the design");
    if (p() == 0) return 0.0;
    const VectorXd corr = xc_.transpose() * (y.array() - y.mean()).matrix() / static_cast<double>(n());
    return 2.0 * corr.cwiseAbs().maxCoeff();
}

LassoFit LassoProblem::solve(const VectorXd& y, double lambda, const LassoOptions& opts,
                             const VectorXd* warm_start) const {
    if (!(lambda >= 0.0)) throw ConfigError("lasso: lambda must be nonnegative");
    if (!(opts.tol > 0.0)) throw ConfigError("lasso: tol must be positive");
    if (y.size() != n()) throw DataError("lasso: response length does not match the design");
    if (!y.allFinite()) throw DataError("lasso: response has non-finite entries");

    const double T = static_cast<double>(n());
    const double ymean = y.mean();
    const VectorXd yc = y.array() - ymean;
    const VectorXd corr = xc_.transpose() * yc / T;
    const double yy = yc.squaredNorm() / T;

    LassoFit fit;
    fit.lambda = lambda;
    fit.beta = VectorXd::Zero(p());
    if (warm_start) {
        if (warm_start->size() != p()) throw DataError("lasso: warm start has the wrong length");
        fit.beta = *warm_start;
    }
    // grad = corr - gram * beta; the partial-residual correlation of j is grad_j + gram_jj beta_j.
    VectorXd grad = corr - gram_ * fit.beta;
    const double half = 0.5 * lambda;

    auto smooth_objective = [&] { return yy - corr.dot(fit.beta) - grad.dot(fit.beta); };
    auto update = [&](Eigen::Index j) {
        const double gjj = gram_(j, j);
        if (gjj <= 0.0) return 0.0;
        const double old = fit.beta[j];
        const double next = soft_threshold(grad[j] + gjj * old, half) / gjj;
        const double step = next - old;
        if (step != 0.0) {
            fit.beta[j] = next;
            grad.noalias() -= gram_.col(j) * step;
        }
        return std::abs(step);
    };

    std::vector<Eigen::Index> active;
    while (fit.n_iter < opts.max_iter) {
        double max_step = 0.0;
        for (Eigen::Index j = 0; j < p(); ++j) max_step = std::max(max_step, update(j));
        ++fit.n_iter;
        if (opts.record_trace) fit.objective_trace.push_back(smooth_objective() + lambda * fit.beta.lpNorm<1>());
        if (max_step < opts.tol) {
            fit.converged = true;
            break;
        }
        // Iterate on the support until it settles, then confirm with a full sweep.
        active.clear();
        for (Eigen::Index j = 0; j < p(); ++j)
            if (fit.beta[j] != 0.0) active.push_back(j);
        while (fit.n_iter < opts.max_iter) {
            double inner = 0.0;
            for (Eigen::Index j : active) inner = std::max(inner, update(j));
            ++fit.n_iter;
            if (opts.record_trace)
                fit.objective_trace.push_back(smooth_objective() + lambda * fit.beta.lpNorm<1>());
            if (inner < opts.tol) break;
        }
    }
    fit.intercept = ymean - xmean_.dot(fit.beta);
    const VectorXd r = yc - xc_ * fit.beta;
    fit.objective = r.squaredNorm() / T + lambda * fit.beta.lpNorm<1>();
    return fit;
}

LassoFit fit_lasso(const MatrixXd& X, const VectorXd& y, double lambda, const LassoOptions& opts,
                   const VectorXd* warm_start) {
    return LassoProblem(X).solve(y, lambda, opts, warm_start);
}

VectorXd kkt_residuals(const LassoFit& fit, const MatrixXd& X, const VectorXd& y) {
    if (X.rows() != y.size() || X.cols() != fit.beta.size()) throw DataError("kkt_residuals: shape mismatch");
    const VectorXd r = (y - X * fit.beta).array() - fit.intercept;
    const VectorXd g = 2.0 / static_cast<double>(y.size()) * (X.transpose() * r);
    VectorXd slack(g.size());
    for (Eigen::Index j = 0; j < g.size(); ++j) {
        const double b = fit.beta[j];
        if (b != 0.0)
            slack[j] = std::abs(g[j] - fit.lambda * (b > 0.0 ? 1.0 : -1.0));
        else
            slack[j] = std::max(0.0, std::abs(g[j]) - fit.lambda);
    }
    return slack;
}

void PenaltyRule::validate() const {
    if (!(c > 0.0)) throw ConfigError("penalty: c must be positive");
    if (budget < 0) throw ConfigError("penalty: budget must be nonnegative");
    if (folds < 1) throw ConfigError("penalty: folds must be at least 1");
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw ConfigError("penalty: train_fraction must be in (0,1)");
    if (path_length < 2) throw ConfigError("penalty: path_length must be at least 2");
    if (!(path_min_ratio > 0.0 && path_min_ratio < 1.0)) throw ConfigError("penalty: path_min_ratio must be in (0,1)");
}

std::string to_string(PenaltyStrategy s) {
    switch (s) {
    case PenaltyStrategy::RateRule: return "rate";
    case PenaltyStrategy::EdgeBudget: return "edge-budget";
    case PenaltyStrategy::TimeSplitCV: return "time-split-cv";
    }
    return "unknown";
}

PenaltyStrategy penalty_strategy_from_string(const std::string& s) {
    if (s == "rate") return PenaltyStrategy::RateRule;
    if (s == "edge-budget") return PenaltyStrategy::EdgeBudget;
    if (s == "time-split-cv") return PenaltyStrategy::TimeSplitCV;
    throw ConfigError("unknown penalty strategy '" + s + "' (expected rate, edge-budget or time-split-cv)");
}

std::vector<double> lambda_path(double lambda_max, int length, double min_ratio) {
    std::vector<double> path(static_cast<std::size_t>(length));
    for (int k = 0; k < length; ++k)
        path[static_cast<std::size_t>(k)] =
            lambda_max * std::pow(min_ratio, static_cast<double>(k) / static_cast<double>(length - 1));
    return path;
}

namespace {

double pooled_lambda_max(const LassoProblem& prob, const MatrixXd& Y) {
    double lm = 0.0;
    for (Eigen::Index k = 0; k < Y.cols(); ++k) lm = std::max(lm, prob.lambda_max(Y.col(k)));
    return lm;
}

LambdaSelection select_edge_budget(const MatrixXd& X, const MatrixXd& Y, const PenaltyRule& rule,
                                   const LassoOptions& opts) {
    const LassoProblem prob(X);
    const double lmax = pooled_lambda_max(prob, Y);
    LambdaSelection sel;
    sel.lambda = lmax;
    if (lmax <= 0.0) {
        sel.path.push_back({0.0, 0, 0.0, 0.0});
        sel.lambda = 0.0;
        sel.note = "all responses are uncorrelated with the design; lambda = 0";
        return sel;
    }
    std::vector<VectorXd> warm(static_cast<std::size_t>(Y.cols()), VectorXd::Zero(X.cols()));
    for (double lam : lambda_path(lmax, rule.path_length, rule.path_min_ratio)) {
        PathPoint pt{lam, 0, 0.0, 0.0};
        for (Eigen::Index k = 0; k < Y.cols(); ++k) {
            const LassoFit f = prob.solve(Y.col(k), lam, opts, &warm[static_cast<std::size_t>(k)]);
            pt.nnz += static_cast<int>((f.beta.array() != 0.0).count());
            pt.objective += f.objective;
            warm[static_cast<std::size_t>(k)] = f.beta;
        }
        sel.path.push_back(pt);
        if (pt.nnz > rule.budget) return sel;
        sel.lambda = lam;
    }
    sel.note = "edge budget not reached on the path; returning the smallest path lambda";
    return sel;
}

LambdaSelection select_time_split(const MatrixXd& X, const MatrixXd& Y, const PenaltyRule& rule,
                                  const LassoOptions& opts) {
    const Eigen::Index n = X.rows();
    const auto n_train = static_cast<Eigen::Index>(std::floor(rule.train_fraction * static_cast<double>(n)));
    if (n_train < 2 || n - n_train < 1) throw DataError("time-split CV: too few rows to split");
    return select_lambda_holdout(X.topRows(n_train), Y.topRows(n_train), X.bottomRows(n - n_train),
                                 Y.bottomRows(n - n_train), rule, opts);
}

} // namespace

LambdaSelection select_lambda_holdout(const MatrixXd& x_train, const MatrixXd& y_train, const MatrixXd& x_val,
                                      const MatrixXd& y_val, const PenaltyRule& rule, const LassoOptions& opts) {
    rule.validate();
    if (x_train.rows() != y_train.rows() || x_val.rows() != y_val.rows() || x_train.cols() != x_val.cols() ||
        y_train.cols() != y_val.cols())
        throw DataError("holdout selection: inconsistent shapes");
    if (x_train.rows() < 2 || x_val.rows() < 1) throw DataError("holdout selection: too few rows");
    const LassoProblem prob(x_train);
    const double lmax = pooled_lambda_max(prob, y_train);
    LambdaSelection sel;
    if (lmax <= 0.0) {
        sel.lambda = 0.0;
        sel.note = "all responses are uncorrelated with the training design; lambda = 0";
        return sel;
    }
    std::vector<VectorXd> warm(static_cast<std::size_t>(y_train.cols()), VectorXd::Zero(x_train.cols()));
    double best = std::numeric_limits<double>::infinity();
    for (double lam : lambda_path(lmax, rule.path_length, rule.path_min_ratio)) {
        PathPoint pt{lam, 0, 0.0, 0.0};
        double sse = 0.0;
        for (Eigen::Index k = 0; k < y_train.cols(); ++k) {
            const LassoFit f = prob.solve(y_train.col(k), lam, opts, &warm[static_cast<std::size_t>(k)]);
            warm[static_cast<std::size_t>(k)] = f.beta;
            pt.nnz += static_cast<int>((f.beta.array() != 0.0).count());
            pt.objective += f.objective;
            const VectorXd r = (y_val.col(k) - x_val * f.beta).array() - f.intercept;
            sse += r.squaredNorm();
        }
        pt.validation_mse = sse / static_cast<double>(x_val.rows() * std::max<Eigen::Index>(y_val.cols(), 1));
        sel.path.push_back(pt);
        // Strict improvement only, so ties keep the larger lambda.
        if (pt.validation_mse < best) {
            best = pt.validation_mse;
            sel.lambda = lam;
        }
    }
    return sel;
}

LambdaSelection select_lambda(const MatrixXd& X, const MatrixXd& Y, const PenaltyRule& rule, double f_norm, double T,
                              const LassoOptions& opts) {
    rule.validate();
    if (X.rows() != Y.rows()) throw DataError("select_lambda: X and Y row counts differ");
    switch (rule.strategy) {
    case PenaltyStrategy::RateRule: {
        if (T <= 0) throw ConfigError("select_lambda: T must be positive");
        LambdaSelection sel;
        sel.lambda = rule.c * f_norm * f_norm * std::pow(T, -0.4);
        return sel;
    }
    case PenaltyStrategy::EdgeBudget: return select_edge_budget(X, Y, rule, opts);
    case PenaltyStrategy::TimeSplitCV: return select_time_split(X, Y, rule, opts);
    }
    throw ConfigError("select_lambda: unknown strategy");
}

void write_path_csv(const std::vector<PathPoint>& path, const std::filesystem::path& file) {
    std::ofstream out(file);
    if (!out) throw DataError("cannot write " + file.string());
    out << "lambda,nnz,objective,validation_mse\n" << std::setprecision(17);
    for (const auto& pt : path) out << pt.lambda << ',' << pt.nnz << ',' << pt.objective << ',' << pt.validation_mse << '\n';
}

} // namespace hptrim
