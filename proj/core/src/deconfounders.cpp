#include "hptrim/deconfounders.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>

#include <json.hpp>

#include "hptrim/errors.hpp"
#include "hptrim/spectral.hpp"

namespace hptrim {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using json = nlohmann::json;

std::string to_string(Method m) {
    switch (m) {
    case Method::HpTrim: return "hp-trim";
    case Method::Naive: return "naive";
    case Method::HiveOracle: return "hive-oracle";
    case Method::HiveEmpirical: return "hive-empirical";
    }
    return "unknown";
}

Method method_from_string(const std::string& s) {
    if (s == "hp-trim") return Method::HpTrim;
    if (s == "naive") return Method::Naive;
    if (s == "hive-oracle") return Method::HiveOracle;
    if (s == "hive-empirical") return Method::HiveEmpirical;
    throw ConfigError("unknown method '" + s + "' (expected hp-trim, naive, hive-oracle or hive-empirical)");
}

namespace {

void check_design(const RegressionData& reg) {
    if (reg.X.rows() != reg.Y.rows() || reg.X.cols() != reg.Y.cols())
        throw DataError("regression data: X and Y shapes differ");
    if (reg.X.rows() < 2) throw DataError("regression data: need at least two bins");
    if (reg.X.cols() < 1) throw DataError("regression data: no observed components");
}

double horizon_of(const RegressionData& reg) { return static_cast<double>(reg.n_bins) * reg.bin_width; }

// Per-target lasso on (x_fit, y_fit) where x_fit is a (possibly transformed)
// standardized design; coefficients are mapped back through `scaling`.
NetworkEstimate fit_targets(Method method, const MatrixXd& x_fit, const MatrixXd& y_fit, const LambdaSelection& sel,
                            const ColumnScaling& scaling, const VectorXd& y_means, const EstimatorOptions& opts) {
    const Eigen::Index p = x_fit.cols();
    const LassoProblem prob(x_fit);

    NetworkEstimate est;
    est.method = method;
    est.lambda = sel.lambda;
    est.note = sel.note;
    est.beta_hat.resize(p, p);
    est.intercepts.resize(p);
    for (Eigen::Index i = 0; i < p; ++i) {
        const LassoFit fit = prob.solve(y_fit.col(i), sel.lambda, opts.lasso);
        if (!fit.converged && est.note.empty()) est.note = "coordinate descent hit max_iter for some targets";
        const VectorXd beta = fit.beta.cwiseQuotient(scaling.scale);
        est.beta_hat.row(i) = beta.transpose();
        est.intercepts[i] = y_means[i] - scaling.mean.dot(beta);
    }
    const double tau = opts.tau_select ? *opts.tau_select : 0.5 * sel.lambda;
    return threshold_edges(std::move(est), tau);
}

// The transform mixes rows, so each segment of the split is trimmed on its own
// before scoring; otherwise the validation rows leak into the training fit.
LambdaSelection trimmed_time_split(const MatrixXd& xs, const MatrixXd& yc, const EstimatorOptions& opts) {
    opts.penalty.validate();
    const Eigen::Index n = xs.rows();
    const auto n_train = static_cast<Eigen::Index>(std::floor(opts.penalty.train_fraction * static_cast<double>(n)));
    if (n_train < 2 || n - n_train < 2) throw DataError("time-split CV: too few rows to split");
    auto segment = [&](Eigen::Index start, Eigen::Index len) {
        MatrixXd x = xs.middleRows(start, len);
        MatrixXd y = yc.middleRows(start, len);
        x.rowwise() -= x.colwise().mean();
        y.rowwise() -= y.colwise().mean();
        return apply(trim_transform(x, opts.trim_tau), x, y);
    };
    const TransformedData train = segment(0, n_train);
    const TransformedData val = segment(n_train, n - n_train);
    return select_lambda_holdout(train.x, train.y, val.x, val.y, opts.penalty, opts.lasso);
}

} // namespace

NetworkEstimate fit_naive(const RegressionData& reg, const EstimatorOptions& opts) {
    check_design(reg);
    const ColumnScaling scaling = column_scaling(reg.X);
    const MatrixXd xs = standardize(reg.X, scaling);
    const LambdaSelection sel = select_lambda(xs, reg.Y, opts.penalty, 1.0, horizon_of(reg), opts.lasso);
    NetworkEstimate est =
        fit_targets(Method::Naive, xs, reg.Y, sel, scaling, reg.Y.colwise().mean().transpose(), opts);
    est.observed_ids = reg.observed_ids;
    return est;
}

NetworkEstimate fit_hp_trim(const RegressionData& reg, const EstimatorOptions& opts) {
    check_design(reg);
    const ColumnScaling scaling = column_scaling(reg.X);
    const MatrixXd xs = standardize(reg.X, scaling);
    const VectorXd y_means = reg.Y.colwise().mean().transpose();
    const MatrixXd yc = reg.Y.rowwise() - y_means.transpose();
    const SpectralTransform tf = trim_transform(xs, opts.trim_tau);
    const TransformedData td = apply(tf, xs, yc);
    const LambdaSelection sel = opts.penalty.strategy == PenaltyStrategy::TimeSplitCV
                                    ? trimmed_time_split(xs, yc, opts)
                                    : select_lambda(td.x, td.y, opts.penalty, tf.lambda_max(), horizon_of(reg), opts.lasso);
    NetworkEstimate est = fit_targets(Method::HpTrim, td.x, td.y, sel, scaling, y_means, opts);
    est.observed_ids = reg.observed_ids;
    return est;
}

QEstimate estimate_q(const MatrixXd& resid_cov) {
    const Eigen::Index p = resid_cov.rows();
    if (resid_cov.cols() != p) throw ConfigError("estimate_q: covariance must be square");
    if (p < 2) throw ConfigError("estimate_q: need at least two components");
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(resid_cov, Eigen::EigenvaluesOnly);
    QEstimate out;
    out.eigenvalues = eig.eigenvalues().reverse();
    out.eigengaps = out.eigenvalues.head(p - 1) - out.eigenvalues.tail(p - 1);
    const double best = out.eigengaps.maxCoeff();
    const double scale = std::max(std::abs(out.eigenvalues[0]), std::numeric_limits<double>::min());
    const double tie_tol = 1e-9 * scale;
    int ties = 0;
    out.q_hat = 0;
    for (Eigen::Index k = 0; k < p - 1; ++k) {
        if (out.eigengaps[k] >= best - tie_tol) {
            if (out.q_hat == 0) out.q_hat = static_cast<int>(k) + 1;
            ++ties;
        }
    }
    out.low_confidence = ties > 1 || best <= tie_tol;
    return out;
}

namespace {

// Eigenvectors of the q largest eigenvalues (descending order).
MatrixXd top_eigenvectors(const MatrixXd& m, int q, VectorXd* values = nullptr) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(m);
    const Eigen::Index p = m.rows();
    MatrixXd vecs(p, q);
    if (values) values->resize(q);
    for (int k = 0; k < q; ++k) {
        vecs.col(k) = eig.eigenvectors().col(p - 1 - k);
        if (values) (*values)[k] = eig.eigenvalues()[p - 1 - k];
    }
    return vecs;
}

} // namespace

MatrixXd hetero_pca(const MatrixXd& sigma, int q, int iters) {
    const Eigen::Index p = sigma.rows();
    if (sigma.cols() != p) throw ConfigError("hetero_pca: matrix must be square");
    if (q < 1 || q >= p) throw ConfigError("hetero_pca: need 1 <= q < p");
    if (iters < 0) throw ConfigError("hetero_pca: iters must be nonnegative");
    if (!sigma.isApprox(sigma.transpose(), 1e-10)) throw ConfigError("hetero_pca: matrix must be symmetric");

    MatrixXd m = 0.5 * (sigma + sigma.transpose());
    m.diagonal().setZero();
    for (int it = 0; it < iters; ++it) {
        VectorXd vals;
        const MatrixXd vecs = top_eigenvectors(m, q, &vals);
        const VectorXd diag = (vecs * vals.asDiagonal() * vecs.transpose()).diagonal();
        const double moved = (diag - m.diagonal()).cwiseAbs().maxCoeff();
        m.diagonal() = diag;
        if (moved < 1e-8) break;
    }
    return top_eigenvectors(m, q);
}

MatrixXd projector(const MatrixXd& basis) { return basis * basis.transpose(); }

NetworkEstimate fit_hive(const RegressionData& reg, const EstimatorOptions& opts, std::optional<int> q,
                         HiveState* state) {
    check_design(reg);
    const Eigen::Index p = reg.X.cols();
    if (q && (*q < 0 || *q >= p)) throw ConfigError("fit_hive: need 0 <= q < p");

    HiveState st;
    const NetworkEstimate first = fit_naive(reg, opts);
    st.residuals = reg.Y - reg.X * first.beta_hat.transpose();
    st.residuals.rowwise() -= first.intercepts.transpose();
    st.resid_cov = st.residuals.transpose() * st.residuals / static_cast<double>(reg.X.rows());

    bool low_conf = false;
    if (q) {
        st.q_hat = *q;
        if (p >= 2) st.eigengaps = estimate_q(st.resid_cov).eigengaps;
    } else {
        const QEstimate qe = estimate_q(st.resid_cov);
        st.q_hat = qe.q_hat;
        st.eigengaps = qe.eigengaps;
        low_conf = qe.low_confidence;
    }

    if (st.q_hat == 0) {
        st.p_delta = MatrixXd::Zero(p, p);
    } else {
        st.p_delta = projector(hetero_pca(st.resid_cov, st.q_hat, opts.hetero_pca_iters));
    }
    st.p_delta_perp = MatrixXd::Identity(p, p) - st.p_delta;

    RegressionData projected;
    projected.n_bins = reg.n_bins;
    projected.bin_width = reg.bin_width;
    projected.X = reg.X;
    projected.Y = st.q_hat == 0 ? reg.Y : MatrixXd(reg.Y * st.p_delta_perp.transpose());
    projected.observed_ids = reg.observed_ids;

    NetworkEstimate est = fit_naive(projected, opts);
    est.method = q ? Method::HiveOracle : Method::HiveEmpirical;
    est.q_used = st.q_hat;
    est.q_low_confidence = low_conf;
    if (state) *state = std::move(st);
    return est;
}

NetworkEstimate fit_method(Method m, const RegressionData& reg, const EstimatorOptions& opts,
                           std::optional<int> oracle_q) {
    switch (m) {
    case Method::HpTrim: return fit_hp_trim(reg, opts);
    case Method::Naive: return fit_naive(reg, opts);
    case Method::HiveOracle:
        if (!oracle_q) throw ConfigError("hive-oracle needs the true number of latent directions");
        return fit_hive(reg, opts, oracle_q);
    case Method::HiveEmpirical: return fit_hive(reg, opts, std::nullopt);
    }
    throw ConfigError("unknown method");
}

NetworkEstimate threshold_edges(NetworkEstimate est, double tau_select) {
    if (!(tau_select >= 0.0)) throw ConfigError("threshold_edges: tau_select must be nonnegative");
    est.tau_select = tau_select;
    est.selected = est.beta_hat;
    est.edges.clear();
    for (Eigen::Index i = 0; i < est.beta_hat.rows(); ++i) {
        for (Eigen::Index j = 0; j < est.beta_hat.cols(); ++j) {
            if (std::abs(est.beta_hat(i, j)) > tau_select)
                est.edges.push_back({static_cast<int>(i), static_cast<int>(j)});
            else
                est.selected(i, j) = 0.0;
        }
    }
    return est;
}

EdgeMetrics edge_metrics(const NetworkEstimate& est, const MatrixXd& truth_theta) {
    if (truth_theta.rows() != est.beta_hat.rows() || truth_theta.cols() != est.beta_hat.cols())
        throw DataError("edge_metrics: estimate and truth dimensions differ");
    EdgeMetrics m;
    int n_true = 0;
    for (Eigen::Index k = 0; k < truth_theta.size(); ++k) n_true += truth_theta.data()[k] != 0.0;
    for (const Edge& e : est.edges) {
        if (truth_theta(e.target, e.source) != 0.0)
            ++m.tp;
        else
            ++m.fp;
    }
    m.fn = n_true - m.tp;
    m.precision = m.tp + m.fp > 0 ? static_cast<double>(m.tp) / (m.tp + m.fp) : 1.0;
    m.recall = n_true > 0 ? static_cast<double>(m.tp) / n_true : 1.0;
    m.l1_error = (est.beta_hat - truth_theta).cwiseAbs().sum();
    return m;
}

EdgeMetrics edge_metrics(const NetworkEstimate& est, const NetworkSpec& truth) {
    return edge_metrics(est, truth.theta);
}

std::string estimate_to_json(const NetworkEstimate& est) {
    json j;
    j["method"] = to_string(est.method);
    j["lambda"] = est.lambda;
    j["tau_select"] = est.tau_select;
    j["q_used"] = est.q_used ? json(*est.q_used) : json(nullptr);
    j["q_low_confidence"] = est.q_low_confidence;
    j["observed_ids"] = est.observed_ids;
    j["intercepts"] = std::vector<double>(est.intercepts.data(), est.intercepts.data() + est.intercepts.size());
    json rows = json::array();
    for (Eigen::Index i = 0; i < est.beta_hat.rows(); ++i) {
        std::vector<double> row(static_cast<std::size_t>(est.beta_hat.cols()));
        for (Eigen::Index k = 0; k < est.beta_hat.cols(); ++k) row[static_cast<std::size_t>(k)] = est.beta_hat(i, k);
        rows.push_back(row);
    }
    j["beta_hat"] = std::move(rows);
    json edges = json::array();
    for (const Edge& e : est.edges) edges.push_back({{"target", e.target}, {"source", e.source}});
    j["edges"] = std::move(edges);
    j["note"] = est.note;
    return j.dump(2);
}

NetworkEstimate estimate_from_json(const std::string& text) {
    try {
        const json j = json::parse(text);
        NetworkEstimate est;
        est.method = method_from_string(j.at("method").get<std::string>());
        est.lambda = j.at("lambda").get<double>();
        if (!j.at("q_used").is_null()) est.q_used = j.at("q_used").get<int>();
        est.q_low_confidence = j.value("q_low_confidence", false);
        est.observed_ids = j.at("observed_ids").get<std::vector<int>>();
        const auto icpt = j.at("intercepts").get<std::vector<double>>();
        est.intercepts = Eigen::Map<const VectorXd>(icpt.data(), static_cast<Eigen::Index>(icpt.size()));
        const auto rows = j.at("beta_hat").get<std::vector<std::vector<double>>>();
        const auto p = static_cast<Eigen::Index>(rows.size());
        est.beta_hat.resize(p, p);
        for (Eigen::Index i = 0; i < p; ++i) {
            if (static_cast<Eigen::Index>(rows[static_cast<std::size_t>(i)].size()) != p)
                throw DataError("estimate json: beta_hat is not square");
            for (Eigen::Index k = 0; k < p; ++k)
                est.beta_hat(i, k) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
        }
        est.note = j.value("note", std::string());
        return threshold_edges(std::move(est), j.at("tau_select").get<double>());
    } catch (const json::exception& e) {
        throw DataError(std::string("estimate json: ") + e.what());
    }
}

namespace {

std::string node_label(const NetworkEstimate& est, int k) {
    if (k < static_cast<int>(est.observed_ids.size())) return std::to_string(est.observed_ids[static_cast<std::size_t>(k)]);
    return std::to_string(k);
}

} // namespace

void write_adjacency_csv(const NetworkEstimate& est, std::ostream& out) {
    out << "target,source,beta_hat,selected\n" << std::setprecision(17);
    for (Eigen::Index i = 0; i < est.beta_hat.rows(); ++i)
        for (Eigen::Index k = 0; k < est.beta_hat.cols(); ++k)
            if (est.beta_hat(i, k) != 0.0)
                out << node_label(est, static_cast<int>(i)) << ',' << node_label(est, static_cast<int>(k)) << ','
                    << est.beta_hat(i, k) << ',' << (std::abs(est.beta_hat(i, k)) > est.tau_select ? 1 : 0) << '\n';
}

void write_dot(const NetworkEstimate& est, std::ostream& out) {
    double max_abs = 0.0;
    for (const Edge& e : est.edges) max_abs = std::max(max_abs, std::abs(est.beta_hat(e.target, e.source)));
    out << "digraph \"" << to_string(est.method) << "\" {\n  node [shape=circle];\n";
    for (Eigen::Index k = 0; k < est.beta_hat.rows(); ++k) out << "  \"" << node_label(est, static_cast<int>(k)) << "\";\n";
    out << std::setprecision(6);
    for (const Edge& e : est.edges) {
        const double w = est.beta_hat(e.target, e.source);
        const double width = max_abs > 0.0 ? 0.5 + 4.5 * std::abs(w) / max_abs : 1.0;
        out << "  \"" << node_label(est, e.source) << "\" -> \"" << node_label(est, e.target) << "\" [penwidth="
            << width << ", color=\"" << (w >= 0.0 ? "black" : "blue") << "\", label=\"" << w << "\"];\n";
    }
    out << "}\n";
}

} // namespace hptrim
