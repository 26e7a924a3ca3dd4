#include "hptrim/network_model.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "hptrim/errors.hpp"

namespace hptrim {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using json = nlohmann::json;

double TransitionKernel::value(double t) const noexcept { return t < 0.0 ? 0.0 : std::exp(-rate * t); }

MatrixXd NetworkSpec::full_coefficients() const {
    const int n = n_components();
    MatrixXd b = MatrixXd::Zero(n, n);
    b.topLeftCorner(p, p) = theta;
    if (q > 0) {
        b.topRightCorner(p, q) = delta;
        b.bottomRows(q) = hidden_block;
    }
    return b;
}

MatrixXd NetworkSpec::integrated_coefficients() const {
    MatrixXd b = full_coefficients();
    for (int j = 0; j < n_components(); ++j) b.col(j) *= kernels[j].integral();
    return b;
}

MatrixXd NetworkSpec::omega() const { return integrated_coefficients().cwiseAbs(); }

std::vector<TransitionKernel> NetworkSpec::observed_kernels() const {
    return {kernels.begin(), kernels.begin() + p};
}

std::vector<TransitionKernel> NetworkSpec::hidden_kernels() const {
    return {kernels.begin() + p, kernels.end()};
}

void NetworkSpec::validate() const {
    const int n = p + q;
    std::ostringstream err;
    if (p < 0 || q < 0) err << "negative dimension; ";
    if (mu.size() != n) err << "mu has length " << mu.size() << ", expected " << n << "; ";
    if (theta.rows() != p || theta.cols() != p) err << "theta must be " << p << "x" << p << "; ";
    if (delta.rows() != p || delta.cols() != q) err << "delta must be " << p << "x" << q << "; ";
    if (hidden_block.rows() != q || hidden_block.cols() != n)
        err << "hidden_block must be " << q << "x" << n << "; ";
    if (static_cast<int>(kernels.size()) != n) err << "need one kernel per component; ";
    if (!err.str().empty()) throw ConfigError("invalid network spec: " + err.str());
    for (int i = 0; i < n; ++i) {
        if (!(mu[i] > 0.0) || !std::isfinite(mu[i]))
            throw ConfigError("invalid network spec: mu[" + std::to_string(i) + "] must be positive");
        if (!(kernels[i].rate > 0.0) || !std::isfinite(kernels[i].rate))
            throw ConfigError("invalid network spec: kernel rate of component " + std::to_string(i) +
                              " must be positive");
    }
    if (!theta.allFinite() || !delta.allFinite() || !hidden_block.allFinite())
        throw ConfigError("invalid network spec: non-finite coefficient");
}

std::string SpectrumReport::describe() const {
    std::ostringstream os;
    os << "lambda_max(Omega^T Omega) = " << lambda_max_omega << (passes_a1 ? " (< 1)" : " (>= 1, not stationary)")
       << ", max row sum = " << max_row_sum << ", max col sum = " << max_col_sum;
    return os.str();
}

SpectrumReport check_stationarity(const NetworkSpec& spec) {
    const MatrixXd om = spec.omega();
    SpectrumReport rep;
    if (om.size() == 0) {
        rep.passes_a1 = rep.passes_a4 = true;
        return rep;
    }
    const MatrixXd gram = om.transpose() * om;
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(gram, Eigen::EigenvaluesOnly);
    rep.lambda_max_omega = std::max(0.0, eig.eigenvalues().maxCoeff());
    rep.max_row_sum = om.rowwise().sum().maxCoeff();
    rep.max_col_sum = om.colwise().sum().maxCoeff();
    rep.passes_a1 = rep.lambda_max_omega < 1.0;
    rep.passes_a4 = rep.max_row_sum < 1.0;
    return rep;
}

bool check_beta_min(const NetworkSpec& spec, double tau) {
    for (Eigen::Index i = 0; i < spec.theta.size(); ++i) {
        const double v = std::abs(spec.theta.data()[i]);
        if (v != 0.0 && !(v > 2.0 * tau)) return false;
    }
    return true;
}

namespace {

NetworkSpec empty_spec(int p, int q, double mu, double kernel_rate) {
    NetworkSpec spec;
    spec.p = p;
    spec.q = q;
    spec.mu = VectorXd::Constant(p + q, mu);
    spec.theta = MatrixXd::Zero(p, p);
    spec.delta = MatrixXd::Zero(p, q);
    spec.hidden_block = MatrixXd::Zero(q, p + q);
    spec.kernels.assign(p + q, TransitionKernel{KernelFamily::Exponential, kernel_rate});
    return spec;
}

void check_block_args(int p, int q, int block_size) {
    if (p <= 0 || q < 0) throw ConfigError("block network needs p > 0 and q >= 0");
    if (block_size <= 0) throw ConfigError("block_size must be positive");
    if (p % block_size != 0)
        throw ConfigError("p = " + std::to_string(p) + " is not divisible by block_size = " +
                          std::to_string(block_size));
}

void fill_block(MatrixXd& theta, int start, int size, double beta) {
    for (int i = start; i < start + size; ++i)
        for (int j = start; j < start + size; ++j)
            if (i != j) theta(i, j) = beta;
}

void confound_block(MatrixXd& delta, int obs_start, int hid_start, int size, double value) {
    delta.block(obs_start, hid_start, size, size).setConstant(value);
}

void require_hidden(int needed, int q) {
    if (needed > q)
        throw ConfigError("confounded blocks need " + std::to_string(needed) + " hidden nodes but q = " +
                          std::to_string(q));
}

void require_stationary(const NetworkSpec& spec) {
    const SpectrumReport rep = check_stationarity(spec);
    if (!rep.passes_a1) throw StationarityError("generated network is not stationary: " + rep.describe());
}

} // namespace

NetworkSpec make_block_network(int p, int q, int block_size, double beta, double delta, double mu,
                               double confounded_fraction, double kernel_rate) {
    check_block_args(p, q, block_size);
    if (!(confounded_fraction >= 0.0 && confounded_fraction <= 1.0))
        throw ConfigError("confounded_fraction must lie in [0, 1]");
    NetworkSpec spec = empty_spec(p, q, mu, kernel_rate);
    const int n_blocks = p / block_size;
    const int n_conf = static_cast<int>(std::lround(confounded_fraction * n_blocks));
    if (delta != 0.0) require_hidden(n_conf * block_size, q);
    for (int b = 0; b < n_blocks; ++b) {
        fill_block(spec.theta, b * block_size, block_size, beta);
        if (b < n_conf && delta != 0.0) confound_block(spec.delta, b * block_size, b * block_size, block_size, delta);
    }
    spec.validate();
    require_stationary(spec);
    return spec;
}

NetworkSpec make_orthogonal_block_network(int p, int q, int block_size, double beta, double delta, double mu,
                                          double kernel_rate) {
    check_block_args(p, q, block_size);
    NetworkSpec spec = empty_spec(p, q, mu, kernel_rate);
    const int n_blocks = p / block_size;
    // With no hidden nodes there is nothing to confound; every block keeps its edges.
    const int n_conf = q == 0 ? 0 : static_cast<int>(std::lround(0.5 * n_blocks));
    if (delta != 0.0) require_hidden(n_conf * block_size, q);
    for (int b = 0; b < n_blocks; ++b) {
        if (b < n_conf)
            confound_block(spec.delta, b * block_size, b * block_size, block_size, delta);
        else
            fill_block(spec.theta, b * block_size, block_size, beta);
    }
    spec.validate();
    require_stationary(spec);
    return spec;
}

int delta_rank(const NetworkSpec& spec) {
    if (spec.delta.size() == 0) return 0;
    Eigen::JacobiSVD<MatrixXd> svd(spec.delta);
    const VectorXd& s = svd.singularValues();
    if (s.size() == 0 || s[0] == 0.0) return 0;
    int r = 0;
    for (Eigen::Index k = 0; k < s.size(); ++k)
        if (s[k] > 1e-10 * s[0]) ++r;
    return r;
}

namespace {

json matrix_to_json(const MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

MatrixXd matrix_from_json(const json& j, Eigen::Index rows, Eigen::Index cols, const char* name) {
    if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != rows)
        throw ConfigError(std::string("network json: '") + name + "' has wrong row count");
    MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        const json& row = j[i];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
            throw ConfigError(std::string("network json: '") + name + "' has wrong column count");
        for (Eigen::Index k = 0; k < cols; ++k) m(i, k) = row[k].get<double>();
    }
    return m;
}

} // namespace

std::string network_to_json(const NetworkSpec& spec) {
    json j;
    j["p"] = spec.p;
    j["q"] = spec.q;
    j["mu"] = std::vector<double>(spec.mu.data(), spec.mu.data() + spec.mu.size());
    j["theta"] = matrix_to_json(spec.theta);
    j["delta"] = matrix_to_json(spec.delta);
    j["hidden_block"] = matrix_to_json(spec.hidden_block);
    json kernels = json::array();
    for (const auto& k : spec.kernels) kernels.push_back({{"family", "exponential"}, {"rate", k.rate}});
    j["kernel"] = std::move(kernels);
    return j.dump(2);
}

NetworkSpec network_from_json(std::string_view text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("network json: ") + e.what());
    }
    try {
        NetworkSpec spec;
        spec.p = j.at("p").get<int>();
        spec.q = j.at("q").get<int>();
        if (spec.p < 0 || spec.q < 0) throw ConfigError("network json: negative dimension");
        const int n = spec.p + spec.q;
        const auto mu = j.at("mu").get<std::vector<double>>();
        spec.mu = Eigen::Map<const VectorXd>(mu.data(), static_cast<Eigen::Index>(mu.size()));
        spec.theta = matrix_from_json(j.at("theta"), spec.p, spec.p, "theta");
        spec.delta = spec.q > 0 ? matrix_from_json(j.at("delta"), spec.p, spec.q, "delta") : MatrixXd(spec.p, 0);
        spec.hidden_block =
            spec.q > 0 ? matrix_from_json(j.at("hidden_block"), spec.q, n, "hidden_block") : MatrixXd(0, n);
        const json& kernels = j.at("kernel");
        if (kernels.is_object()) {
            spec.kernels.assign(n, TransitionKernel{KernelFamily::Exponential, kernels.at("rate").get<double>()});
        } else {
            for (const auto& k : kernels) {
                if (k.value("family", std::string("exponential")) != "exponential")
                    throw ConfigError("network json: only the exponential kernel family is supported");
                spec.kernels.push_back({KernelFamily::Exponential, k.at("rate").get<double>()});
            }
        }
        spec.validate();
        return spec;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("network json: ") + e.what());
    }
}

void save_network(const NetworkSpec& spec, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    out << network_to_json(spec) << '\n';
}

NetworkSpec load_network(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot read " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return network_from_json(ss.str());
}

} // namespace hptrim
