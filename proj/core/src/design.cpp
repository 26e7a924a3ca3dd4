#include "hptrim/design.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <string>

#include <json.hpp>

#include "hptrim/errors.hpp"

namespace hptrim {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

int bin_count(double horizon, double bin_width) {
    const double ratio = horizon / bin_width;
    const double nearest = std::round(ratio);
    if (std::abs(ratio - nearest) <= 1e-9 * std::max(1.0, nearest)) return static_cast<int>(nearest);
    return static_cast<int>(std::floor(ratio));
}

// Integrated process at every bin edge plus per-bin counts for one component.
void integrate_component(const std::vector<double>& times, double rate, double bin_width, int n_bins,
                         Eigen::Ref<VectorXd> x_col, Eigen::Ref<VectorXd> y_col) {
    const double step_decay = std::exp(-rate * bin_width);
    double x = 0.0;
    std::size_t k = 0;
    for (int t = 0; t < n_bins; ++t) {
        x_col[t] = x;
        const double right = (t + 1) * bin_width;
        double inflow = 0.0;
        int count = 0;
        while (k < times.size() && times[k] < right) {
            inflow += std::exp(-rate * (right - times[k]));
            ++count;
            ++k;
        }
        x = step_decay * x + inflow;
        y_col[t] = count / bin_width;
    }
}

} // namespace

RegressionData build_design(const EventData& ev, std::span<const TransitionKernel> kernels, double bin_width,
                            bool keep_hidden) {
    if (!(bin_width > 0.0) || !std::isfinite(bin_width)) throw ConfigError("build_design: bin_width must be positive");
    if (!(ev.horizon > 0.0)) throw DataError("build_design: horizon must be positive");
    if (bin_width >= ev.horizon) throw ConfigError("build_design: bin_width must be smaller than the horizon");
    if (ev.horizon / bin_width < 10.0) throw ConfigError("build_design: need at least 10 bins");
    if (static_cast<int>(kernels.size()) != ev.n_components)
        throw ConfigError("build_design: need one kernel per component");
    ev.validate();

    RegressionData reg;
    reg.bin_width = bin_width;
    reg.n_bins = bin_count(ev.horizon, bin_width);
    reg.observed_ids = ev.observed_ids;
    reg.hidden_ids = ev.hidden_ids();
    const auto p = static_cast<Eigen::Index>(reg.observed_ids.size());
    reg.X.resize(reg.n_bins, p);
    reg.Y.resize(reg.n_bins, p);
    for (Eigen::Index j = 0; j < p; ++j) {
        const int c = reg.observed_ids[static_cast<std::size_t>(j)];
        const double rate = kernels[static_cast<std::size_t>(c)].rate;
        reg.kernel_rates.push_back(rate);
        integrate_component(ev.events[static_cast<std::size_t>(c)], rate, bin_width, reg.n_bins, reg.X.col(j),
                            reg.Y.col(j));
    }
    if (keep_hidden) {
        const auto q = static_cast<Eigen::Index>(reg.hidden_ids.size());
        MatrixXd z(reg.n_bins, q);
        VectorXd scratch(reg.n_bins);
        for (Eigen::Index j = 0; j < q; ++j) {
            const int c = reg.hidden_ids[static_cast<std::size_t>(j)];
            integrate_component(ev.events[static_cast<std::size_t>(c)], kernels[static_cast<std::size_t>(c)].rate,
                                bin_width, reg.n_bins, z.col(j), scratch);
        }
        reg.Z = std::move(z);
    }
    return reg;
}

RegressionData build_design(const EventData& ev, const TransitionKernel& kernel, double bin_width,
                            bool keep_hidden) {
    const std::vector<TransitionKernel> kernels(static_cast<std::size_t>(ev.n_components), kernel);
    return build_design(ev, kernels, bin_width, keep_hidden);
}

ColumnScaling column_scaling(const MatrixXd& X) {
    ColumnScaling s;
    const auto n = static_cast<double>(X.rows());
    s.mean = X.colwise().mean().transpose();
    s.scale.resize(X.cols());
    for (Eigen::Index j = 0; j < X.cols(); ++j) {
        const double var = n > 0 ? (X.col(j).array() - s.mean[j]).square().sum() / n : 0.0;
        s.scale[j] = var > 0.0 ? std::sqrt(var) : 1.0;
    }
    return s;
}

MatrixXd standardize(const MatrixXd& X, const ColumnScaling& s) {
    return (X.rowwise() - s.mean.transpose()).array().rowwise() / s.scale.transpose().array();
}

ConfoundingDiagnostic oracle_confounding_bias(const RegressionData& reg, const VectorXd& delta_i) {
    if (!reg.Z) throw DataError("oracle_confounding_bias: hidden covariates were not retained");
    if (delta_i.size() != reg.Z->cols()) throw DataError("oracle_confounding_bias: delta_i has the wrong length");
    const VectorXd target = *reg.Z * delta_i;
    const VectorXd xmean = reg.X.colwise().mean().transpose();
    const MatrixXd xc = reg.X.rowwise() - xmean.transpose();
    const VectorXd tc = target.array() - target.mean();

    MatrixXd gram = xc.transpose() * xc;
    gram.diagonal().array() += 1e-10;
    ConfoundingDiagnostic diag;
    diag.b = gram.ldlt().solve(xc.transpose() * tc);
    diag.intercept = target.mean() - xmean.dot(diag.b);
    diag.b_l1 = diag.b.lpNorm<1>();
    diag.b_l2_sq = diag.b.squaredNorm();
    const auto dense = (diag.b.array().abs() > 1e-8).count();
    diag.dense_fraction = diag.b.size() ? static_cast<double>(dense) / static_cast<double>(diag.b.size()) : 0.0;
    return diag;
}

namespace {

constexpr const char* kMagic = "HPTRIM-REGDATA 1";

void write_matrix(std::ofstream& out, const MatrixXd& m) {
    out.write(reinterpret_cast<const char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(double)));
}

MatrixXd read_matrix(std::ifstream& in, Eigen::Index rows, Eigen::Index cols, const std::string& path) {
    MatrixXd m(rows, cols);
    in.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(double)));
    if (!in) throw DataError(path + ": truncated matrix payload");
    return m;
}

} // namespace

void save_regression_data(const RegressionData& reg, const std::filesystem::path& path) {
    static_assert(std::endian::native == std::endian::little, "container layout assumes a little-endian host");
    nlohmann::json header;
    header["n_bins"] = reg.n_bins;
    header["bin_width"] = reg.bin_width;
    header["p"] = reg.X.cols();
    header["q"] = reg.Z ? reg.Z->cols() : 0;
    header["observed_ids"] = reg.observed_ids;
    header["hidden_ids"] = reg.hidden_ids;
    header["kernel_rates"] = reg.kernel_rates;
    header["layout"] = "column-major float64 little-endian";
    header["matrices"] = reg.Z ? std::vector<std::string>{"X", "Y", "Z"} : std::vector<std::string>{"X", "Y"};

    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    out << kMagic << '\n' << header.dump() << '\n';
    write_matrix(out, reg.X);
    write_matrix(out, reg.Y);
    if (reg.Z) write_matrix(out, *reg.Z);
    if (!out) throw DataError("failed writing " + path.string());
}

RegressionData load_regression_data(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read " + path.string());
    std::string magic, header_line;
    std::getline(in, magic);
    if (magic != kMagic) throw DataError(path.string() + ": not a regression data container");
    std::getline(in, header_line);
    RegressionData reg;
    try {
        const auto header = nlohmann::json::parse(header_line);
        reg.n_bins = header.at("n_bins").get<int>();
        reg.bin_width = header.at("bin_width").get<double>();
        const auto p = header.at("p").get<Eigen::Index>();
        const auto q = header.at("q").get<Eigen::Index>();
        reg.observed_ids = header.at("observed_ids").get<std::vector<int>>();
        reg.hidden_ids = header.at("hidden_ids").get<std::vector<int>>();
        reg.kernel_rates = header.at("kernel_rates").get<std::vector<double>>();
        const auto mats = header.at("matrices").get<std::vector<std::string>>();
        if (reg.n_bins < 0 || p < 0 || q < 0) throw DataError(path.string() + ": negative dimension");
        reg.X = read_matrix(in, reg.n_bins, p, path.string());
        reg.Y = read_matrix(in, reg.n_bins, p, path.string());
        if (mats.size() == 3) reg.Z = read_matrix(in, reg.n_bins, q, path.string());
    } catch (const nlohmann::json::exception& e) {
        throw DataError(path.string() + ": bad header: " + e.what());
    }
    return reg;
}

} // namespace hptrim
