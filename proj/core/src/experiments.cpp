#include "hptrim/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "hptrim/design.hpp"
#include "hptrim/errors.hpp"
#include "hptrim/hawkes_sim.hpp"
#include "hptrim/rng.hpp"

namespace hptrim {

using json = nlohmann::ordered_json;

std::string to_string(Topology t) { return t == Topology::Confounded ? "confounded" : "orthogonal"; }

Topology topology_from_string(const std::string& s) {
    if (s == "confounded") return Topology::Confounded;
    if (s == "orthogonal") return Topology::Orthogonal;
    throw ConfigError("unknown topology '" + s + "' (expected confounded or orthogonal)");
}

void ExperimentConfig::validate() const {
    if (p < 1 || q < 0 || block_size < 1) throw ConfigError("experiment: need p >= 1, q >= 0, block_size >= 1");
    if (p % block_size != 0) throw ConfigError("experiment: p must be a multiple of block_size");
    if (n_replicates < 1) throw ConfigError("experiment: n_replicates must be at least 1");
    if (horizons.empty()) throw ConfigError("experiment: horizons must not be empty");
    for (double h : horizons)
        if (!(h > 0.0) || !std::isfinite(h)) throw ConfigError("experiment: horizons must be positive");
    if (methods.empty()) throw ConfigError("experiment: methods must not be empty");
    for (std::size_t a = 0; a < methods.size(); ++a)
        for (std::size_t b = a + 1; b < methods.size(); ++b)
            if (methods[a] == methods[b]) throw ConfigError("experiment: duplicate method " + to_string(methods[a]));
    if (!(bin_width > 0.0)) throw ConfigError("experiment: bin_width must be positive");
    if (!(mu > 0.0)) throw ConfigError("experiment: mu must be positive");
    if (!(kernel_rate > 0.0)) throw ConfigError("experiment: kernel_rate must be positive");
    if (confounded_fraction < 0.0 || confounded_fraction > 1.0)
        throw ConfigError("experiment: confounded_fraction must lie in [0, 1]");
    if (tau_select && !(*tau_select >= 0.0)) throw ConfigError("experiment: tau_select must be non-negative");
    if (threads < 0) throw ConfigError("experiment: threads must be non-negative");
    penalty.validate();
}

std::vector<std::string> preset_names() { return {"fig2-desk", "fig3-desk", "fig2-paper", "fig3-paper"}; }

ExperimentConfig preset(const std::string& name) {
    ExperimentConfig cfg;
    cfg.name = name;
    if (name == "fig2-desk" || name == "fig2-paper") {
        cfg.topology = Topology::Confounded;
        cfg.beta = 0.12;
        cfg.delta = 0.10;
    } else if (name == "fig3-desk" || name == "fig3-paper") {
        cfg.topology = Topology::Orthogonal;
        cfg.beta = 0.2;
        cfg.delta = 0.18;
    } else {
        throw ConfigError("unknown preset '" + name + "'");
    }
    if (name.ends_with("-paper")) {
        cfg.p = cfg.q = 100;
        cfg.n_replicates = 100;
        cfg.long_running = true;
        cfg.scale_note = "full scale: p = q = 100, 100 replicates; long-running";
    } else {
        cfg.scale_note = "desk scale: p = q = 20, 20 replicates (full scale is p = q = 100 with 100 replicates)";
    }
    return cfg;
}

namespace {

json penalty_to_json(const PenaltyRule& r) {
    return json{{"strategy", to_string(r.strategy)},   {"c", r.c},
                {"budget", r.budget},                  {"folds", r.folds},
                {"train_fraction", r.train_fraction},  {"path_length", r.path_length},
                {"path_min_ratio", r.path_min_ratio}};
}

PenaltyRule penalty_from_json(const json& j) {
    PenaltyRule r;
    if (j.contains("strategy")) r.strategy = penalty_strategy_from_string(j.at("strategy").get<std::string>());
    r.c = j.value("c", r.c);
    r.budget = j.value("budget", r.budget);
    r.folds = j.value("folds", r.folds);
    r.train_fraction = j.value("train_fraction", r.train_fraction);
    r.path_length = j.value("path_length", r.path_length);
    r.path_min_ratio = j.value("path_min_ratio", r.path_min_ratio);
    return r;
}

json config_json(const ExperimentConfig& c) {
    json methods = json::array();
    for (Method m : c.methods) methods.push_back(to_string(m));
    return json{{"name", c.name},
                {"topology", to_string(c.topology)},
                {"p", c.p},
                {"q", c.q},
                {"block_size", c.block_size},
                {"beta", c.beta},
                {"delta", c.delta},
                {"mu", c.mu},
                {"confounded_fraction", c.confounded_fraction},
                {"kernel_rate", c.kernel_rate},
                {"bin_width", c.bin_width},
                {"horizons", c.horizons},
                {"n_replicates", c.n_replicates},
                {"methods", methods},
                {"penalty", penalty_to_json(c.penalty)},
                {"tau_select", c.tau_select ? json(*c.tau_select) : json(nullptr)},
                {"seed", c.seed},
                {"scale_note", c.scale_note},
                {"long_running", c.long_running},
                {"record_timing", c.record_timing}};
}

ExperimentConfig config_from(const json& j) {
    ExperimentConfig c = j.contains("preset") ? preset(j.at("preset").get<std::string>()) : ExperimentConfig{};
    c.name = j.value("name", c.name);
    if (j.contains("topology")) c.topology = topology_from_string(j.at("topology").get<std::string>());
    c.p = j.value("p", c.p);
    c.q = j.value("q", c.q);
    c.block_size = j.value("block_size", c.block_size);
    c.beta = j.value("beta", c.beta);
    c.delta = j.value("delta", c.delta);
    c.mu = j.value("mu", c.mu);
    c.confounded_fraction = j.value("confounded_fraction", c.confounded_fraction);
    c.kernel_rate = j.value("kernel_rate", c.kernel_rate);
    c.bin_width = j.value("bin_width", c.bin_width);
    if (j.contains("horizons")) c.horizons = j.at("horizons").get<std::vector<double>>();
    c.n_replicates = j.value("n_replicates", c.n_replicates);
    if (j.contains("methods")) {
        c.methods.clear();
        for (const auto& m : j.at("methods")) c.methods.push_back(method_from_string(m.get<std::string>()));
    }
    if (j.contains("penalty")) c.penalty = penalty_from_json(j.at("penalty"));
    if (j.contains("tau_select")) {
        if (j.at("tau_select").is_null()) c.tau_select.reset();
        else c.tau_select = j.at("tau_select").get<double>();
    }
    c.seed = j.value("seed", c.seed);
    c.scale_note = j.value("scale_note", c.scale_note);
    c.long_running = j.value("long_running", c.long_running);
    c.threads = j.value("threads", c.threads);
    c.record_timing = j.value("record_timing", c.record_timing);
    return c;
}

json moments_json(const Moments& m) { return json{{"mean", m.mean}, {"sd", m.sd}}; }

Moments moments_from(const json& j) { return {j.at("mean").get<double>(), j.at("sd").get<double>()}; }

template <typename F>
auto parse_guard(const std::string& what, F&& f) {
    try {
        return f();
    } catch (const json::exception& e) {
        throw ConfigError(what + ": " + e.what());
    }
}

} // namespace

std::string config_to_json(const ExperimentConfig& cfg) { return config_json(cfg).dump(2); }

ExperimentConfig config_from_json(const std::string& text) {
    return parse_guard("experiment config", [&] {
        ExperimentConfig c = config_from(json::parse(text));
        c.validate();
        return c;
    });
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return config_from_json(ss.str());
}

NetworkSpec build_network(const ExperimentConfig& cfg) {
    cfg.validate();
    if (cfg.topology == Topology::Confounded)
        return make_block_network(cfg.p, cfg.q, cfg.block_size, cfg.beta, cfg.delta, cfg.mu, cfg.confounded_fraction,
                                  cfg.kernel_rate);
    return make_orthogonal_block_network(cfg.p, cfg.q, cfg.block_size, cfg.beta, cfg.delta, cfg.mu, cfg.kernel_rate);
}

Moments moments(std::span<const double> values) {
    Moments m;
    if (values.empty()) return m;
    double s = 0.0;
    for (double v : values) s += v;
    m.mean = s / static_cast<double>(values.size());
    if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - m.mean) * (v - m.mean);
        m.sd = std::sqrt(ss / static_cast<double>(values.size() - 1));
    }
    return m;
}

std::vector<CellSummary> aggregate(std::span<const ReplicateRecord> records, std::span<const Method> methods,
                                   std::span<const double> horizons) {
    std::vector<CellSummary> cells;
    for (Method m : methods) {
        for (double h : horizons) {
            std::vector<double> tp, fp, fn, l1, sec;
            for (const auto& r : records) {
                if (r.method != m || r.horizon != h) continue;
                tp.push_back(r.tp);
                fp.push_back(r.fp);
                fn.push_back(r.fn);
                l1.push_back(r.l1_error);
                sec.push_back(r.seconds);
            }
            CellSummary c;
            c.method = m;
            c.horizon = h;
            c.n = static_cast<int>(tp.size());
            c.tp = moments(tp);
            c.fp = moments(fp);
            c.fn = moments(fn);
            c.l1_error = moments(l1);
            c.seconds = moments(sec);
            cells.push_back(c);
        }
    }
    return cells;
}

const CellSummary& ExperimentReport::cell(Method m, double horizon) const {
    for (const auto& c : cells)
        if (c.method == m && c.horizon == horizon) return c;
    throw ConfigError("report has no cell for " + to_string(m) + " at horizon " + std::to_string(horizon));
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::vector<ReplicateRecord> run_replicate(const ExperimentConfig& cfg, const NetworkSpec& spec,
                                           std::optional<int> oracle_q, int r) {
    const std::uint64_t seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(r));
    const double h_max = *std::max_element(cfg.horizons.begin(), cfg.horizons.end());
    const EventData full = simulate(spec, h_max, seed);

    EstimatorOptions opts;
    opts.penalty = cfg.penalty;
    opts.tau_select = cfg.tau_select;

    std::vector<ReplicateRecord> out;
    for (double h : cfg.horizons) {
        const EventData ev = h == h_max ? full : full.truncated(h);
        const RegressionData reg = build_design(ev, spec.kernels, cfg.bin_width, false);
        std::size_t n_obs = 0;
        for (int id : ev.observed_ids) n_obs += ev.events[static_cast<std::size_t>(id)].size();
        for (Method m : cfg.methods) {
            const auto t0 = Clock::now();
            const NetworkEstimate est = fit_method(m, reg, opts, oracle_q);
            const double secs = seconds_since(t0);
            const EdgeMetrics em = edge_metrics(est, spec);
            ReplicateRecord rec;
            rec.replicate = r;
            rec.seed = seed;
            rec.horizon = h;
            rec.method = m;
            rec.tp = em.tp;
            rec.fp = em.fp;
            rec.fn = em.fn;
            rec.l1_error = em.l1_error;
            rec.lambda = est.lambda;
            rec.tau_select = est.tau_select;
            rec.q_used = est.q_used;
            rec.n_events = n_obs;
            rec.seconds = cfg.record_timing ? secs : 0.0;
            out.push_back(rec);
        }
    }
    return out;
}

} // namespace

ExperimentReport run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    const auto t0 = Clock::now();
    ExperimentReport rep;
    rep.config = cfg;
    const NetworkSpec spec = build_network(cfg);
    rep.spectrum = check_stationarity(spec);
    if (!rep.spectrum.passes_a1) throw StationarityError("experiment network rejected: " + rep.spectrum.describe());

    const int rank = delta_rank(spec);
    rep.oracle_q = std::min(rank, cfg.p - 1);

    const int n = cfg.n_replicates;
    std::vector<std::vector<ReplicateRecord>> per_rep(static_cast<std::size_t>(n));
    std::atomic<int> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (int r = next++; r < n; r = next++) {
            try {
                per_rep[static_cast<std::size_t>(r)] = run_replicate(cfg, spec, rep.oracle_q, r);
            } catch (...) {
                const std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next = n;
            }
        }
    };
    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    const int n_threads = std::min(n, cfg.threads > 0 ? cfg.threads : static_cast<int>(hw));
    if (n_threads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (int k = 0; k < n_threads; ++k) pool.emplace_back(worker);
    }
    if (failure) std::rethrow_exception(failure);

    for (auto& v : per_rep) rep.replicates.insert(rep.replicates.end(), v.begin(), v.end());
    rep.cells = aggregate(rep.replicates, cfg.methods, cfg.horizons);
    if (cfg.record_timing) rep.total_seconds = seconds_since(t0);
    return rep;
}

std::string report_to_json(const ExperimentReport& report) {
    const bool timing = report.config.record_timing;
    json cells = json::array();
    for (const auto& c : report.cells) {
        json jc{{"method", to_string(c.method)},
                {"horizon", c.horizon},
                {"n", c.n},
                {"tp", moments_json(c.tp)},
                {"fp", moments_json(c.fp)},
                {"fn", moments_json(c.fn)},
                {"l1_error", moments_json(c.l1_error)}};
        if (timing) jc["seconds"] = moments_json(c.seconds);
        cells.push_back(std::move(jc));
    }
    json reps = json::array();
    for (const auto& r : report.replicates) {
        json jr{{"replicate", r.replicate},
                {"seed", r.seed},
                {"horizon", r.horizon},
                {"method", to_string(r.method)},
                {"tp", r.tp},
                {"fp", r.fp},
                {"fn", r.fn},
                {"l1_error", r.l1_error},
                {"lambda", r.lambda},
                {"tau_select", r.tau_select},
                {"q_used", r.q_used ? json(*r.q_used) : json(nullptr)},
                {"n_events", r.n_events}};
        if (timing) jr["seconds"] = r.seconds;
        reps.push_back(std::move(jr));
    }
    const SpectrumReport& s = report.spectrum;
    json j{{"config", config_json(report.config)},
           {"spectrum",
            {{"lambda_max_omega", s.lambda_max_omega},
             {"max_row_sum", s.max_row_sum},
             {"max_col_sum", s.max_col_sum},
             {"passes_a1", s.passes_a1},
             {"passes_a4", s.passes_a4}}},
           {"oracle_q", report.oracle_q ? json(*report.oracle_q) : json(nullptr)},
           {"cells", cells},
           {"replicates", reps}};
    if (report.total_seconds) j["total_seconds"] = *report.total_seconds;
    return j.dump(2) + "\n";
}

ExperimentReport report_from_json(const std::string& text) {
    return parse_guard("experiment report", [&] {
        const json j = json::parse(text);
        ExperimentReport rep;
        rep.config = config_from(j.at("config"));
        const json& s = j.at("spectrum");
        rep.spectrum.lambda_max_omega = s.at("lambda_max_omega").get<double>();
        rep.spectrum.max_row_sum = s.at("max_row_sum").get<double>();
        rep.spectrum.max_col_sum = s.at("max_col_sum").get<double>();
        rep.spectrum.passes_a1 = s.at("passes_a1").get<bool>();
        rep.spectrum.passes_a4 = s.at("passes_a4").get<bool>();
        if (!j.at("oracle_q").is_null()) rep.oracle_q = j.at("oracle_q").get<int>();
        for (const auto& jc : j.at("cells")) {
            CellSummary c;
            c.method = method_from_string(jc.at("method").get<std::string>());
            c.horizon = jc.at("horizon").get<double>();
            c.n = jc.at("n").get<int>();
            c.tp = moments_from(jc.at("tp"));
            c.fp = moments_from(jc.at("fp"));
            c.fn = moments_from(jc.at("fn"));
            c.l1_error = moments_from(jc.at("l1_error"));
            if (jc.contains("seconds")) c.seconds = moments_from(jc.at("seconds"));
            rep.cells.push_back(c);
        }
        for (const auto& jr : j.at("replicates")) {
            ReplicateRecord r;
            r.replicate = jr.at("replicate").get<int>();
            r.seed = jr.at("seed").get<std::uint64_t>();
            r.horizon = jr.at("horizon").get<double>();
            r.method = method_from_string(jr.at("method").get<std::string>());
            r.tp = jr.at("tp").get<int>();
            r.fp = jr.at("fp").get<int>();
            r.fn = jr.at("fn").get<int>();
            r.l1_error = jr.at("l1_error").get<double>();
            r.lambda = jr.at("lambda").get<double>();
            r.tau_select = jr.at("tau_select").get<double>();
            if (!jr.at("q_used").is_null()) r.q_used = jr.at("q_used").get<int>();
            r.n_events = jr.at("n_events").get<std::size_t>();
            r.seconds = jr.value("seconds", 0.0);
            rep.replicates.push_back(r);
        }
        if (j.contains("total_seconds")) rep.total_seconds = j.at("total_seconds").get<double>();
        return rep;
    });
}

void write_report_csv(const ExperimentReport& report, std::ostream& out) {
    out << "method,horizon,n,tp_mean,tp_sd,fp_mean,fp_sd,fn_mean,fn_sd,l1_error_mean,l1_error_sd\n"
        << std::setprecision(17);
    for (const auto& c : report.cells)
        out << to_string(c.method) << ',' << c.horizon << ',' << c.n << ',' << c.tp.mean << ',' << c.tp.sd << ','
            << c.fp.mean << ',' << c.fp.sd << ',' << c.fn.mean << ',' << c.fn.sd << ',' << c.l1_error.mean << ','
            << c.l1_error.sd << '\n';
}

void write_replicates_csv(const ExperimentReport& report, std::ostream& out) {
    out << "replicate,seed,horizon,method,tp,fp,fn,l1_error,lambda,tau_select,q_used,n_events\n"
        << std::setprecision(17);
    for (const auto& r : report.replicates) {
        out << r.replicate << ',' << r.seed << ',' << r.horizon << ',' << to_string(r.method) << ',' << r.tp << ','
            << r.fp << ',' << r.fn << ',' << r.l1_error << ',' << r.lambda << ',' << r.tau_select << ',';
        if (r.q_used) out << *r.q_used;
        out << ',' << r.n_events << '\n';
    }
}

HoldoutReport stability_holdout(const EventData& ev, std::span<const int> hidden_ids, const HoldoutOptions& opts) {
    ev.validate();
    if (opts.method == Method::HiveOracle)
        throw ConfigError("holdout: hive-oracle needs a known hidden dimension; use hive-empirical");
    std::vector<int> observed = ev.observed_ids;
    std::vector<int> hidden(hidden_ids.begin(), hidden_ids.end());
    std::sort(hidden.begin(), hidden.end());
    if (std::adjacent_find(hidden.begin(), hidden.end()) != hidden.end())
        throw ConfigError("holdout: duplicate hidden id");
    for (int h : hidden)
        if (std::find(observed.begin(), observed.end(), h) == observed.end())
            throw ConfigError("holdout: hidden id " + std::to_string(h) + " is not an observed component");

    HoldoutReport rep;
    rep.method = opts.method;
    rep.hidden_ids = hidden;
    for (int id : observed)
        if (!std::binary_search(hidden.begin(), hidden.end(), id)) rep.retained_ids.push_back(id);
    if (rep.retained_ids.empty()) throw ConfigError("holdout: hiding every component leaves nothing to fit");

    auto fit = [&](const std::vector<int>& ids) {
        const EventData sub = ev.subset(ids);
        const RegressionData reg = build_design(sub, opts.kernel, opts.bin_width, false);
        NetworkEstimate est = fit_method(opts.method, reg, opts.estimator);
        est.observed_ids = ids;
        return est;
    };
    rep.full = fit(observed);
    rep.reduced = hidden.empty() ? rep.full : fit(rep.retained_ids);

    // Position of each retained component in the full fit.
    std::vector<int> pos_full;
    for (int id : rep.retained_ids)
        pos_full.push_back(static_cast<int>(std::find(observed.begin(), observed.end(), id) - observed.begin()));
    const auto n_ret = static_cast<int>(rep.retained_ids.size());
    for (int a = 0; a < n_ret; ++a) {
        for (int b = 0; b < n_ret; ++b) {
            const bool in_full = rep.full.selected(pos_full[static_cast<std::size_t>(a)],
                                                   pos_full[static_cast<std::size_t>(b)]) != 0.0;
            const bool in_reduced = rep.reduced.selected(a, b) != 0.0;
            rep.full_edges += in_full;
            rep.reduced_edges += in_reduced;
            rep.shared_edges += in_full && in_reduced;
        }
    }
    rep.overlap_fraction =
        rep.reduced_edges == 0 ? 1.0 : static_cast<double>(rep.shared_edges) / static_cast<double>(rep.reduced_edges);
    return rep;
}

std::string holdout_to_json(const HoldoutReport& report) {
    json j{{"method", to_string(report.method)},
           {"hidden_ids", report.hidden_ids},
           {"retained_ids", report.retained_ids},
           {"full_edges", report.full_edges},
           {"reduced_edges", report.reduced_edges},
           {"shared_edges", report.shared_edges},
           {"overlap_fraction", report.overlap_fraction},
           {"full_lambda", report.full.lambda},
           {"reduced_lambda", report.reduced.lambda}};
    return j.dump(2) + "\n";
}

ExportFormat export_format_from_string(const std::string& s) {
    if (s == "json") return ExportFormat::Json;
    if (s == "csv") return ExportFormat::Csv;
    if (s == "dot") return ExportFormat::Dot;
    throw ConfigError("unknown export format '" + s + "' (expected json, csv or dot)");
}

void export_report(const ExperimentReport& report, ExportFormat fmt, std::ostream& out) {
    switch (fmt) {
    case ExportFormat::Json: out << report_to_json(report); return;
    case ExportFormat::Csv: write_report_csv(report, out); return;
    case ExportFormat::Dot: throw ConfigError("DOT export is only available for network estimates");
    }
}

void export_estimate(const NetworkEstimate& est, ExportFormat fmt, std::ostream& out) {
    switch (fmt) {
    case ExportFormat::Json: out << estimate_to_json(est) << '\n'; return;
    case ExportFormat::Csv: write_adjacency_csv(est, out); return;
    case ExportFormat::Dot: write_dot(est, out); return;
    }
}

} // namespace hptrim
