#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hptrim/deconfounders.hpp"
#include "hptrim/design.hpp"
#include "hptrim/errors.hpp"
#include "hptrim/events.hpp"
#include "hptrim/experiments.hpp"
#include "hptrim/hawkes_sim.hpp"
#include "hptrim/lasso.hpp"
#include "hptrim/network_model.hpp"
#include "hptrim/spectral.hpp"
#include "hptrim/spike_io.hpp"

namespace fs = std::filesystem;
using namespace hptrim;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitStationarity = 3;
constexpr int kExitData = 4;

std::string read_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Writes to `path`, or stdout for "-" or an empty path.
template <typename F>
void emit(const std::string& path, F&& write) {
    if (path.empty() || path == "-") {
        write(std::cout);
        return;
    }
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    write(out);
}

// Penalty and selection flags shared by fit, experiment and holdout.
struct PenaltyFlags {
    std::string strategy;
    std::optional<double> c;
    std::optional<int> budget;
    std::optional<double> train_fraction;
    std::optional<double> tau_select;
    std::optional<double> trim_tau;

    void add(CLI::App* app) {
        app->add_option("--penalty", strategy, "rate, edge-budget or time-split-cv")
            ->check(CLI::IsMember({"rate", "edge-budget", "time-split-cv"}));
        app->add_option("--c", c, "Rate-rule constant");
        app->add_option("--budget", budget, "Pooled edge count for edge-budget");
        app->add_option("--train-fraction", train_fraction, "Leading share of bins used for training");
        app->add_option("--tau-select", tau_select, "Selection threshold (default lambda / 2)");
        app->add_option("--trim-tau", trim_tau, "Trim threshold (default median singular value)");
    }

    void apply(PenaltyRule& rule) const {
        if (!strategy.empty()) rule.strategy = penalty_strategy_from_string(strategy);
        if (c) rule.c = *c;
        if (budget) rule.budget = *budget;
        if (train_fraction) rule.train_fraction = *train_fraction;
        rule.validate();
    }

    EstimatorOptions estimator() const {
        EstimatorOptions o;
        apply(o.penalty);
        o.tau_select = tau_select;
        o.trim_tau = trim_tau;
        return o;
    }
};

std::vector<int> parse_id_list(const std::string& s) {
    std::vector<int> ids;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (tok.empty()) continue;
        try {
            std::size_t used = 0;
            ids.push_back(std::stoi(tok, &used));
            if (used != tok.size()) throw std::invalid_argument(tok);
        } catch (const std::exception&) {
            throw ConfigError("bad component id '" + tok + "'");
        }
    }
    return ids;
}

struct SimulateCmd {
    std::string network;
    std::string preset_name;
    double horizon = 1000.0;
    std::uint64_t seed = 0;
    double floor = 0.0;
    std::string out = "-";
    std::string network_out;

    void run() const {
        NetworkSpec spec;
        if (!network.empty()) {
            spec = load_network(network);
        } else if (!preset_name.empty()) {
            spec = build_network(preset(preset_name));
        } else {
            throw ConfigError("simulate: give --network or --preset");
        }
        const SpectrumReport rep = check_stationarity(spec);
        if (!rep.passes_a1) throw StationarityError("simulate: " + rep.describe());
        SimulationStats stats;
        const EventData ev = simulate(spec, horizon, seed, floor, &stats);
        emit(out, [&](std::ostream& os) { write_events_csv(ev, os); });
        if (!network_out.empty()) hptrim::save_network(spec, network_out);
        std::cerr << "simulated " << ev.total_events() << " events over " << ev.n_components << " components ("
                  << stats.candidates << " candidates); " << rep.describe() << '\n';
    }
};

struct FitCmd {
    std::string events;
    std::string method = "hp-trim";
    double bin_width = 1.0;
    double kernel_rate = 1.0;
    std::optional<double> horizon;
    std::optional<int> oracle_q;
    PenaltyFlags penalty;
    std::string out = "-";
    std::string adjacency;
    std::string dot;
    std::string spectrum;

    void run() const {
        const EventData ev = read_events_csv(fs::path(events), horizon);
        const RegressionData reg = build_design(ev, TransitionKernel{KernelFamily::Exponential, kernel_rate}, bin_width);
        const Method m = method_from_string(method);
        const NetworkEstimate est = fit_method(m, reg, penalty.estimator(), oracle_q);
        emit(out, [&](std::ostream& os) { os << estimate_to_json(est) << '\n'; });
        if (!adjacency.empty()) emit(adjacency, [&](std::ostream& os) { write_adjacency_csv(est, os); });
        if (!dot.empty()) emit(dot, [&](std::ostream& os) { write_dot(est, os); });
        if (!spectrum.empty()) {
            const ColumnScaling sc = column_scaling(reg.X);
            write_spectrum_csv(trim_transform(standardize(reg.X, sc), penalty.trim_tau), spectrum);
        }
        std::cerr << to_string(m) << ": " << est.edges.size() << " edges, lambda = " << est.lambda
                  << ", tau_select = " << est.tau_select;
        if (est.q_used) std::cerr << ", q = " << *est.q_used << (est.q_low_confidence ? " (low confidence)" : "");
        if (!est.note.empty()) std::cerr << " [" << est.note << ']';
        std::cerr << '\n';
    }
};

struct ExperimentCmd {
    std::string config;
    std::string preset_name;
    std::uint64_t seed = 0;
    std::optional<int> replicates;
    std::vector<double> horizons;
    std::vector<std::string> methods;
    std::optional<int> threads;
    bool timing = false;
    PenaltyFlags penalty;
    std::string out = "-";
    std::string csv;
    std::string dump_dir;

    void run() const {
        ExperimentConfig cfg = !config.empty() ? load_config(config)
                               : !preset_name.empty() ? preset(preset_name)
                                                      : throw ConfigError("experiment: give --config or --preset");
        cfg.seed = seed;
        if (replicates) cfg.n_replicates = *replicates;
        if (!horizons.empty()) cfg.horizons = horizons;
        if (!methods.empty()) {
            cfg.methods.clear();
            for (const auto& m : methods) cfg.methods.push_back(method_from_string(m));
        }
        if (threads) cfg.threads = *threads;
        if (timing) cfg.record_timing = true;
        if (penalty.trim_tau) throw ConfigError("experiment: --trim-tau is not supported; the median rule is used");
        penalty.apply(cfg.penalty);
        if (penalty.tau_select) cfg.tau_select = penalty.tau_select;
        cfg.validate();
        if (cfg.long_running) std::cerr << "note: '" << cfg.name << "' is a long-running configuration\n";

        const ExperimentReport rep = run_experiment(cfg);
        emit(out, [&](std::ostream& os) { os << report_to_json(rep); });
        if (!csv.empty()) emit(csv, [&](std::ostream& os) { write_report_csv(rep, os); });
        if (!dump_dir.empty()) {
            fs::create_directories(dump_dir);
            emit((fs::path(dump_dir) / "replicates.csv").string(),
                 [&](std::ostream& os) { write_replicates_csv(rep, os); });
            emit((fs::path(dump_dir) / "summary.csv").string(), [&](std::ostream& os) { write_report_csv(rep, os); });
            emit((fs::path(dump_dir) / "config.json").string(),
                 [&](std::ostream& os) { os << config_to_json(cfg) << '\n'; });
        }
        for (const auto& c : rep.cells)
            std::cerr << to_string(c.method) << " T=" << c.horizon << ": tp " << c.tp.mean << ", fp " << c.fp.mean
                      << ", l1 " << c.l1_error.mean << '\n';
    }
};

struct IngestCmd {
    std::string input;
    double time_unit = 1.0 / 30000.0;
    std::optional<double> horizon;
    int decimation = 30;
    std::string out = "-";
    std::string mapping;

    void run() const {
        IngestOptions opts;
        opts.time_unit = time_unit;
        opts.horizon = horizon;
        opts.decimation = decimation;
        const SpikeIngest ing = ingest_spikes(fs::path(input), opts);
        emit(out, [&](std::ostream& os) { write_events_csv(ing.events, os); });
        if (!mapping.empty()) emit(mapping, [&](std::ostream& os) { write_id_mapping(ing, os); });
        std::cerr << "ingested " << ing.events.total_events() << " spikes from " << ing.events.n_components
                  << " components over " << ing.events.horizon << "; suggested bin width " << ing.bin_width << '\n';
    }
};

struct HoldoutCmd {
    std::string events;
    std::string hide;
    std::string method = "hp-trim";
    double bin_width = 1.0;
    double kernel_rate = 1.0;
    std::optional<double> horizon;
    PenaltyFlags penalty;
    std::string out = "-";

    void run() const {
        const EventData ev = read_events_csv(fs::path(events), horizon);
        HoldoutOptions opts;
        opts.method = method_from_string(method);
        opts.estimator = penalty.estimator();
        opts.kernel = TransitionKernel{KernelFamily::Exponential, kernel_rate};
        opts.bin_width = bin_width;
        const std::vector<int> hidden = parse_id_list(hide);
        const HoldoutReport rep = stability_holdout(ev, hidden, opts);
        emit(out, [&](std::ostream& os) { os << holdout_to_json(rep); });
        std::cerr << "overlap " << rep.shared_edges << '/' << rep.reduced_edges << " = " << rep.overlap_fraction
                  << '\n';
    }
};

struct ExportCmd {
    std::string report;
    std::string estimate;
    std::string format = "json";
    std::string out = "-";

    void run() const {
        const ExportFormat fmt = export_format_from_string(format);
        if (!report.empty() == !estimate.empty()) throw ConfigError("export: give exactly one of --report, --estimate");
        if (!report.empty()) {
            const ExperimentReport rep = report_from_json(read_file(report));
            emit(out, [&](std::ostream& os) { export_report(rep, fmt, os); });
        } else {
            const NetworkEstimate est = estimate_from_json(read_file(estimate));
            emit(out, [&](std::ostream& os) { export_estimate(est, fmt, os); });
        }
    }
};

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Causal network estimation for partially observed Hawkes processes"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "hptrim 0.1.0");

    SimulateCmd sim;
    auto* s = app.add_subcommand("simulate", "Simulate a Hawkes network to an events CSV");
    auto* net_opt = s->add_option("--network", sim.network, "Network JSON")->check(CLI::ExistingFile);
    s->add_option("--preset", sim.preset_name, "Build the network of an experiment preset")
        ->excludes(net_opt)
        ->check(CLI::IsMember(preset_names()));
    s->add_option("--horizon", sim.horizon, "Simulation horizon")->check(CLI::PositiveNumber);
    s->add_option("--seed", sim.seed, "Random seed")->required();
    s->add_option("--floor", sim.floor, "Intensity floor")->check(CLI::NonNegativeNumber);
    s->add_option("--out,-o", sim.out, "Events CSV ('-' for stdout)");
    s->add_option("--save-network", sim.network_out, "Also write the network JSON");

    FitCmd fit;
    auto* f = app.add_subcommand("fit", "Estimate the connectivity among observed components");
    f->add_option("--events", fit.events, "Events CSV")->required()->check(CLI::ExistingFile);
    f->add_option("--method", fit.method, "hp-trim, naive, hive-oracle or hive-empirical")
        ->check(CLI::IsMember({"hp-trim", "naive", "hive-oracle", "hive-empirical"}));
    f->add_option("--bin-width", fit.bin_width, "Regression bin width")->check(CLI::PositiveNumber);
    f->add_option("--kernel-rate", fit.kernel_rate, "Exponential kernel decay rate")->check(CLI::PositiveNumber);
    f->add_option("--horizon", fit.horizon, "Horizon, when the CSV has no header comment");
    f->add_option("--q", fit.oracle_q, "Hidden dimension for hive-oracle");
    fit.penalty.add(f);
    f->add_option("--out,-o", fit.out, "Estimate JSON ('-' for stdout)");
    f->add_option("--adjacency", fit.adjacency, "Adjacency CSV");
    f->add_option("--dot", fit.dot, "DOT graph");
    f->add_option("--spectrum", fit.spectrum, "Singular values before and after trimming (CSV)");

    ExperimentCmd exp;
    auto* e = app.add_subcommand("experiment", "Run a replicated simulation study");
    auto* cfg_opt = e->add_option("--config", exp.config, "Experiment config JSON")->check(CLI::ExistingFile);
    e->add_option("--preset", exp.preset_name, "Named preset")->excludes(cfg_opt)->check(CLI::IsMember(preset_names()));
    e->add_option("--seed", exp.seed, "Master seed")->required();
    e->add_option("--replicates", exp.replicates, "Number of replicates")->check(CLI::PositiveNumber);
    e->add_option("--horizons", exp.horizons, "Horizons")->delimiter(',');
    e->add_option("--methods", exp.methods, "Methods")->delimiter(',');
    e->add_option("--threads", exp.threads, "Worker threads (0: all cores)")->check(CLI::NonNegativeNumber);
    e->add_flag("--timing", exp.timing, "Record runtimes in the report");
    exp.penalty.add(e);
    e->add_option("--out,-o", exp.out, "Report JSON ('-' for stdout)");
    e->add_option("--csv", exp.csv, "Summary CSV, one row per method and horizon");
    e->add_option("--dump-dir", exp.dump_dir, "Directory for per-replicate records");

    IngestCmd ing;
    auto* i = app.add_subcommand("ingest", "Convert a spike-time CSV into an events CSV");
    i->add_option("--input", ing.input, "component_id,time records")->required()->check(CLI::ExistingFile);
    i->add_option("--time-unit", ing.time_unit, "Seconds per recorded tick")->check(CLI::PositiveNumber);
    i->add_option("--horizon", ing.horizon, "Recording length in seconds");
    i->add_option("--decimation", ing.decimation, "Ticks per regression bin")->check(CLI::PositiveNumber);
    i->add_option("--out,-o", ing.out, "Events CSV ('-' for stdout)");
    i->add_option("--mapping", ing.mapping, "CSV mapping dense indices to file ids");

    HoldoutCmd hold;
    auto* h = app.add_subcommand("holdout", "Compare fits with and without a set of components");
    h->add_option("--events", hold.events, "Events CSV")->required()->check(CLI::ExistingFile);
    h->add_option("--hide", hold.hide, "Comma-separated component ids to drop")->required();
    h->add_option("--method", hold.method, "hp-trim, naive or hive-empirical")
        ->check(CLI::IsMember({"hp-trim", "naive", "hive-empirical"}));
    h->add_option("--bin-width", hold.bin_width, "Regression bin width")->check(CLI::PositiveNumber);
    h->add_option("--kernel-rate", hold.kernel_rate, "Exponential kernel decay rate")->check(CLI::PositiveNumber);
    h->add_option("--horizon", hold.horizon, "Horizon, when the CSV has no header comment");
    hold.penalty.add(h);
    h->add_option("--out,-o", hold.out, "Holdout JSON ('-' for stdout)");

    ExportCmd ex;
    auto* x = app.add_subcommand("export", "Re-emit a report or estimate as JSON, CSV or DOT");
    x->add_option("--report", ex.report, "Experiment report JSON")->check(CLI::ExistingFile);
    x->add_option("--estimate", ex.estimate, "Estimate JSON")->check(CLI::ExistingFile);
    x->add_option("--format", ex.format, "json, csv or dot")->check(CLI::IsMember({"json", "csv", "dot"}));
    x->add_option("--out,-o", ex.out, "Output file ('-' for stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& err) {
        const int code = app.exit(err);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        if (*s) sim.run();
        else if (*f) fit.run();
        else if (*e) exp.run();
        else if (*i) ing.run();
        else if (*h) hold.run();
        else if (*x) ex.run();
    } catch (const ConfigError& err) {
        std::cerr << "config error: " << err.what() << '\n';
        return kExitConfig;
    } catch (const StationarityError& err) {
        std::cerr << "stationarity error: " << err.what() << '\n';
        return kExitStationarity;
    } catch (const DataError& err) {
        std::cerr << "data error: " << err.what() << '\n';
        return kExitData;
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << '\n';
        return 1;
    }
    return 0;
}
