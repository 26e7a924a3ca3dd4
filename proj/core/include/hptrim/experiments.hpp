#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hptrim/deconfounders.hpp"
#include "hptrim/events.hpp"
#include "hptrim/lasso.hpp"
#include "hptrim/network_model.hpp"

namespace hptrim {

enum class Topology { Confounded, Orthogonal };

std::string to_string(Topology t);
Topology topology_from_string(const std::string& s);

struct ExperimentConfig {
    std::string name = "custom";
    Topology topology = Topology::Confounded;
    int p = 20;
    int q = 20;
    int block_size = 5;
    double beta = 0.12;
    double delta = 0.10;
    double mu = 0.05;
    double confounded_fraction = 0.5;  // Confounded topology only
    double kernel_rate = 1.0;
    double bin_width = 1.0;
    std::vector<double> horizons{1000.0, 5000.0};
    int n_replicates = 20;
    std::vector<Method> methods{Method::HpTrim, Method::Naive, Method::HiveOracle, Method::HiveEmpirical};
    PenaltyRule penalty;
    std::optional<double> tau_select;  // default lambda / 2 per fit
    std::uint64_t seed = 0;
    std::string scale_note;
    bool long_running = false;
    // Execution knobs. threads never changes results and is not echoed.
    int threads = 0;  // 0: hardware concurrency
    bool record_timing = false;

    // Throws ConfigError.
    void validate() const;
};

// fig2-desk, fig3-desk, fig2-paper, fig3-paper.
std::vector<std::string> preset_names();
ExperimentConfig preset(const std::string& name);

std::string config_to_json(const ExperimentConfig& cfg);
// Missing fields take their defaults; a "preset" field seeds the defaults.
ExperimentConfig config_from_json(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

NetworkSpec build_network(const ExperimentConfig& cfg);

struct ReplicateRecord {
    int replicate = 0;
    std::uint64_t seed = 0;
    double horizon = 0.0;
    Method method = Method::HpTrim;
    int tp = 0;
    int fp = 0;
    int fn = 0;
    double l1_error = 0.0;
    double lambda = 0.0;
    double tau_select = 0.0;
    std::optional<int> q_used;
    std::size_t n_events = 0;  // observed events up to horizon
    double seconds = 0.0;      // only filled when timing is recorded
};

struct Moments {
    double mean = 0.0;
    double sd = 0.0;  // sample standard deviation, 0 for a single value
};

Moments moments(std::span<const double> values);

struct CellSummary {
    Method method = Method::HpTrim;
    double horizon = 0.0;
    int n = 0;
    Moments tp;
    Moments fp;
    Moments fn;
    Moments l1_error;
    Moments seconds;  // zero unless timing is recorded
};

struct ExperimentReport {
    ExperimentConfig config;
    SpectrumReport spectrum;
    std::optional<int> oracle_q;
    std::vector<CellSummary> cells;  // method-major, horizons in config order
    std::vector<ReplicateRecord> replicates;  // ordered by (replicate, horizon, method)
    std::optional<double> total_seconds;

    const CellSummary& cell(Method m, double horizon) const;
};

/**
 * Each replicate simulates once at the largest horizon from
 * derive_seed(cfg.seed, r) and truncates to the other horizons, so horizons
 * are nested within a replicate. Replicates run in parallel and are joined by
 * index; the report does not depend on the thread count.
 *
 * Throws StationarityError before simulating if the network fails the
 * stationarity check.
 */
ExperimentReport run_experiment(const ExperimentConfig& cfg);

// Cell summaries recomputed from per-replicate records.
std::vector<CellSummary> aggregate(std::span<const ReplicateRecord> records, std::span<const Method> methods,
                                   std::span<const double> horizons);

std::string report_to_json(const ExperimentReport& report);
ExperimentReport report_from_json(const std::string& text);
// One row per (method, horizon) cell.
void write_report_csv(const ExperimentReport& report, std::ostream& out);
// One row per (replicate, horizon, method).
void write_replicates_csv(const ExperimentReport& report, std::ostream& out);

struct HoldoutReport {
    Method method = Method::HpTrim;
    std::vector<int> hidden_ids;    // component ids, ascending
    std::vector<int> retained_ids;  // observed component ids not hidden
    int full_edges = 0;             // full-fit edges inside the retained sub-network
    int reduced_edges = 0;
    int shared_edges = 0;
    double overlap_fraction = 1.0;  // shared / reduced, 1 when the reduced fit selects nothing
    NetworkEstimate full;
    NetworkEstimate reduced;
};

struct HoldoutOptions {
    Method method = Method::HpTrim;
    EstimatorOptions estimator;
    TransitionKernel kernel;
    double bin_width = 1.0;
};

/**
 * Fits on every observed component, then again with the components in
 * `hidden_ids` removed, and compares the edges among the retained components.
 * Throws ConfigError when hidden_ids is not a proper subset of the observed
 * components, and for HiveOracle, whose q is unknown here.
 */
HoldoutReport stability_holdout(const EventData& ev, std::span<const int> hidden_ids, const HoldoutOptions& opts);

std::string holdout_to_json(const HoldoutReport& report);

enum class ExportFormat { Json, Csv, Dot };

ExportFormat export_format_from_string(const std::string& s);

// DOT is only defined for estimates; asking for it here throws ConfigError.
void export_report(const ExperimentReport& report, ExportFormat fmt, std::ostream& out);
void export_estimate(const NetworkEstimate& est, ExportFormat fmt, std::ostream& out);

} // namespace hptrim
