#include <gtest/gtest.h>

#include <sstream>

#include "hptrim/errors.hpp"
#include "hptrim/experiments.hpp"
#include "hptrim/hawkes_sim.hpp"

using namespace hptrim;

namespace {

ExperimentConfig small_config() {
    ExperimentConfig cfg;
    cfg.name = "small";
    cfg.p = 10;
    cfg.q = 5;
    cfg.horizons = {300.0, 600.0};
    cfg.n_replicates = 3;
    cfg.seed = 77;
    return cfg;
}

std::size_t count_lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

} // namespace

TEST(Config, PresetsAndValidation) {
    for (const auto& name : preset_names()) EXPECT_NO_THROW(preset(name).validate()) << name;
    EXPECT_EQ(preset("fig3-desk").topology, Topology::Orthogonal);
    EXPECT_TRUE(preset("fig2-paper").long_running);
    EXPECT_EQ(preset("fig2-paper").p, 100);
    EXPECT_THROW(preset("fig9"), ConfigError);

    auto cfg = small_config();
    cfg.methods = {Method::Naive, Method::Naive};
    EXPECT_THROW(cfg.validate(), ConfigError);
    cfg = small_config();
    cfg.p = 11;
    EXPECT_THROW(cfg.validate(), ConfigError);
    cfg = small_config();
    cfg.horizons.clear();
    EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(Config, JsonRoundTripAndPresetSeed) {
    auto cfg = small_config();
    cfg.tau_select = 0.01;
    cfg.penalty.strategy = PenaltyStrategy::EdgeBudget;
    cfg.penalty.budget = 12;
    const std::string text = config_to_json(cfg);
    EXPECT_EQ(config_to_json(config_from_json(text)), text);

    const auto seeded = config_from_json(R"({"preset": "fig3-desk", "n_replicates": 4, "seed": 9})");
    EXPECT_EQ(seeded.topology, Topology::Orthogonal);
    EXPECT_EQ(seeded.beta, 0.2);
    EXPECT_EQ(seeded.n_replicates, 4);
    EXPECT_THROW(config_from_json(R"({"p": "ten"})"), ConfigError);
    EXPECT_THROW(config_from_json("[1,"), ConfigError);
}

TEST(Experiment, DeterministicAcrossThreadCounts) {
    auto a = small_config();
    a.threads = 1;
    auto b = a;
    b.threads = 3;
    const auto ra = run_experiment(a);
    const auto rb = run_experiment(b);
    EXPECT_EQ(report_to_json(ra), report_to_json(rb));
    EXPECT_EQ(ra.replicates.size(), 3u * 2u * 4u);
    ASSERT_TRUE(ra.oracle_q.has_value());
    EXPECT_EQ(*ra.oracle_q, 1);
}

TEST(Experiment, AggregateMatchesBruteForce) {
    const auto rep = run_experiment(small_config());
    for (const auto& cell : rep.cells) {
        double tp = 0, l1 = 0;
        std::vector<double> fps;
        for (const auto& r : rep.replicates)
            if (r.method == cell.method && r.horizon == cell.horizon) {
                tp += r.tp;
                l1 += r.l1_error;
                fps.push_back(r.fp);
            }
        ASSERT_EQ(fps.size(), 3u);
        EXPECT_NEAR(cell.tp.mean, tp / 3.0, 1e-12);
        EXPECT_NEAR(cell.l1_error.mean, l1 / 3.0, 1e-12);
        const double m = (fps[0] + fps[1] + fps[2]) / 3.0;
        double ss = 0;
        for (double f : fps) ss += (f - m) * (f - m);
        EXPECT_NEAR(cell.fp.sd, std::sqrt(ss / 2.0), 1e-12);
        EXPECT_EQ(cell.seconds.mean, 0.0);
    }
    const auto again = aggregate(rep.replicates, rep.config.methods, rep.config.horizons);
    ASSERT_EQ(again.size(), rep.cells.size());
    for (std::size_t k = 0; k < again.size(); ++k) EXPECT_EQ(again[k].l1_error.mean, rep.cells[k].l1_error.mean);
}

TEST(Experiment, HorizonsAreNestedWithinReplicate) {
    const auto rep = run_experiment(small_config());
    for (const auto& r : rep.replicates) {
        if (r.horizon != 300.0) continue;
        for (const auto& s : rep.replicates)
            if (s.replicate == r.replicate && s.horizon == 600.0 && s.method == r.method) {
                EXPECT_LE(r.n_events, s.n_events);
                EXPECT_EQ(r.seed, s.seed);
            }
    }
}

TEST(Experiment, RejectsUnstableNetwork) {
    auto cfg = small_config();
    cfg.beta = 0.5;
    EXPECT_THROW(run_experiment(cfg), StationarityError);
}

TEST(Report, JsonAndCsv) {
    auto cfg = small_config();
    cfg.methods = {Method::HpTrim, Method::Naive};
    const auto rep = run_experiment(cfg);
    const std::string text = report_to_json(rep);
    EXPECT_EQ(text.back(), '\n');
    EXPECT_EQ(report_to_json(report_from_json(text)), text);
    EXPECT_EQ(text.find("threads"), std::string::npos);

    std::ostringstream csv;
    write_report_csv(rep, csv);
    EXPECT_EQ(count_lines(csv.str()), 1u + 2u * 2u);
    std::ostringstream per;
    write_replicates_csv(rep, per);
    EXPECT_EQ(count_lines(per.str()), 1u + 3u * 2u * 2u);

    std::ostringstream dot;
    EXPECT_THROW(export_report(rep, ExportFormat::Dot, dot), ConfigError);
    EXPECT_THROW(export_format_from_string("xml"), ConfigError);
}

TEST(Holdout, OverlapAndErrors) {
    const auto spec = make_block_network(10, 0, 5, 0.2, 0.0, 0.1, 0.0);
    const auto ev = simulate(spec, 3000.0, 12);
    HoldoutOptions opts;
    const std::vector<int> hide{0, 9};
    const auto rep = stability_holdout(ev, hide, opts);
    EXPECT_EQ(rep.retained_ids.size(), 8u);
    EXPECT_LE(rep.shared_edges, rep.reduced_edges);
    EXPECT_LE(rep.shared_edges, rep.full_edges);
    EXPECT_GE(rep.overlap_fraction, 0.0);
    EXPECT_LE(rep.overlap_fraction, 1.0);
    EXPECT_EQ(rep.reduced.beta_hat.rows(), 8);

    const auto none = stability_holdout(ev, std::vector<int>{}, opts);
    EXPECT_EQ(none.overlap_fraction, 1.0);
    EXPECT_EQ(none.shared_edges, none.full_edges);

    EXPECT_THROW(stability_holdout(ev, std::vector<int>{42}, opts), ConfigError);
    EXPECT_THROW(stability_holdout(ev, std::vector<int>{1, 1}, opts), ConfigError);
    opts.method = Method::HiveOracle;
    EXPECT_THROW(stability_holdout(ev, hide, opts), ConfigError);
}
