#include <benchmark/benchmark.h>

#include "hptrim/deconfounders.hpp"
#include "hptrim/design.hpp"
#include "hptrim/experiments.hpp"
#include "hptrim/hawkes_sim.hpp"
#include "hptrim/lasso.hpp"
#include "hptrim/spectral.hpp"

using namespace hptrim;

namespace {

NetworkSpec desk_network(int p) {
    ExperimentConfig cfg = preset("fig2-desk");
    cfg.p = cfg.q = p;
    return build_network(cfg);
}

RegressionData desk_design(int p, double horizon) {
    const NetworkSpec spec = desk_network(p);
    return build_design(simulate(spec, horizon, 1), spec.kernels, 1.0);
}

} // namespace

static void BM_Simulate(benchmark::State& state) {
    const NetworkSpec spec = desk_network(static_cast<int>(state.range(0)));
    const double horizon = static_cast<double>(state.range(1));
    std::uint64_t seed = 0;
    std::size_t events = 0;
    for (auto _ : state) {
        const EventData ev = simulate(spec, horizon, ++seed);
        events += ev.total_events();
        benchmark::DoNotOptimize(ev.events.data());
    }
    state.counters["events/s"] = benchmark::Counter(static_cast<double>(events), benchmark::Counter::kIsRate);
}
BENCHMARK(BM_Simulate)->Args({20, 1000})->Args({20, 5000})->Args({100, 5000})->Unit(benchmark::kMillisecond);

static void BM_BuildDesign(benchmark::State& state) {
    const NetworkSpec spec = desk_network(static_cast<int>(state.range(0)));
    const EventData ev = simulate(spec, static_cast<double>(state.range(1)), 2);
    for (auto _ : state) {
        const RegressionData reg = build_design(ev, spec.kernels, 1.0);
        benchmark::DoNotOptimize(reg.X.data());
    }
}
BENCHMARK(BM_BuildDesign)->Args({20, 5000})->Args({100, 5000})->Unit(benchmark::kMicrosecond);

static void BM_Trim(benchmark::State& state) {
    const RegressionData reg = desk_design(static_cast<int>(state.range(0)), static_cast<double>(state.range(1)));
    const Eigen::MatrixXd xs = standardize(reg.X, column_scaling(reg.X));
    for (auto _ : state) {
        const SpectralTransform tf = trim_transform(xs);
        const TransformedData td = apply(tf, xs, reg.Y);
        benchmark::DoNotOptimize(td.x.data());
    }
}
BENCHMARK(BM_Trim)->Args({20, 1000})->Args({20, 5000})->Args({100, 5000})->Unit(benchmark::kMillisecond);

static void BM_LassoTarget(benchmark::State& state) {
    const RegressionData reg = desk_design(static_cast<int>(state.range(0)), 5000.0);
    const Eigen::MatrixXd xs = standardize(reg.X, column_scaling(reg.X));
    const LassoProblem prob(xs);
    const Eigen::VectorXd y = reg.Y.col(0);
    const double lambda = 0.05 * prob.lambda_max(y);
    for (auto _ : state) {
        const LassoFit fit = prob.solve(y, lambda);
        benchmark::DoNotOptimize(fit.beta.data());
    }
}
BENCHMARK(BM_LassoTarget)->Arg(20)->Arg(100)->Unit(benchmark::kMicrosecond);

static void BM_FitMethod(benchmark::State& state) {
    const RegressionData reg = desk_design(20, 5000.0);
    const auto m = static_cast<Method>(state.range(0));
    state.SetLabel(to_string(m));
    for (auto _ : state) {
        const NetworkEstimate est = fit_method(m, reg, {}, 2);
        benchmark::DoNotOptimize(est.beta_hat.data());
    }
}
BENCHMARK(BM_FitMethod)->DenseRange(0, 3)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
