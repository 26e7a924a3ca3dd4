#include "hptrim/hawkes_sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "hptrim/errors.hpp"
#include "hptrim/rng.hpp"

namespace hptrim {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct OutEdge {
    int target;
    double weight;
};

// Excitation of one target, split by kernel-rate class and sign. Decay is
// applied lazily from `last` up to the evaluation time.
struct TargetState {
    double last = 0.0;
    std::vector<double> pos;
    std::vector<double> neg;
};

class Simulator {
public:
    Simulator(const NetworkSpec& spec, std::uint64_t seed, double floor) : spec_(spec), floor_(floor) {
        const int n = spec.n_components();
        const MatrixXd b = spec.full_coefficients();

        std::map<double, int> class_of_rate;
        source_class_.resize(static_cast<std::size_t>(n));
        for (int j = 0; j < n; ++j) {
            const double r = spec.kernels[static_cast<std::size_t>(j)].rate;
            auto [it, inserted] = class_of_rate.emplace(r, static_cast<int>(class_rates_.size()));
            if (inserted) class_rates_.push_back(r);
            source_class_[static_cast<std::size_t>(j)] = it->second;
        }

        out_edges_.resize(static_cast<std::size_t>(n));
        for (int j = 0; j < n; ++j)
            for (int i = 0; i < n; ++i)
                if (b(i, j) != 0.0) out_edges_[static_cast<std::size_t>(j)].push_back({i, b(i, j)});

        const auto n_classes = class_rates_.size();
        states_.assign(static_cast<std::size_t>(n), TargetState{0.0, std::vector<double>(n_classes, 0.0),
                                                                std::vector<double>(n_classes, 0.0)});
        streams_.reserve(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) streams_.emplace_back(seed, static_cast<std::uint32_t>(i));
        bound_.assign(static_cast<std::size_t>(n), 0.0);
        candidate_.assign(static_cast<std::size_t>(n), kInf);
    }

    EventData run(double horizon, SimulationStats* stats) {
        const int n = spec_.n_components();
        const double guard = guard_limit(horizon);
        EventData ev;
        ev.n_components = n;
        ev.horizon = horizon;
        ev.events.resize(static_cast<std::size_t>(n));
        for (int i = 0; i < spec_.p; ++i) ev.observed_ids.push_back(i);

        SimulationStats local;
        local.min_intensity = kInf;
        for (int i = 0; i < n; ++i) redraw(i, 0.0);

        std::uint64_t total = 0;
        for (;;) {
            const auto it = std::min_element(candidate_.begin(), candidate_.end());
            const double t = *it;
            if (!(t < horizon)) break;
            const int i = static_cast<int>(it - candidate_.begin());

            ++local.candidates;
            const double lam = intensity(i, t);
            local.min_intensity = std::min(local.min_intensity, lam);
            const double u = streams_[static_cast<std::size_t>(i)].uniform();
            if (u * bound_[static_cast<std::size_t>(i)] < lam) {
                ev.events[static_cast<std::size_t>(i)].push_back(t);
                ++local.accepted;
                if (++total > guard)
                    throw StationarityError("simulation exceeded the event guard of " + std::to_string(guard) +
                                            " events; the network is effectively unstable");
                fire(i, t);
            }
            redraw(i, t);
        }
        if (local.candidates == 0) local.min_intensity = 0.0;
        if (stats) *stats = local;
        return ev;
    }

private:
    double guard_limit(double horizon) const {
        NetworkSpec upper = spec_;
        upper.theta = upper.theta.cwiseAbs();
        upper.delta = upper.delta.cwiseAbs();
        upper.hidden_block = upper.hidden_block.cwiseAbs();
        upper.mu = upper.mu.cwiseMax(floor_);
        const VectorXd rates = stationary_rates(upper);
        return 50.0 * horizon * rates.sum() + 100.0;
    }

    void advance(int i, double t) {
        auto& s = states_[static_cast<std::size_t>(i)];
        const double dt = t - s.last;
        if (dt > 0.0) {
            for (std::size_t c = 0; c < class_rates_.size(); ++c) {
                const double f = std::exp(-class_rates_[c] * dt);
                s.pos[c] *= f;
                s.neg[c] *= f;
            }
        }
        s.last = t;
    }

    double intensity(int i, double t) {
        advance(i, t);
        const auto& s = states_[static_cast<std::size_t>(i)];
        double lin = spec_.mu[i];
        for (std::size_t c = 0; c < class_rates_.size(); ++c) lin += s.pos[c] - s.neg[c];
        return std::max(lin, floor_);
    }

    // Dominates the intensity from t until the next jump: negative terms are
    // dropped and positive terms only decay.
    double upper_bound(int i, double t) {
        advance(i, t);
        const auto& s = states_[static_cast<std::size_t>(i)];
        double ub = spec_.mu[i];
        for (double v : s.pos) ub += v;
        return std::max(ub, floor_);
    }

    void redraw(int i, double t) {
        const double m = upper_bound(i, t);
        bound_[static_cast<std::size_t>(i)] = m;
        candidate_[static_cast<std::size_t>(i)] =
            m > 0.0 ? t + streams_[static_cast<std::size_t>(i)].exponential(m) : kInf;
    }

    void fire(int source, double t) {
        const int cls = source_class_[static_cast<std::size_t>(source)];
        for (const auto& e : out_edges_[static_cast<std::size_t>(source)]) {
            advance(e.target, t);
            auto& s = states_[static_cast<std::size_t>(e.target)];
            if (e.weight > 0.0)
                s.pos[static_cast<std::size_t>(cls)] += e.weight;
            else
                s.neg[static_cast<std::size_t>(cls)] -= e.weight;
            // The source itself is redrawn by the caller.
            if (e.target != source) redraw(e.target, t);
        }
    }

    const NetworkSpec& spec_;
    double floor_;
    std::vector<double> class_rates_;
    std::vector<int> source_class_;
    std::vector<std::vector<OutEdge>> out_edges_;
    std::vector<TargetState> states_;
    std::vector<PhiloxStream> streams_;
    std::vector<double> bound_;
    std::vector<double> candidate_;
};

} // namespace

EventData simulate(const NetworkSpec& spec, double horizon, std::uint64_t seed, double floor,
                   SimulationStats* stats) {
    spec.validate();
    if (!(horizon > 0.0) || !std::isfinite(horizon)) throw ConfigError("simulate: horizon must be positive");
    if (!(floor >= 0.0)) throw ConfigError("simulate: floor must be nonnegative");
    const SpectrumReport rep = check_stationarity(spec);
    if (!rep.passes_a1) throw StationarityError("simulate: network is not stationary: " + rep.describe());
    Simulator sim(spec, seed, floor);
    return sim.run(horizon, stats);
}

VectorXd stationary_rates(const NetworkSpec& spec) {
    spec.validate();
    const MatrixXd bbar = spec.integrated_coefficients();
    if ((bbar.array() < 0.0).any())
        throw ConfigError("stationary_rates: inhibitory coefficients present; the linear mean identity does not "
                          "hold under rectification");
    const SpectrumReport rep = check_stationarity(spec);
    if (!rep.passes_a1) throw StationarityError("stationary_rates: network is not stationary: " + rep.describe());
    const int n = spec.n_components();
    if (n == 0) return {};
    const MatrixXd a = MatrixXd::Identity(n, n) - bbar;
    return a.partialPivLu().solve(spec.mu);
}

VectorXd empirical_rates(const EventData& ev) {
    if (!(ev.horizon > 0.0)) throw DataError("empirical_rates: horizon must be positive");
    VectorXd r(ev.n_components);
    for (int c = 0; c < ev.n_components; ++c)
        r[c] = static_cast<double>(ev.events[static_cast<std::size_t>(c)].size()) / ev.horizon;
    return r;
}

} // namespace hptrim
