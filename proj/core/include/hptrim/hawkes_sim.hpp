#pragma once

#include <cstdint>

#include <Eigen/Dense>

#include "hptrim/events.hpp"
#include "hptrim/network_model.hpp"

namespace hptrim {

struct SimulationStats {
    std::uint64_t candidates = 0;
    std::uint64_t accepted = 0;
    // Smallest intensity value used in an acceptance test.
    double min_intensity = 0.0;
};

/**
 * Ogata thinning for the linear Hawkes process of `spec` over all p + q
 * components, with intensity max(mu_i + sum_j B_ij x_j(t), floor).
 *
 * Each component thins its own candidate stream against a piecewise-constant
 * bound (baseline plus the decayed positive part of its excitation), drawn
 * from PhiloxStream(seed, component). Output is a deterministic function of
 * (spec, horizon, seed, floor). The first p components are marked observed.
 *
 * Throws StationarityError if the spec fails the stationarity check or the
 * run exceeds the event guard (50 * horizon * total stationary rate).
 */
EventData simulate(const NetworkSpec& spec, double horizon, std::uint64_t seed, double floor = 0.0,
                   SimulationStats* stats = nullptr);

// (I - Bbar)^{-1} mu with Bbar_ij = B_ij * integral(kappa_j). Only defined for
// nonnegative coefficients; throws ConfigError otherwise.
Eigen::VectorXd stationary_rates(const NetworkSpec& spec);

// Events per unit time for every component.
Eigen::VectorXd empirical_rates(const EventData& ev);

} // namespace hptrim
