#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

namespace hptrim {

/**
 * Realised multivariate point process on [0, horizon).
 *
 * events[c] holds the strictly increasing event times of component c.
 * observed_ids lists the components exposed to estimators; the rest are hidden.
 */
struct EventData {
    int n_components = 0;
    double horizon = 0.0;
    std::vector<std::vector<double>> events;
    std::vector<int> observed_ids;

    std::size_t total_events() const noexcept;
    std::vector<int> hidden_ids() const;

    // Throws DataError when an invariant is broken.
    void validate() const;

    // Events in [0, new_horizon), same components.
    EventData truncated(double new_horizon) const;

    // Sub-process over the given components, densely re-indexed in the given
    // order; all of them are marked observed.
    EventData subset(std::span<const int> ids) const;

    friend bool operator==(const EventData&, const EventData&) = default;
};

// Records `component_id,time` sorted by time (ties by component), preceded by
// a header line and a `# horizon=... n_components=... observed=...` comment.
void write_events_csv(const EventData& ev, std::ostream& out);
void write_events_csv(const EventData& ev, const std::filesystem::path& path);

} // namespace hptrim
