#include "hptrim/events.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <tuple>

#include "hptrim/errors.hpp"

namespace hptrim {

std::size_t EventData::total_events() const noexcept {
    std::size_t n = 0;
    for (const auto& e : events) n += e.size();
    return n;
}

std::vector<int> EventData::hidden_ids() const {
    std::vector<bool> seen(static_cast<std::size_t>(n_components), false);
    for (int id : observed_ids) seen[static_cast<std::size_t>(id)] = true;
    std::vector<int> out;
    for (int c = 0; c < n_components; ++c)
        if (!seen[static_cast<std::size_t>(c)]) out.push_back(c);
    return out;
}

void EventData::validate() const {
    if (!(horizon > 0.0) || !std::isfinite(horizon)) throw DataError("event data: horizon must be positive");
    if (static_cast<int>(events.size()) != n_components)
        throw DataError("event data: expected " + std::to_string(n_components) + " event lists");
    for (int c = 0; c < n_components; ++c) {
        const auto& e = events[static_cast<std::size_t>(c)];
        for (std::size_t k = 0; k < e.size(); ++k) {
            if (!(e[k] >= 0.0 && e[k] < horizon))
                throw DataError("event data: component " + std::to_string(c) + " has time outside [0, horizon)");
            if (k > 0 && !(e[k] > e[k - 1]))
                throw DataError("event data: component " + std::to_string(c) + " times not strictly increasing");
        }
    }
    std::vector<bool> seen(static_cast<std::size_t>(n_components), false);
    for (int id : observed_ids) {
        if (id < 0 || id >= n_components) throw DataError("event data: observed id out of range");
        if (seen[static_cast<std::size_t>(id)]) throw DataError("event data: duplicate observed id");
        seen[static_cast<std::size_t>(id)] = true;
    }
}

EventData EventData::truncated(double new_horizon) const {
    EventData out;
    out.n_components = n_components;
    out.horizon = new_horizon;
    out.observed_ids = observed_ids;
    out.events.reserve(events.size());
    for (const auto& e : events) {
        auto end = std::lower_bound(e.begin(), e.end(), new_horizon);
        out.events.emplace_back(e.begin(), end);
    }
    return out;
}

EventData EventData::subset(std::span<const int> ids) const {
    EventData out;
    out.n_components = static_cast<int>(ids.size());
    out.horizon = horizon;
    for (int k = 0; k < out.n_components; ++k) {
        const int id = ids[static_cast<std::size_t>(k)];
        if (id < 0 || id >= n_components) throw DataError("subset: component id out of range");
        out.events.push_back(events[static_cast<std::size_t>(id)]);
        out.observed_ids.push_back(k);
    }
    return out;
}

void write_events_csv(const EventData& ev, std::ostream& out) {
    std::vector<std::tuple<double, int>> records;
    records.reserve(ev.total_events());
    for (int c = 0; c < ev.n_components; ++c)
        for (double t : ev.events[static_cast<std::size_t>(c)]) records.emplace_back(t, c);
    std::sort(records.begin(), records.end());

    out << "# horizon=" << std::setprecision(17) << ev.horizon << " n_components=" << ev.n_components
        << " observed=";
    for (std::size_t k = 0; k < ev.observed_ids.size(); ++k) out << (k ? ";" : "") << ev.observed_ids[k];
    out << '\n' << "component_id,time\n";
    for (const auto& [t, c] : records) out << c << ',' << t << '\n';
}

void write_events_csv(const EventData& ev, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    write_events_csv(ev, out);
}

} // namespace hptrim
