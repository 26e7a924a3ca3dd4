#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "hptrim/events.hpp"

namespace hptrim {

/**
 * Reads the format produced by write_events_csv. The comment line, when
 * present, restores horizon, component count and the observed set; without it
 * the horizon must be supplied and every id in [0, max id] is observed.
 * Throws DataError on malformed records.
 */
EventData read_events_csv(std::istream& in, std::optional<double> horizon = std::nullopt);
EventData read_events_csv(const std::filesystem::path& path, std::optional<double> horizon = std::nullopt);

struct SpikeIngest {
    EventData events;                    // all components observed
    std::vector<std::string> source_ids;  // source_ids[k] is the file id of component k
    double bin_width = 0.0;              // time_unit * decimation, in output units
};

struct IngestOptions {
    double time_unit = 1.0;         // output units per recorded tick
    std::optional<double> horizon;  // output units; default: header value or last event + time_unit
    int decimation = 1;             // ticks per regression bin
};

/**
 * Spike records `component_id,time` with times in ticks, sorted by time.
 *
 * Integer ids listed under a header comment keep their index; otherwise ids
 * are re-indexed densely in ascending order (numeric when every id is an
 * integer). Throws DataError for an empty file or, listing the offending
 * lines, for negative, decreasing, duplicate or out-of-horizon times.
 */
SpikeIngest ingest_spikes(std::istream& in, const IngestOptions& opts);
SpikeIngest ingest_spikes(const std::filesystem::path& path, const IngestOptions& opts);

// CSV with columns index,source_id.
void write_id_mapping(const SpikeIngest& ingest, std::ostream& out);

} // namespace hptrim
