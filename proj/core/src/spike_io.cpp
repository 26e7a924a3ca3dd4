#include "hptrim/spike_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <string_view>

#include "hptrim/errors.hpp"

namespace hptrim {

namespace {

struct Record {
    std::size_t line = 0;
    std::string id;
    double time = 0.0;
};

struct Header {
    std::optional<double> horizon;
    std::optional<int> n_components;
    std::optional<std::vector<int>> observed;
};

std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::optional<double> parse_double(std::string_view s) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
    return v;
}

std::optional<long long> parse_int(std::string_view s) {
    long long v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

void parse_comment(std::string_view body, Header& h, std::size_t line) {
    std::istringstream ss{std::string(body)};
    std::string tok;
    while (ss >> tok) {
        const auto eq = tok.find('=');
        if (eq == std::string::npos) continue;
        const std::string_view key = std::string_view(tok).substr(0, eq);
        const std::string_view val = std::string_view(tok).substr(eq + 1);
        const auto bad = [&] { return DataError("line " + std::to_string(line) + ": bad header value '" + tok + "'"); };
        if (key == "horizon") {
            const auto v = parse_double(val);
            if (!v) throw bad();
            h.horizon = *v;
        } else if (key == "n_components") {
            const auto v = parse_int(val);
            if (!v || *v < 0) throw bad();
            h.n_components = static_cast<int>(*v);
        } else if (key == "observed") {
            std::vector<int> ids;
            std::size_t start = 0;
            while (start < val.size()) {
                auto end = val.find(';', start);
                if (end == std::string_view::npos) end = val.size();
                const auto v = parse_int(val.substr(start, end - start));
                if (!v) throw bad();
                ids.push_back(static_cast<int>(*v));
                start = end + 1;
            }
            h.observed = std::move(ids);
        }
    }
}

std::vector<Record> parse(std::istream& in, Header& header) {
    std::vector<Record> out;
    std::string raw;
    std::size_t line = 0;
    bool seen_data = false;
    while (std::getline(in, raw)) {
        ++line;
        const std::string_view s = trim(raw);
        if (s.empty()) continue;
        if (s.front() == '#') {
            parse_comment(s.substr(1), header, line);
            continue;
        }
        const auto comma = s.find(',');
        if (comma == std::string_view::npos)
            throw DataError("line " + std::to_string(line) + ": expected 'component_id,time'");
        const std::string_view id = trim(s.substr(0, comma));
        const std::string_view tv = trim(s.substr(comma + 1));
        const auto t = parse_double(tv);
        if (!t) {
            // A single column-name row is allowed before the first record.
            if (!seen_data && out.empty() && !parse_double(id)) {
                seen_data = true;
                continue;
            }
            throw DataError("line " + std::to_string(line) + ": cannot parse time '" + std::string(tv) + "'");
        }
        if (id.empty()) throw DataError("line " + std::to_string(line) + ": empty component id");
        seen_data = true;
        out.push_back({line, std::string(id), *t});
    }
    return out;
}

std::string line_list(const std::vector<std::size_t>& lines) {
    std::string s;
    const std::size_t shown = std::min<std::size_t>(lines.size(), 20);
    for (std::size_t k = 0; k < shown; ++k) s += (k ? ", " : "") + std::to_string(lines[k]);
    if (lines.size() > shown) s += ", ... (" + std::to_string(lines.size()) + " in total)";
    return s;
}

// Negative, decreasing, out-of-range and duplicate (same component, same
// time) records are all reported together. Times are in output units.
void check_times(const std::vector<Record>& recs, const std::vector<int>& index, double horizon) {
    std::vector<std::size_t> negative, unsorted, outside, duplicate;
    std::map<int, double> last;
    for (std::size_t k = 0; k < recs.size(); ++k) {
        const double t = recs[k].time;
        if (t < 0.0) negative.push_back(recs[k].line);
        if (k > 0 && t < recs[k - 1].time) unsorted.push_back(recs[k].line);
        if (t >= horizon) outside.push_back(recs[k].line);
        const auto it = last.find(index[k]);
        if (it != last.end() && it->second == t) duplicate.push_back(recs[k].line);
        last[index[k]] = t;
    }
    std::string msg;
    if (!negative.empty()) msg += "negative times at lines " + line_list(negative) + "; ";
    if (!unsorted.empty()) msg += "times out of order at lines " + line_list(unsorted) + "; ";
    if (!outside.empty()) msg += "times at or beyond the horizon at lines " + line_list(outside) + "; ";
    if (!duplicate.empty()) msg += "repeated event times at lines " + line_list(duplicate) + "; ";
    if (!msg.empty()) throw DataError(msg.substr(0, msg.size() - 2));
}

EventData assemble(int n_components, double horizon, const std::vector<Record>& recs, const std::vector<int>& index,
                   std::vector<int> observed) {
    EventData ev;
    ev.n_components = n_components;
    ev.horizon = horizon;
    ev.events.resize(static_cast<std::size_t>(n_components));
    for (std::size_t k = 0; k < recs.size(); ++k) ev.events[static_cast<std::size_t>(index[k])].push_back(recs[k].time);
    ev.observed_ids = std::move(observed);
    ev.validate();
    return ev;
}

std::ifstream open(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    return in;
}

} // namespace

EventData read_events_csv(std::istream& in, std::optional<double> horizon) {
    Header header;
    const std::vector<Record> recs = parse(in, header);
    std::vector<int> index;
    index.reserve(recs.size());
    int max_id = -1;
    for (const auto& r : recs) {
        const auto v = parse_int(r.id);
        if (!v || *v < 0 || *v > std::numeric_limits<int>::max() - 1)
            throw DataError("line " + std::to_string(r.line) + ": component id must be a non-negative integer");
        index.push_back(static_cast<int>(*v));
        max_id = std::max(max_id, static_cast<int>(*v));
    }
    const double h = horizon ? *horizon : header.horizon.value_or(0.0);
    if (!(h > 0.0)) throw DataError("events CSV: no horizon in the file header; supply one");
    const int n = header.n_components.value_or(max_id + 1);
    if (max_id >= n) throw DataError("events CSV: component id " + std::to_string(max_id) + " exceeds n_components");
    check_times(recs, index, h);
    std::vector<int> observed;
    if (header.observed) {
        observed = *header.observed;
    } else {
        for (int c = 0; c < n; ++c) observed.push_back(c);
    }
    return assemble(n, h, recs, index, std::move(observed));
}

EventData read_events_csv(const std::filesystem::path& path, std::optional<double> horizon) {
    auto in = open(path);
    return read_events_csv(in, horizon);
}

SpikeIngest ingest_spikes(std::istream& in, const IngestOptions& opts) {
    if (!(opts.time_unit > 0.0) || !std::isfinite(opts.time_unit)) throw ConfigError("ingest: time_unit must be positive");
    if (opts.decimation < 1) throw ConfigError("ingest: decimation must be at least 1");
    if (opts.horizon && !(*opts.horizon > 0.0)) throw ConfigError("ingest: horizon must be positive");

    Header header;
    std::vector<Record> recs = parse(in, header);
    if (recs.empty()) throw DataError("ingest: no spike records; nothing to fit");
    for (auto& r : recs) r.time *= opts.time_unit;

    bool integer_ids = true;
    for (const auto& r : recs) {
        const auto v = parse_int(r.id);
        if (!v || *v < 0 || *v > std::numeric_limits<int>::max() - 1) {
            integer_ids = false;
            break;
        }
    }

    SpikeIngest out;
    std::vector<int> index(recs.size());
    int n = 0;
    if (integer_ids && header.n_components) {
        n = *header.n_components;
        for (std::size_t k = 0; k < recs.size(); ++k) {
            index[k] = static_cast<int>(*parse_int(recs[k].id));
            if (index[k] >= n)
                throw DataError("line " + std::to_string(recs[k].line) + ": component id exceeds n_components");
        }
        for (int c = 0; c < n; ++c) out.source_ids.push_back(std::to_string(c));
    } else {
        std::vector<std::string> ids;
        for (const auto& r : recs) ids.push_back(r.id);
        std::sort(ids.begin(), ids.end(), [&](const std::string& a, const std::string& b) {
            if (integer_ids) return *parse_int(a) < *parse_int(b);
            return a < b;
        });
        ids.erase(std::unique(ids.begin(), ids.end(), [&](const std::string& a, const std::string& b) {
                      return integer_ids ? *parse_int(a) == *parse_int(b) : a == b;
                  }),
                  ids.end());
        std::map<std::string, int> rank;
        for (std::size_t k = 0; k < ids.size(); ++k) rank[ids[k]] = static_cast<int>(k);
        for (std::size_t k = 0; k < recs.size(); ++k) {
            auto it = rank.find(recs[k].id);
            if (it == rank.end()) {
                // Integer ids that differ only in formatting ("07" vs "7").
                const auto v = *parse_int(recs[k].id);
                it = std::find_if(rank.begin(), rank.end(),
                                  [&](const auto& kv) { return *parse_int(kv.first) == v; });
            }
            index[k] = it->second;
        }
        n = static_cast<int>(ids.size());
        out.source_ids = std::move(ids);
    }

    double horizon = 0.0;
    if (opts.horizon) {
        horizon = *opts.horizon;
    } else if (header.horizon) {
        horizon = *header.horizon;
    } else {
        double t_max = 0.0;
        for (const auto& r : recs) t_max = std::max(t_max, r.time);
        horizon = t_max + opts.time_unit;
    }
    check_times(recs, index, horizon);

    std::vector<int> observed(static_cast<std::size_t>(n));
    for (int c = 0; c < n; ++c) observed[static_cast<std::size_t>(c)] = c;
    out.events = assemble(n, horizon, recs, index, std::move(observed));
    out.bin_width = opts.time_unit * static_cast<double>(opts.decimation);
    return out;
}

SpikeIngest ingest_spikes(const std::filesystem::path& path, const IngestOptions& opts) {
    auto in = open(path);
    return ingest_spikes(in, opts);
}

void write_id_mapping(const SpikeIngest& ingest, std::ostream& out) {
    out << "index,source_id\n";
    for (std::size_t k = 0; k < ingest.source_ids.size(); ++k) out << k << ',' << ingest.source_ids[k] << '\n';
}

} // namespace hptrim
