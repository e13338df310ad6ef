#include "plumeseg/tracks.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>

#include "plumeseg/io.hpp"

namespace plumeseg {

namespace {

TrackPoint dead_reckon(const AISRecord& from, Timestamp t) {
    const double dt = static_cast<double>(t - from.timestamp);
    const double speed = from.speed_kt * kKnotInMs;
    const double heading = deg2rad(from.heading_deg);
    const double north = speed * std::cos(heading) * dt;
    const double east = speed * std::sin(heading) * dt;
    return {t, from.lat + north / kMetersPerDegreeLat,
            from.lon + east / (kMetersPerDegreeLat * std::cos(deg2rad(from.lat)))};
}

std::vector<AISRecord> sorted_unique(std::span<const AISRecord> records) {
    std::vector<AISRecord> sorted(records.begin(), records.end());
    std::stable_sort(sorted.begin(), sorted.end(),
                     [](const AISRecord& a, const AISRecord& b) { return a.timestamp < b.timestamp; });
    sorted.erase(std::unique(sorted.begin(), sorted.end(),
                             [](const AISRecord& a, const AISRecord& b) { return a.timestamp == b.timestamp; }),
                 sorted.end());
    return sorted;
}

}  // namespace

std::map<Mmsi, std::vector<AISRecord>> group_by_ship(std::span<const AISRecord> records) {
    std::map<Mmsi, std::vector<AISRecord>> raw;
    for (const auto& r : records) {
        raw[r.mmsi].push_back(r);
    }
    for (auto& [mmsi, recs] : raw) {
        recs = sorted_unique(recs);
    }
    return raw;
}

Track interpolate_track(std::span<const AISRecord> records, Timestamp t_overpass, const TrackParams& params) {
    if (params.step_s <= 0 || params.window_s < params.step_s) {
        throw ValidationError("track window must be at least one positive step");
    }
    if (!records.empty()) {
        for (const auto& r : records) {
            if (r.mmsi != records.front().mmsi) {
                throw ValidationError("interpolate_track: records from more than one ship");
            }
        }
    }
    const auto recs = sorted_unique(records);
    if (recs.size() < 2) {
        throw ValidationError("insufficient AIS coverage");
    }

    Track track;
    track.mmsi = recs.front().mmsi;
    const Timestamp steps = params.window_s / params.step_s;
    const auto& first = recs.front();
    const auto& last = recs.back();
    std::size_t seg = 0;
    for (Timestamp k = steps; k >= 0; --k) {
        const Timestamp t = t_overpass - k * params.step_s;
        if (t < first.timestamp) {
            if (first.timestamp - t <= params.step_s) {
                track.points.push_back(dead_reckon(first, t));
            }
            continue;
        }
        if (t > last.timestamp) {
            if (t - last.timestamp <= params.step_s) {
                track.points.push_back(dead_reckon(last, t));
            }
            continue;
        }
        while (seg + 1 < recs.size() && recs[seg + 1].timestamp < t) {
            ++seg;
        }
        const auto& a = recs[seg];
        const auto& b = recs[std::min(seg + 1, recs.size() - 1)];
        if (t == a.timestamp || a.timestamp == b.timestamp) {
            track.points.push_back({t, a.lat, a.lon});
        } else if (t == b.timestamp) {
            track.points.push_back({t, b.lat, b.lon});
        } else {
            const double f = static_cast<double>(t - a.timestamp) / static_cast<double>(b.timestamp - a.timestamp);
            track.points.push_back({t, a.lat + f * (b.lat - a.lat), a.lon + f * (b.lon - a.lon)});
        }
    }
    if (track.points.size() < 2 || track.points.back().t != t_overpass) {
        throw ValidationError("insufficient AIS coverage");
    }
    return track;
}

double speed_at(std::span<const AISRecord> records, Timestamp t) {
    const auto recs = sorted_unique(records);
    if (recs.empty()) {
        throw ValidationError("insufficient AIS coverage");
    }
    if (t <= recs.front().timestamp) {
        return recs.front().speed_kt;
    }
    if (t >= recs.back().timestamp) {
        return recs.back().speed_kt;
    }
    for (std::size_t i = 0; i + 1 < recs.size(); ++i) {
        const auto& a = recs[i];
        const auto& b = recs[i + 1];
        if (t >= a.timestamp && t <= b.timestamp) {
            const double f = static_cast<double>(t - a.timestamp) / static_cast<double>(b.timestamp - a.timestamp);
            return a.speed_kt + f * (b.speed_kt - a.speed_kt);
        }
    }
    return recs.back().speed_kt;
}

WindShiftedTrack wind_shift(const Track& track, const WindVector& wind, Timestamp t_overpass) {
    WindShiftedTrack out;
    out.mmsi = track.mmsi;
    out.points.reserve(track.points.size());
    for (const auto& p : track.points) {
        if (p.t > t_overpass) {
            throw ValidationError("wind_shift: track point after overpass");
        }
        const double elapsed = static_cast<double>(t_overpass - p.t);
        const double dlat = wind.v * elapsed / kMetersPerDegreeLat;
        const double dlon = wind.u * elapsed / (kMetersPerDegreeLat * std::cos(deg2rad(p.lat)));
        out.points.push_back({p.t, p.lat + dlat, p.lon + dlon});
    }
    return out;
}

std::pair<WindVector, WindVector> extreme_winds(const WindVector& wind, double dspeed, double dangle_deg) {
    const double speed = wind.speed() + dspeed;
    const double dir = wind.direction();
    const double da = deg2rad(dangle_deg);
    const WindVector left{speed * std::cos(dir + da), speed * std::sin(dir + da)};
    const WindVector right{speed * std::cos(dir - da), speed * std::sin(dir - da)};
    return {left, right};
}

std::pair<WindShiftedTrack, WindShiftedTrack> extreme_tracks(const Track& track, const WindVector& wind,
                                                             Timestamp t_overpass, double dspeed, double dangle_deg) {
    const auto [left, right] = extreme_winds(wind, dspeed, dangle_deg);
    return {wind_shift(track, left, t_overpass), wind_shift(track, right, t_overpass)};
}

WindField::WindField(std::vector<Sample> samples) : samples_(std::move(samples)) {}

WindVector WindField::nearest(Timestamp t, double lat, double lon) const {
    if (samples_.empty()) {
        throw ValidationError("wind field is empty");
    }
    const Sample* best = nullptr;
    Timestamp best_dt = std::numeric_limits<Timestamp>::max();
    double best_d2 = std::numeric_limits<double>::infinity();
    for (const auto& s : samples_) {
        const Timestamp dt = s.t > t ? s.t - t : t - s.t;
        const double d2 = (s.lat - lat) * (s.lat - lat) + (s.lon - lon) * (s.lon - lon);
        if (dt < best_dt || (dt == best_dt && d2 < best_d2)) {
            best = &s;
            best_dt = dt;
            best_d2 = d2;
        }
    }
    return best->wind;
}

std::string to_ais_csv(std::span<const AISRecord> records) {
    std::string out = "mmsi,timestamp,lat,lon,speed_kt,heading_deg\n";
    for (const auto& r : records) {
        out += io::format_int(r.mmsi) + ',' + io::format_int(r.timestamp) + ',' + io::format_double(r.lat) + ',' +
               io::format_double(r.lon) + ',' + io::format_double(r.speed_kt) + ',' +
               io::format_double(r.heading_deg) + '\n';
    }
    return out;
}

std::vector<AISRecord> parse_ais_csv(std::string_view text) {
    const auto table = io::parse_csv(text, "AIS csv");
    table.require_header({"mmsi", "timestamp", "lat", "lon", "speed_kt", "heading_deg"}, "AIS csv");
    std::vector<AISRecord> out;
    out.reserve(table.rows.size());
    for (const auto& row : table.rows) {
        AISRecord r;
        r.mmsi = io::parse_int(row[0], "mmsi");
        r.timestamp = io::parse_int(row[1], "timestamp");
        r.lat = io::parse_double(row[2], "lat");
        r.lon = io::parse_double(row[3], "lon");
        r.speed_kt = io::parse_double(row[4], "speed_kt");
        r.heading_deg = io::parse_double(row[5], "heading_deg");
        if (!(r.speed_kt >= 0.0)) {
            throw ValidationError("AIS csv: negative speed for mmsi " + std::to_string(r.mmsi));
        }
        out.push_back(r);
    }
    return out;
}

std::string to_registry_csv(const std::map<Mmsi, double>& lengths) {
    std::string out = "mmsi,length_m\n";
    for (const auto& [mmsi, len] : lengths) {
        out += io::format_int(mmsi) + ',' + io::format_double(len) + '\n';
    }
    return out;
}

std::map<Mmsi, double> parse_registry_csv(std::string_view text) {
    const auto table = io::parse_csv(text, "ship registry csv");
    table.require_header({"mmsi", "length_m"}, "ship registry csv");
    std::map<Mmsi, double> out;
    for (const auto& row : table.rows) {
        const auto mmsi = io::parse_int(row[0], "mmsi");
        const double len = io::parse_double(row[1], "length_m");
        if (!(len > 0.0)) {
            throw ValidationError("ship registry csv: non-positive length for mmsi " + std::to_string(mmsi));
        }
        out[mmsi] = len;
    }
    return out;
}

std::string to_wind_csv(const WindField& field) {
    std::string out = "timestamp,lat,lon,u,v\n";
    for (const auto& s : field.samples()) {
        out += io::format_int(s.t) + ',' + io::format_double(s.lat) + ',' + io::format_double(s.lon) + ',' +
               io::format_double(s.wind.u) + ',' + io::format_double(s.wind.v) + '\n';
    }
    return out;
}

WindField parse_wind_csv(std::string_view text) {
    const auto table = io::parse_csv(text, "wind csv");
    table.require_header({"timestamp", "lat", "lon", "u", "v"}, "wind csv");
    std::vector<WindField::Sample> samples;
    samples.reserve(table.rows.size());
    for (const auto& row : table.rows) {
        WindField::Sample s;
        s.t = io::parse_int(row[0], "timestamp");
        s.lat = io::parse_double(row[1], "lat");
        s.lon = io::parse_double(row[2], "lon");
        s.wind.u = io::parse_double(row[3], "u");
        s.wind.v = io::parse_double(row[4], "v");
        if (!std::isfinite(s.wind.u) || !std::isfinite(s.wind.v)) {
            throw ValidationError("wind csv: non-finite wind component");
        }
        samples.push_back(s);
    }
    return WindField(std::move(samples));
}

std::string iso_date(Timestamp t) {
    using namespace std::chrono;
    const sys_seconds tp{seconds{t}};
    const year_month_day ymd{floor<days>(tp)};
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
    return buf;
}

}  // namespace plumeseg
