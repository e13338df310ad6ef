#pragma once

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "plumeseg/common.hpp"

namespace plumeseg {

struct AISRecord {
    Mmsi mmsi = 0;
    Timestamp timestamp = 0;
    double lat = 0.0;
    double lon = 0.0;
    double speed_kt = 0.0;
    double heading_deg = 0.0;  // clockwise from north, [0, 360)
};

struct ShipInfo {
    Mmsi mmsi = 0;
    double length_m = 0.0;
    double speed_ms = 0.0;  // at overpass
};

struct TrackPoint {
    Timestamp t = 0;
    double lat = 0.0;
    double lon = 0.0;

    GeoPoint position() const { return {lat, lon}; }
    friend bool operator==(const TrackPoint&, const TrackPoint&) = default;
};

/// Ship positions, oldest first; the last point is the overpass position.
struct Track {
    Mmsi mmsi = 0;
    std::vector<TrackPoint> points;
};

/// Track advected by the wind to where its emissions sit at overpass time.
struct WindShiftedTrack {
    Mmsi mmsi = 0;
    std::vector<TrackPoint> points;
};

/// Eastward (u) and northward (v) wind, m/s.
struct WindVector {
    double u = 0.0;
    double v = 0.0;

    double speed() const { return std::hypot(u, v); }
    /// Mathematical direction the wind blows toward, radians (atan2(v, u)).
    double direction() const { return std::atan2(v, u); }
};

struct TrackParams {
    Timestamp window_s = 7200;
    Timestamp step_s = 300;
};

/// Resamples one ship's AIS records onto {t_overpass - k*step_s} inside the window.
/// Linear interpolation between records; dead-reckoning from the nearest record for at
/// most one step past coverage; older points beyond that are dropped. Throws
/// "insufficient AIS coverage" with fewer than two records or no overpass position.
Track interpolate_track(std::span<const AISRecord> records, Timestamp t_overpass, const TrackParams& params = {});

/// Speed over ground (knots) linearly interpolated at `t`, clamped to the record span.
double speed_at(std::span<const AISRecord> records, Timestamp t);

/// Sorted-by-time records per ship with repeated timestamps removed (first kept).
std::map<Mmsi, std::vector<AISRecord>> group_by_ship(std::span<const AISRecord> records);

WindShiftedTrack wind_shift(const Track& track, const WindVector& wind, Timestamp t_overpass);

/// Wind rotated counterclockwise by +dangle and by -dangle, magnitude |wind| + dspeed.
std::pair<WindVector, WindVector> extreme_winds(const WindVector& wind, double dspeed = 5.0, double dangle_deg = 40.0);

/// (left, right) extreme wind-shifted tracks: left uses the +dangle wind.
std::pair<WindShiftedTrack, WindShiftedTrack> extreme_tracks(const Track& track, const WindVector& wind,
                                                             Timestamp t_overpass, double dspeed = 5.0,
                                                             double dangle_deg = 40.0);

/// Gridded wind samples; lookups return the record nearest in time, then in space.
class WindField {
public:
    struct Sample {
        Timestamp t = 0;
        double lat = 0.0;
        double lon = 0.0;
        WindVector wind;
    };

    WindField() = default;
    explicit WindField(std::vector<Sample> samples);

    WindVector nearest(Timestamp t, double lat, double lon) const;
    const std::vector<Sample>& samples() const { return samples_; }
    bool empty() const { return samples_.empty(); }

private:
    std::vector<Sample> samples_;
};

// AIS CSV: mmsi,timestamp,lat,lon,speed_kt,heading_deg
std::string to_ais_csv(std::span<const AISRecord> records);
std::vector<AISRecord> parse_ais_csv(std::string_view text);

// Ship registry CSV: mmsi,length_m
std::string to_registry_csv(const std::map<Mmsi, double>& lengths);
std::map<Mmsi, double> parse_registry_csv(std::string_view text);

// Wind CSV: timestamp,lat,lon,u,v
std::string to_wind_csv(const WindField& field);
WindField parse_wind_csv(std::string_view text);

/// ISO date (YYYY-MM-DD) of a UTC timestamp.
std::string iso_date(Timestamp t);

}  // namespace plumeseg
