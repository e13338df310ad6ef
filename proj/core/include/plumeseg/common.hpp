#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>

namespace plumeseg {

/// Bad input data or arguments: a contract the caller can fix.
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// File could not be opened, read, or written.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Equirectangular approximation used throughout.
inline constexpr double kMetersPerDegreeLat = 111320.0;
inline constexpr double kKnotInMs = 1852.0 / 3600.0;

inline constexpr double deg2rad(double deg) { return deg * std::numbers::pi / 180.0; }
inline constexpr double rad2deg(double rad) { return rad * 180.0 / std::numbers::pi; }

using Mmsi = std::int64_t;
using Timestamp = std::int64_t;  // UTC seconds

struct GeoPoint {
    double lat = 0.0;
    double lon = 0.0;
    friend bool operator==(const GeoPoint&, const GeoPoint&) = default;
};

/// Offset of `p` from `origin` in local meters (x east, y north).
struct LocalXY {
    double x = 0.0;
    double y = 0.0;
};

inline LocalXY to_local(const GeoPoint& origin, const GeoPoint& p) {
    const double coslat = std::cos(deg2rad(origin.lat));
    return {(p.lon - origin.lon) * kMetersPerDegreeLat * coslat,
            (p.lat - origin.lat) * kMetersPerDegreeLat};
}

}  // namespace plumeseg
