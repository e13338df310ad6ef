#pragma once

#include <span>
#include <string>
#include <vector>

#include "plumeseg/common.hpp"
#include "plumeseg/grid.hpp"
#include "plumeseg/tracks.hpp"

namespace plumeseg {

/// Wind uncertainty margins bounding the plausible plume extent.
struct SectorParams {
    double dspeed = 5.0;     // m/s added to the wind speed
    double dangle_deg = 40.0;  // rotation either side of the wind direction
};

/// Per-ship region of interest. The polygon is closed (front() == back()) and
/// starts and ends at the origin, which is the ship position at overpass.
struct ShipSector {
    Mmsi mmsi = 0;
    GeoPoint origin;
    std::vector<GeoPoint> polygon;
    double reference_angle = 0.0;  // degrees, [0, 360), local east-north frame
    double half_angle = 40.0;      // degrees; angular span is reference +- half_angle
};

/// Polygon: origin, left track from newest to oldest, right track from oldest to
/// newest, origin. Throws "degenerate sector" when the vertices enclose no area.
ShipSector build_sector(const Track& ship_track, const WindShiftedTrack& shifted, const WindShiftedTrack& ext_left,
                        const WindShiftedTrack& ext_right, double half_angle_deg);

/// wind_shift + extreme_tracks + build_sector.
ShipSector make_sector(const Track& ship_track, const WindVector& wind, Timestamp t_overpass,
                       const SectorParams& params = {});

/// Signed shoelace area of a closed ring, in squared local meters about `origin`.
double polygon_area_m2(std::span<const GeoPoint> ring, const GeoPoint& origin);

/// Even-odd rule with boundary points (within `tol` degrees) counted as inside.
bool point_in_polygon(std::span<const GeoPoint> ring, const GeoPoint& p, double tol = 1e-12);

struct CellIndex {
    int row = 0;
    int col = 0;
    friend bool operator==(const CellIndex&, const CellIndex&) = default;
    friend auto operator<=>(const CellIndex&, const CellIndex&) = default;
};

/// Valid cells whose centers lie inside or on the sector, row-major.
std::vector<CellIndex> pixels_in_sector(const ShipSector& sector, const GridImage& image);

struct NormalizeParams {
    double target_angle = 320.0;
    int n_levels = 5;
    int n_subsectors = 5;
};

struct NormalizedPixel {
    int row = 0;
    int col = 0;
    double x_m = 0.0;  // rotated local coordinates, meters
    double y_m = 0.0;
    double x_norm = 0.0;
    double y_norm = 0.0;
    double radius_norm = 0.0;
    double angle_in_sector = 0.0;
    int level = 1;
    int sub_sector = 1;
};

/// Core of `normalize` on local offsets from the origin (meters, east/north).
std::vector<NormalizedPixel> normalize_offsets(std::span<const LocalXY> offsets, double reference_angle,
                                               double half_angle, const NormalizeParams& params = {});

/// Rotates the sector pixels so the reference direction points at target_angle,
/// rescales both axes to [0,1], and assigns radial levels and angular sub-sectors.
std::vector<NormalizedPixel> normalize(const ShipSector& sector, std::span<const CellIndex> pixels,
                                       const GridImage& image, const NormalizeParams& params = {});

/// Bin in [1, n] for a value in [0, 1].
int bin_index(double unit_value, int n);

/// FeatureCollection with one Polygon per sector ([lon, lat] coordinates).
std::string to_sectors_geojson(std::span<const ShipSector> sectors);

}  // namespace plumeseg
