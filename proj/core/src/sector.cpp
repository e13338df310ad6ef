#include "plumeseg/sector.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

namespace plumeseg {

namespace {

double wrap_degrees_signed(double deg) {
    double d = std::fmod(deg, 360.0);
    if (d > 180.0) {
        d -= 360.0;
    } else if (d <= -180.0) {
        d += 360.0;
    }
    return d;
}

double wrap_degrees_positive(double deg) {
    double d = std::fmod(deg, 360.0);
    if (d < 0.0) {
        d += 360.0;
    }
    return d >= 360.0 ? 0.0 : d;
}

bool on_segment(const GeoPoint& a, const GeoPoint& b, const GeoPoint& p, double tol) {
    const double dx = b.lon - a.lon;
    const double dy = b.lat - a.lat;
    const double len2 = dx * dx + dy * dy;
    double t = 0.0;
    if (len2 > 0.0) {
        t = std::clamp(((p.lon - a.lon) * dx + (p.lat - a.lat) * dy) / len2, 0.0, 1.0);
    }
    const double ex = a.lon + t * dx - p.lon;
    const double ey = a.lat + t * dy - p.lat;
    return ex * ex + ey * ey <= tol * tol;
}

}  // namespace

ShipSector build_sector(const Track& ship_track, const WindShiftedTrack& shifted, const WindShiftedTrack& ext_left,
                        const WindShiftedTrack& ext_right, double half_angle_deg) {
    const auto n = ship_track.points.size();
    if (n < 2 || shifted.points.size() != n || ext_left.points.size() != n || ext_right.points.size() != n) {
        throw ValidationError("build_sector: tracks must share timestamps");
    }
    for (std::size_t i = 0; i < n; ++i) {
        const auto t = ship_track.points[i].t;
        if (shifted.points[i].t != t || ext_left.points[i].t != t || ext_right.points[i].t != t) {
            throw ValidationError("build_sector: tracks must share timestamps");
        }
    }

    ShipSector sector;
    sector.mmsi = ship_track.mmsi;
    sector.origin = ship_track.points.back().position();
    sector.half_angle = half_angle_deg;

    std::vector<GeoPoint> ring;
    ring.reserve(2 * n + 1);
    ring.push_back(sector.origin);
    for (std::size_t i = n - 1; i-- > 0;) {
        ring.push_back(ext_left.points[i].position());
    }
    for (std::size_t i = 0; i + 1 < n; ++i) {
        ring.push_back(ext_right.points[i].position());
    }
    ring.push_back(sector.origin);
    ring.erase(std::unique(ring.begin(), ring.end()), ring.end());
    sector.polygon = std::move(ring);

    double extent = 0.0;
    for (const auto& v : sector.polygon) {
        const auto xy = to_local(sector.origin, v);
        extent = std::max(extent, std::hypot(xy.x, xy.y));
    }
    const double area = polygon_area_m2(sector.polygon, sector.origin);
    if (sector.polygon.size() < 4 || extent == 0.0 || std::abs(area) <= 1e-9 * extent * extent) {
        throw ValidationError("degenerate sector");
    }

    double mlat = 0.0;
    double mlon = 0.0;
    for (const auto& p : shifted.points) {
        mlat += p.lat;
        mlon += p.lon;
    }
    mlat /= static_cast<double>(n);
    mlon /= static_cast<double>(n);
    const auto c = to_local(sector.origin, {mlat, mlon});
    sector.reference_angle = wrap_degrees_positive(rad2deg(std::atan2(c.y, c.x)));
    return sector;
}

ShipSector make_sector(const Track& ship_track, const WindVector& wind, Timestamp t_overpass,
                       const SectorParams& params) {
    const auto shifted = wind_shift(ship_track, wind, t_overpass);
    const auto [left, right] = extreme_tracks(ship_track, wind, t_overpass, params.dspeed, params.dangle_deg);
    return build_sector(ship_track, shifted, left, right, params.dangle_deg);
}

double polygon_area_m2(std::span<const GeoPoint> ring, const GeoPoint& origin) {
    double twice = 0.0;
    for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
        const auto a = to_local(origin, ring[i]);
        const auto b = to_local(origin, ring[i + 1]);
        twice += a.x * b.y - b.x * a.y;
    }
    return 0.5 * twice;
}

bool point_in_polygon(std::span<const GeoPoint> ring, const GeoPoint& p, double tol) {
    if (ring.size() < 2) {
        return false;
    }
    for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
        if (on_segment(ring[i], ring[i + 1], p, tol)) {
            return true;
        }
    }
    bool inside = false;
    const std::size_t n = ring.front() == ring.back() ? ring.size() - 1 : ring.size();
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
        const auto& a = ring[i];
        const auto& b = ring[j];
        if ((a.lat > p.lat) != (b.lat > p.lat)) {
            const double x = a.lon + (p.lat - a.lat) * (b.lon - a.lon) / (b.lat - a.lat);
            if (p.lon < x) {
                inside = !inside;
            }
        }
    }
    return inside;
}

std::vector<CellIndex> pixels_in_sector(const ShipSector& sector, const GridImage& image) {
    std::vector<CellIndex> out;
    for (int r = 0; r < image.spec.n_rows; ++r) {
        for (int c = 0; c < image.spec.n_cols; ++c) {
            if (image.is_valid(r, c) && point_in_polygon(sector.polygon, image.spec.cell_center(r, c))) {
                out.push_back({r, c});
            }
        }
    }
    return out;
}

int bin_index(double unit_value, int n) {
    const int b = 1 + static_cast<int>(std::floor(unit_value * n));
    return std::clamp(b, 1, n);
}

std::vector<NormalizedPixel> normalize_offsets(std::span<const LocalXY> offsets, double reference_angle,
                                               double half_angle, const NormalizeParams& params) {
    if (offsets.empty()) {
        throw ValidationError("normalize: empty pixel set");
    }
    if (params.n_levels < 1 || params.n_subsectors < 1) {
        throw ValidationError("normalize: level and sub-sector counts must be >= 1");
    }
    const double theta = deg2rad(params.target_angle - reference_angle);
    const double ct = std::cos(theta);
    const double st = std::sin(theta);

    std::vector<NormalizedPixel> out(offsets.size());
    double max_r = 0.0;
    for (std::size_t i = 0; i < offsets.size(); ++i) {
        const auto& o = offsets[i];
        auto& px = out[i];
        px.x_m = ct * o.x - st * o.y;
        px.y_m = st * o.x + ct * o.y;
        const double r = std::hypot(o.x, o.y);
        px.radius_norm = r;
        max_r = std::max(max_r, r);
        if (r == 0.0 || half_angle <= 0.0) {
            px.angle_in_sector = 0.5;
        } else {
            const double delta = wrap_degrees_signed(rad2deg(std::atan2(o.y, o.x)) - reference_angle);
            px.angle_in_sector = std::clamp((delta + half_angle) / (2.0 * half_angle), 0.0, 1.0);
        }
        px.sub_sector = bin_index(px.angle_in_sector, params.n_subsectors);
    }

    if (out.size() == 1) {
        auto& px = out.front();
        px.x_norm = 0.5;
        px.y_norm = 0.5;
        px.radius_norm = 0.0;
        px.level = 1;
        return out;
    }

    const auto [xmin, xmax] = std::minmax_element(out.begin(), out.end(),
                                                  [](const auto& a, const auto& b) { return a.x_m < b.x_m; });
    const auto [ymin, ymax] = std::minmax_element(out.begin(), out.end(),
                                                  [](const auto& a, const auto& b) { return a.y_m < b.y_m; });
    const double x0 = xmin->x_m;
    const double xr = xmax->x_m - x0;
    const double y0 = ymin->y_m;
    const double yr = ymax->y_m - y0;
    for (auto& px : out) {
        px.x_norm = xr > 0.0 ? std::clamp((px.x_m - x0) / xr, 0.0, 1.0) : 0.5;
        px.y_norm = yr > 0.0 ? std::clamp((px.y_m - y0) / yr, 0.0, 1.0) : 0.5;
        px.radius_norm = max_r > 0.0 ? px.radius_norm / max_r : 0.0;
        px.level = bin_index(px.radius_norm, params.n_levels);
    }
    return out;
}

std::vector<NormalizedPixel> normalize(const ShipSector& sector, std::span<const CellIndex> pixels,
                                       const GridImage& image, const NormalizeParams& params) {
    std::vector<LocalXY> offsets;
    offsets.reserve(pixels.size());
    for (const auto& px : pixels) {
        offsets.push_back(to_local(sector.origin, image.spec.cell_center(px.row, px.col)));
    }
    auto out = normalize_offsets(offsets, sector.reference_angle, sector.half_angle, params);
    for (std::size_t i = 0; i < pixels.size(); ++i) {
        out[i].row = pixels[i].row;
        out[i].col = pixels[i].col;
    }
    return out;
}

std::string to_sectors_geojson(std::span<const ShipSector> sectors) {
    nlohmann::ordered_json fc;
    fc["type"] = "FeatureCollection";
    fc["features"] = nlohmann::ordered_json::array();
    for (const auto& s : sectors) {
        nlohmann::ordered_json ring = nlohmann::ordered_json::array();
        for (const auto& v : s.polygon) {
            ring.push_back({v.lon, v.lat});
        }
        nlohmann::ordered_json feature;
        feature["type"] = "Feature";
        feature["properties"] = {{"mmsi", s.mmsi}, {"reference_angle", s.reference_angle}};
        feature["geometry"] = {{"type", "Polygon"}, {"coordinates", nlohmann::ordered_json::array({ring})}};
        fc["features"].push_back(std::move(feature));
    }
    return fc.dump(2) + "\n";
}

}  // namespace plumeseg
