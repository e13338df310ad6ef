#include "plumeseg/pipeline.hpp"

#include <algorithm>

#include "plumeseg/enhance.hpp"

namespace plumeseg {

GeoPoint track_center(const WindShiftedTrack& shifted) {
    GeoPoint c;
    for (const auto& p : shifted.points) {
        c.lat += p.lat;
        c.lon += p.lon;
    }
    const double n = static_cast<double>(shifted.points.size());
    c.lat /= n;
    c.lon /= n;
    return c;
}

std::vector<ShipCandidate> prepare_candidates(const SceneInputs& scene, const PipelineParams& params,
                                              PreparationReport* report) {
    PreparationReport rep;
    std::vector<ShipCandidate> out;
    for (const auto& [mmsi, records] : group_by_ship(scene.ais)) {
        ++rep.ships_seen;
        auto len = scene.lengths.find(mmsi);
        if (len == scene.lengths.end()) {
            ++rep.no_length;
            continue;
        }
        Track track;
        try {
            track = interpolate_track(records, scene.t_overpass, params.track);
        } catch (const ValidationError&) {
            ++rep.no_coverage;
            continue;
        }
        const auto origin = track.points.back();
        const auto wind = scene.wind.nearest(scene.t_overpass, origin.lat, origin.lon);
        ShipCandidate cand;
        cand.info = {mmsi, len->second, speed_at(records, scene.t_overpass) * kKnotInMs};
        cand.image_center = track_center(wind_shift(track, wind, scene.t_overpass));
        cand.track = std::move(track);
        out.push_back(std::move(cand));
    }
    if (report) {
        *report = rep;
    }
    return out;
}

std::vector<ShipImage> build_ship_images(const SceneInputs& scene, const PipelineParams& params,
                                         PreparationReport* report) {
    PreparationReport rep;
    const auto candidates = prepare_candidates(scene, params, &rep);
    const auto selected = select_ships(candidates, params.min_speed_kt, params.dedup_radius_deg);
    rep.deselected = candidates.size() - selected.size();

    std::vector<ShipImage> images;
    for (const auto& cand : selected) {
        const auto origin = cand.track.points.back();
        ShipImage img;
        img.group_id = make_group_id(cand.info.mmsi, scene.t_overpass);
        img.ship = cand.info;
        img.wind = scene.wind.nearest(scene.t_overpass, origin.lat, origin.lon);
        try {
            img.window = crop_window(scene.grid.spec, cand.image_center.lat, cand.image_center.lon,
                                     params.half_extent_deg);
        } catch (const ValidationError&) {
            ++rep.off_grid;
            continue;
        }
        img.no2 = extract(scene.grid, img.window);
        try {
            img.sector = make_sector(cand.track, img.wind, scene.t_overpass, params.sector);
            img.moran = moran_enhance(img.no2);
            img.moran_high = moran_on_high(img.no2);
        } catch (const ValidationError&) {
            ++rep.degenerate;
            continue;
        }
        const auto pixels = pixels_in_sector(img.sector, img.no2);
        if (pixels.empty()) {
            ++rep.empty_sector;
            continue;
        }
        img.pixels = normalize(img.sector, pixels, img.no2, params.normalize);
        images.push_back(std::move(img));
    }
    std::stable_sort(images.begin(), images.end(),
                     [](const ShipImage& a, const ShipImage& b) { return a.group_id < b.group_id; });
    if (report) {
        *report = rep;
    }
    return images;
}

}  // namespace plumeseg
