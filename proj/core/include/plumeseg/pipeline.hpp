#pragma once

#include <map>
#include <string>
#include <vector>

#include "plumeseg/dataset.hpp"
#include "plumeseg/grid.hpp"
#include "plumeseg/sector.hpp"
#include "plumeseg/tracks.hpp"

namespace plumeseg {

/// Every tunable of the image-building stages, defaults as published.
struct PipelineParams {
    TrackParams track;
    SectorParams sector;
    NormalizeParams normalize;
    double half_extent_deg = 0.4;
    double min_speed_kt = 14.0;
    double dedup_radius_deg = 0.4;
};

/// One scene's raw inputs as read from the external file formats.
struct SceneInputs {
    GridImage grid;
    std::vector<AISRecord> ais;
    WindField wind;
    std::map<Mmsi, double> lengths;
    Timestamp t_overpass = 0;
};

struct PreparationReport {
    std::size_t ships_seen = 0;
    std::size_t no_coverage = 0;   // AIS could not produce a track
    std::size_t no_length = 0;     // missing from the registry
    std::size_t deselected = 0;    // too slow or duplicate
    std::size_t off_grid = 0;      // plume image center outside the grid
    std::size_t empty_sector = 0;  // no valid pixel inside the sector
    std::size_t degenerate = 0;    // degenerate sector or constant image
};

/// Tracks, wind, and plume-image centers for every ship with enough AIS data.
std::vector<ShipCandidate> prepare_candidates(const SceneInputs& scene, const PipelineParams& params,
                                              PreparationReport* report = nullptr);

/// Full per-ship image stage: selection, crop, sector, enhancement, normalization.
/// Output is sorted by group_id.
std::vector<ShipImage> build_ship_images(const SceneInputs& scene, const PipelineParams& params,
                                         PreparationReport* report = nullptr);

/// Mean position of the wind-shifted track (the plume image center).
GeoPoint track_center(const WindShiftedTrack& shifted);

}  // namespace plumeseg
