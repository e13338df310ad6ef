#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "plumeseg/dataset.hpp"
#include "plumeseg/eval.hpp"
#include "plumeseg/grid.hpp"
#include "plumeseg/pipeline.hpp"
#include "plumeseg/tracks.hpp"

namespace plumeseg {

/// A ship pinned by the caller instead of drawn at random.
struct ShipPlacement {
    Mmsi mmsi = 0;
    GeoPoint position;  // at overpass
    double heading_deg = 0.0;
    double speed_kt = 15.0;
    double length_m = 200.0;
};

struct BackgroundParams {
    double noise_std = 1.0e-6;
    double correlation_length_cells = 0.0;  // Gaussian kernel sigma; 0 = white noise
    double level = 0.0;                     // added before the nonnegativity offset
};

struct PlumeParams {
    double emission_scale = 6.0e-5;  // kappa: plume mass per unit E_s over the window
    double puff_sigma_m = 3000.0;
    double decay_halflife_s = 7200.0;
};

struct SceneConfig {
    GridSpec grid{30.0, 10.0, kDefaultCellSize, 60, 60};
    Timestamp t_overpass = 1622550600;  // 2021-06-01T12:30:00Z
    int n_ships = 3;
    /// Fixed scene wind, or a speed drawn from wind_speed_range with a uniform direction.
    std::optional<WindVector> wind;
    std::pair<double, double> wind_speed_range{13.0, 17.0};
    BackgroundParams background;
    PlumeParams plume;
    double mask_fraction = 1.0;  // tau
    double mask_floor = 0.0;     // absolute mask threshold, used when it exceeds tau * noise_std
    std::pair<double, double> speed_range_kt{14.5, 25.0};
    std::pair<double, double> length_range_m{50.0, 400.0};
    /// Random ships keep plume-image centers at least min_separation_deg apart, and
    /// every ship after the first lies within max_neighbor_deg of an earlier one.
    double min_separation_deg = 0.5;
    double max_neighbor_deg = 0.8;
    double edge_margin_deg = 0.45;  // plume-image centers stay this far inside the grid
    /// Random ship courses stay within this angle of the downwind direction.
    double max_course_wind_angle_deg = 60.0;
    double wind_spacing_deg = 0.25;
    std::vector<ShipPlacement> ships;  // overrides random ships when non-empty
    TrackParams track;
    std::uint64_t seed = 0;

    void validate() const;
};

struct SyntheticShip {
    ShipInfo info;
    double heading_deg = 0.0;
    double speed_kt = 0.0;
    Track track;  // oldest first, overpass last
    std::vector<AISRecord> ais;
    double e_s = 0.0;
    double true_emission = 0.0;  // kappa * E_s
    std::vector<double> plume;   // own contribution, scene raster layout
    std::vector<unsigned char> mask;
};

struct Scene {
    SceneConfig config;
    WindVector wind;
    GridImage no2;
    std::vector<double> background;
    std::vector<SyntheticShip> ships;
};

/// Background noise, ships on straight tracks, advected Gaussian puffs, and
/// per-ship ground-truth masks. Deterministic for a fixed seed.
Scene generate_scene(const SceneConfig& config);

/// Plume mass deposited on the grid by one ship, recomputed from puff ages:
/// sum of kappa * E_s * step / window * 2^(-age / halflife).
double expected_plume_mass(const SceneConfig& config, double e_s);

/// Mass of a per-ship plume raster: sum of value * cell area.
double raster_mass(const GridSpec& spec, const std::vector<double>& values);

/// Cell area in m^2 at the cell's center latitude.
double cell_area_m2(const GridSpec& spec, int row);

struct SceneFiles {
    std::string grid_csv;
    std::string ais_csv;
    std::string wind_csv;
    std::string registry_csv;
    std::string label_csv;
};

SceneInputs to_scene_inputs(const Scene& scene);

/// Positive labels: ground-truth mask cells inside each assembled ship image's sector.
LabelTable scene_labels(const Scene& scene, const PipelineParams& params = {});

/// Lossless serialization into the pipeline's external formats.
SceneFiles scene_to_inputs(const Scene& scene, const PipelineParams& params = {});

/// E_s per group_id for every ship of the scene.
ProxyTable scene_proxies(const Scene& scene);

struct CorpusConfig {
    SceneConfig scene;
    int n_scenes = 80;
    int min_ships = 2;  // ship counts cycle through [min_ships, max_ships]
    int max_ships = 3;
};

/// Scene i uses seed scene.seed + i, an overpass shifted by i days, and
/// min_ships + i % (max_ships - min_ships + 1) ships.
std::vector<SceneConfig> corpus_configs(const CorpusConfig& corpus);

}  // namespace plumeseg
