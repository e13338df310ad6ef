#include "plumeseg/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "plumeseg/sector.hpp"

namespace plumeseg {

namespace {

double unit_uniform(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double uniform_in(std::mt19937_64& rng, std::pair<double, double> range) {
    return range.first + (range.second - range.first) * unit_uniform(rng);
}

bool inside(const GridSpec& spec, double lat, double lon) {
    return spec.locate(lat, lon).has_value();
}

// Straight track ending at `p0` at overpass, plus AIS records at every step.
void lay_track(SyntheticShip& ship, const GeoPoint& p0, const SceneConfig& cfg) {
    const double speed_ms = ship.speed_kt * kKnotInMs;
    const double h = deg2rad(ship.heading_deg);
    const double ve = speed_ms * std::sin(h);
    const double vn = speed_ms * std::cos(h);
    const double coslat = std::cos(deg2rad(p0.lat));
    const auto steps = cfg.track.window_s / cfg.track.step_s;
    ship.track = Track{ship.info.mmsi, {}};
    ship.ais.clear();
    for (auto k = steps; k >= 0; --k) {
        const Timestamp t = cfg.t_overpass - k * cfg.track.step_s;
        const double age = static_cast<double>(k * cfg.track.step_s);
        const double lat = p0.lat - vn * age / kMetersPerDegreeLat;
        const double lon = p0.lon - ve * age / (kMetersPerDegreeLat * coslat);
        ship.track.points.push_back({t, lat, lon});
        ship.ais.push_back({ship.info.mmsi, t, lat, lon, ship.speed_kt, ship.heading_deg});
    }
}

bool track_inside(const Track& track, const WindVector& wind, const SceneConfig& cfg) {
    for (const auto& p : track.points) {
        if (!inside(cfg.grid, p.lat, p.lon)) {
            return false;
        }
    }
    for (const auto& p : wind_shift(track, wind, cfg.t_overpass).points) {
        if (!inside(cfg.grid, p.lat, p.lon)) {
            return false;
        }
    }
    return true;
}

double degree_distance(const GeoPoint& a, const GeoPoint& b) {
    return std::hypot(a.lat - b.lat, a.lon - b.lon);
}

std::vector<double> background_field(const SceneConfig& cfg, std::mt19937_64& rng) {
    const auto& bg = cfg.background;
    const int rows = cfg.grid.n_rows;
    const int cols = cfg.grid.n_cols;
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> out(cfg.grid.size(), 0.0);
    if (bg.correlation_length_cells <= 0.0) {
        for (auto& v : out) {
            v = normal(rng);
        }
    } else {
        const double s = bg.correlation_length_cells;
        const int radius = static_cast<int>(std::ceil(4.0 * s));
        std::vector<double> w(static_cast<std::size_t>(2 * radius + 1));
        double wsum = 0.0;
        for (int k = -radius; k <= radius; ++k) {
            w[static_cast<std::size_t>(k + radius)] = std::exp(-0.5 * k * k / (s * s));
            wsum += w[static_cast<std::size_t>(k + radius)];
        }
        double w2 = 0.0;
        for (auto& x : w) {
            x /= wsum;
            w2 += x * x;
        }
        // Padded noise so the smoothed field has no edge attenuation.
        const int pr = rows + 2 * radius;
        const int pc = cols + 2 * radius;
        std::vector<double> noise(static_cast<std::size_t>(pr) * static_cast<std::size_t>(pc));
        for (auto& v : noise) {
            v = normal(rng);
        }
        // 2-D variance of the separable smoother is w2^2, so dividing by w2 restores unit variance.
        std::vector<double> tmp(static_cast<std::size_t>(pr) * static_cast<std::size_t>(cols), 0.0);
        for (int r = 0; r < pr; ++r) {
            for (int c = 0; c < cols; ++c) {
                double acc = 0.0;
                for (int k = 0; k <= 2 * radius; ++k) {
                    acc += w[static_cast<std::size_t>(k)] *
                           noise[static_cast<std::size_t>(r) * static_cast<std::size_t>(pc) +
                                 static_cast<std::size_t>(c + k)];
                }
                tmp[static_cast<std::size_t>(r) * static_cast<std::size_t>(cols) + static_cast<std::size_t>(c)] = acc;
            }
        }
        for (int r = 0; r < rows; ++r) {
            for (int c = 0; c < cols; ++c) {
                double acc = 0.0;
                for (int k = 0; k <= 2 * radius; ++k) {
                    acc += w[static_cast<std::size_t>(k)] *
                           tmp[static_cast<std::size_t>(r + k) * static_cast<std::size_t>(cols) +
                               static_cast<std::size_t>(c)];
                }
                out[static_cast<std::size_t>(r) * static_cast<std::size_t>(cols) + static_cast<std::size_t>(c)] =
                    acc / w2;
            }
        }
    }
    double lo = 0.0;
    for (auto& v : out) {
        v = bg.level + bg.noise_std * v;
        lo = std::min(lo, v);
    }
    if (lo < 0.0) {
        for (auto& v : out) {
            v -= lo;
        }
    }
    return out;
}

// Adds one Gaussian puff of `mass` centered at `center` to `field` (mass per m^2).
void deposit(const GridSpec& spec, const GeoPoint& center, double mass, double sigma_m, std::vector<double>& field) {
    const double reach = 8.0 * sigma_m;
    const double m_lon = kMetersPerDegreeLat * std::cos(deg2rad(center.lat));
    const int r0 = std::max(0, static_cast<int>(std::floor((center.lat - reach / kMetersPerDegreeLat - spec.lat_min) /
                                                           spec.cell_size)));
    const int r1 = std::min(spec.n_rows - 1,
                            static_cast<int>(std::floor((center.lat + reach / kMetersPerDegreeLat - spec.lat_min) /
                                                        spec.cell_size)));
    const int c0 = std::max(0, static_cast<int>(std::floor((center.lon - reach / m_lon - spec.lon_min) /
                                                           spec.cell_size)));
    const int c1 = std::min(spec.n_cols - 1, static_cast<int>(std::floor((center.lon + reach / m_lon - spec.lon_min) /
                                                                         spec.cell_size)));
    const double k = 1.0 / (std::numbers::sqrt2 * sigma_m);
    std::vector<double> fx;
    for (int c = c0; c <= c1; ++c) {
        const double x0 = (spec.lon_min + c * spec.cell_size - center.lon) * m_lon;
        const double x1 = (spec.lon_min + (c + 1) * spec.cell_size - center.lon) * m_lon;
        fx.push_back(0.5 * (std::erf(x1 * k) - std::erf(x0 * k)));
    }
    for (int r = r0; r <= r1; ++r) {
        const double y0 = (spec.lat_min + r * spec.cell_size - center.lat) * kMetersPerDegreeLat;
        const double y1 = (spec.lat_min + (r + 1) * spec.cell_size - center.lat) * kMetersPerDegreeLat;
        const double fy = 0.5 * (std::erf(y1 * k) - std::erf(y0 * k));
        const double per_area = mass * fy / cell_area_m2(spec, r);
        for (int c = c0; c <= c1; ++c) {
            field[static_cast<std::size_t>(r) * static_cast<std::size_t>(spec.n_cols) + static_cast<std::size_t>(c)] +=
                per_area * fx[static_cast<std::size_t>(c - c0)];
        }
    }
}

Mmsi draw_mmsi(std::mt19937_64& rng, const std::vector<SyntheticShip>& taken) {
    for (;;) {
        const auto m = static_cast<Mmsi>(201000000 + rng() % 575000000);
        const bool dup =
            std::any_of(taken.begin(), taken.end(), [&](const SyntheticShip& s) { return s.info.mmsi == m; });
        if (!dup) {
            return m;
        }
    }
}

}  // namespace

void SceneConfig::validate() const {
    grid.validate();
    if (!(background.noise_std >= 0.0)) {
        throw ValidationError("synth: noise_std must be >= 0");
    }
    if (!(background.correlation_length_cells >= 0.0)) {
        throw ValidationError("synth: correlation_length_cells must be >= 0");
    }
    if (!(plume.puff_sigma_m > 0.0)) {
        throw ValidationError("synth: puff_sigma_m must be > 0");
    }
    if (!(plume.decay_halflife_s > 0.0)) {
        throw ValidationError("synth: decay_halflife_s must be > 0");
    }
    if (!(plume.emission_scale >= 0.0)) {
        throw ValidationError("synth: emission_scale must be >= 0");
    }
    if (!(mask_fraction > 0.0 && mask_fraction <= 1.0)) {
        throw ValidationError("synth: mask_fraction must lie in (0, 1]");
    }
    if (!(mask_floor >= 0.0)) {
        throw ValidationError("synth: mask_floor must be >= 0");
    }
    if (ships.empty() && n_ships < 1) {
        throw ValidationError("synth: n_ships must be >= 1");
    }
    if (!(speed_range_kt.first > 0.0 && speed_range_kt.first <= speed_range_kt.second)) {
        throw ValidationError("synth: invalid speed range");
    }
    if (!(length_range_m.first > 0.0 && length_range_m.first <= length_range_m.second)) {
        throw ValidationError("synth: invalid length range");
    }
    if (!(wind_speed_range.first >= 0.0 && wind_speed_range.first <= wind_speed_range.second)) {
        throw ValidationError("synth: invalid wind speed range");
    }
    if (!(min_separation_deg <= max_neighbor_deg)) {
        throw ValidationError("synth: min_separation_deg must not exceed max_neighbor_deg");
    }
    if (!(max_course_wind_angle_deg >= 0.0 && max_course_wind_angle_deg <= 180.0)) {
        throw ValidationError("synth: max_course_wind_angle_deg must lie in [0, 180]");
    }
    if (!(wind_spacing_deg > 0.0)) {
        throw ValidationError("synth: wind_spacing_deg must be > 0");
    }
    if (track.step_s <= 0 || track.window_s < track.step_s) {
        throw ValidationError("synth: invalid track window");
    }
}

double cell_area_m2(const GridSpec& spec, int row) {
    const double side = spec.cell_size * kMetersPerDegreeLat;
    return side * side * std::cos(deg2rad(spec.lat_min + (row + 0.5) * spec.cell_size));
}

double raster_mass(const GridSpec& spec, const std::vector<double>& values) {
    double m = 0.0;
    for (int r = 0; r < spec.n_rows; ++r) {
        const double area = cell_area_m2(spec, r);
        for (int c = 0; c < spec.n_cols; ++c) {
            m += values[static_cast<std::size_t>(r) * static_cast<std::size_t>(spec.n_cols) +
                        static_cast<std::size_t>(c)] *
                 area;
        }
    }
    return m;
}

double expected_plume_mass(const SceneConfig& config, double e_s) {
    const double puff = config.plume.emission_scale * e_s * static_cast<double>(config.track.step_s) /
                        static_cast<double>(config.track.window_s);
    double m = 0.0;
    for (Timestamp age = 0; age <= config.track.window_s; age += config.track.step_s) {
        m += puff * std::exp2(-static_cast<double>(age) / config.plume.decay_halflife_s);
    }
    return m;
}

Scene generate_scene(const SceneConfig& config) {
    config.validate();
    std::mt19937_64 rng(config.seed);
    Scene scene;
    scene.config = config;
    if (config.wind) {
        scene.wind = *config.wind;
    } else {
        const double speed = uniform_in(rng, config.wind_speed_range);
        const double dir = 2.0 * std::numbers::pi * unit_uniform(rng);
        scene.wind = {speed * std::cos(dir), speed * std::sin(dir)};
    }
    const auto& g = config.grid;

    if (!config.ships.empty()) {
        for (const auto& p : config.ships) {
            SyntheticShip ship;
            ship.info = {p.mmsi, p.length_m, p.speed_kt * kKnotInMs};
            ship.heading_deg = p.heading_deg;
            ship.speed_kt = p.speed_kt;
            lay_track(ship, p.position, config);
            if (!track_inside(ship.track, scene.wind, config)) {
                throw ValidationError("synth: ship " + std::to_string(p.mmsi) + " placed outside grid");
            }
            scene.ships.push_back(std::move(ship));
        }
    } else {
        std::vector<GeoPoint> centers;
        // Mean age of the track points; the plume-image center sits at p0 + (wind - velocity) * mean_age.
        const double mean_age = 0.5 * static_cast<double>(config.track.window_s);
        for (int s = 0; s < config.n_ships; ++s) {
            bool placed = false;
            for (int attempt = 0; attempt < 10000 && !placed; ++attempt) {
                SyntheticShip ship;
                ship.speed_kt = uniform_in(rng, config.speed_range_kt);
                // Downwind bearing (clockwise from north) plus a bounded course offset.
                const double downwind = rad2deg(std::atan2(scene.wind.u, scene.wind.v));
                const double offset = config.max_course_wind_angle_deg * (2.0 * unit_uniform(rng) - 1.0);
                ship.heading_deg = std::fmod(downwind + offset + 720.0, 360.0);
                ship.info.length_m = uniform_in(rng, config.length_range_m);
                ship.info.speed_ms = ship.speed_kt * kKnotInMs;
                GeoPoint target;
                if (centers.empty()) {
                    target = {g.lat_min + config.edge_margin_deg +
                                  (g.lat_max() - g.lat_min - 2.0 * config.edge_margin_deg) * unit_uniform(rng),
                              g.lon_min + config.edge_margin_deg +
                                  (g.lon_max() - g.lon_min - 2.0 * config.edge_margin_deg) * unit_uniform(rng)};
                } else {
                    const auto& anchor = centers[static_cast<std::size_t>(rng() % centers.size())];
                    const double d = uniform_in(rng, {config.min_separation_deg, config.max_neighbor_deg});
                    const double th = 2.0 * std::numbers::pi * unit_uniform(rng);
                    target = {anchor.lat + d * std::sin(th), anchor.lon + d * std::cos(th)};
                }
                const double h = deg2rad(ship.heading_deg);
                const double dx = (scene.wind.u - ship.info.speed_ms * std::sin(h)) * mean_age;
                const double dy = (scene.wind.v - ship.info.speed_ms * std::cos(h)) * mean_age;
                const GeoPoint p0{target.lat - dy / kMetersPerDegreeLat,
                                  target.lon - dx / (kMetersPerDegreeLat * std::cos(deg2rad(target.lat)))};
                if (!inside(g, p0.lat, p0.lon)) {
                    continue;
                }
                lay_track(ship, p0, config);
                const GeoPoint center = track_center(wind_shift(ship.track, scene.wind, config.t_overpass));
                const bool in_margin = center.lat >= g.lat_min + config.edge_margin_deg &&
                                       center.lat <= g.lat_max() - config.edge_margin_deg &&
                                       center.lon >= g.lon_min + config.edge_margin_deg &&
                                       center.lon <= g.lon_max() - config.edge_margin_deg;
                if (!in_margin || !track_inside(ship.track, scene.wind, config)) {
                    continue;
                }
                const bool separated = std::all_of(centers.begin(), centers.end(), [&](const GeoPoint& c) {
                    return degree_distance(c, center) >= config.min_separation_deg;
                });
                if (!separated) {
                    continue;
                }
                ship.info.mmsi = draw_mmsi(rng, scene.ships);
                ship.track.mmsi = ship.info.mmsi;
                for (auto& r : ship.ais) {
                    r.mmsi = ship.info.mmsi;
                }
                centers.push_back(center);
                scene.ships.push_back(std::move(ship));
                placed = true;
            }
            if (!placed) {
                throw ValidationError("synth: could not place ship " + std::to_string(s + 1) + " inside grid");
            }
        }
    }

    scene.background = background_field(config, rng);
    scene.no2 = GridImage(g);
    for (std::size_t i = 0; i < g.size(); ++i) {
        scene.no2.values[i] = scene.background[i];
        scene.no2.valid[i] = 1;
    }
    const double threshold = std::max(config.mask_fraction * config.background.noise_std, config.mask_floor);
    const double puff_fraction =
        static_cast<double>(config.track.step_s) / static_cast<double>(config.track.window_s);
    for (auto& ship : scene.ships) {
        ship.e_s = emission_proxy(ship.info).e_s;
        ship.true_emission = config.plume.emission_scale * ship.e_s;
        ship.plume.assign(g.size(), 0.0);
        const auto shifted = wind_shift(ship.track, scene.wind, config.t_overpass);
        for (const auto& p : shifted.points) {
            const double age = static_cast<double>(config.t_overpass - p.t);
            const double mass = ship.true_emission * puff_fraction * std::exp2(-age / config.plume.decay_halflife_s);
            deposit(g, p.position(), mass, config.plume.puff_sigma_m, ship.plume);
        }
        ship.mask.assign(g.size(), 0);
        for (std::size_t i = 0; i < g.size(); ++i) {
            scene.no2.values[i] += ship.plume[i];
            ship.mask[i] = ship.plume[i] > threshold ? 1 : 0;
        }
    }
    return scene;
}

SceneInputs to_scene_inputs(const Scene& scene) {
    SceneInputs in;
    in.grid = scene.no2;
    in.t_overpass = scene.config.t_overpass;
    for (const auto& s : scene.ships) {
        in.ais.insert(in.ais.end(), s.ais.begin(), s.ais.end());
        in.lengths[s.info.mmsi] = s.info.length_m;
    }
    const auto& g = scene.config.grid;
    const double step = scene.config.wind_spacing_deg;
    const int n_lat = static_cast<int>(std::floor((g.lat_max() - g.lat_min) / step)) + 1;
    const int n_lon = static_cast<int>(std::floor((g.lon_max() - g.lon_min) / step)) + 1;
    std::vector<WindField::Sample> samples;
    for (int i = 0; i < n_lat; ++i) {
        for (int j = 0; j < n_lon; ++j) {
            samples.push_back({scene.config.t_overpass, g.lat_min + i * step, g.lon_min + j * step, scene.wind});
        }
    }
    in.wind = WindField(std::move(samples));
    return in;
}

LabelTable scene_labels(const Scene& scene, const PipelineParams& params) {
    const auto images = build_ship_images(to_scene_inputs(scene), params);
    LabelTable labels;
    for (const auto& img : images) {
        const auto it = std::find_if(scene.ships.begin(), scene.ships.end(),
                                     [&](const SyntheticShip& s) { return s.info.mmsi == img.ship.mmsi; });
        if (it == scene.ships.end()) {
            continue;
        }
        for (const auto& p : img.pixels) {
            const int row = img.window.row0 + p.row;
            const int col = img.window.col0 + p.col;
            if (it->mask[scene.no2.index(row, col)]) {
                labels[{img.group_id, row, col}] = 1;
            }
        }
    }
    return labels;
}

SceneFiles scene_to_inputs(const Scene& scene, const PipelineParams& params) {
    const auto in = to_scene_inputs(scene);
    SceneFiles files;
    files.grid_csv = to_grid_csv(in.grid);
    files.ais_csv = to_ais_csv(in.ais);
    files.wind_csv = to_wind_csv(in.wind);
    files.registry_csv = to_registry_csv(in.lengths);
    files.label_csv = to_label_csv(scene_labels(scene, params));
    return files;
}

ProxyTable scene_proxies(const Scene& scene) {
    ProxyTable out;
    for (const auto& s : scene.ships) {
        out[make_group_id(s.info.mmsi, scene.config.t_overpass)] = s.e_s;
    }
    return out;
}

std::vector<SceneConfig> corpus_configs(const CorpusConfig& corpus) {
    if (corpus.n_scenes < 1) {
        throw ValidationError("synth: n_scenes must be >= 1");
    }
    if (corpus.min_ships < 1 || corpus.max_ships < corpus.min_ships) {
        throw ValidationError("synth: invalid ship count range");
    }
    const auto& base = corpus.scene;
    std::vector<SceneConfig> out;
    for (int i = 0; i < corpus.n_scenes; ++i) {
        SceneConfig c = base;
        c.seed = base.seed + static_cast<std::uint64_t>(i);
        c.t_overpass = base.t_overpass + static_cast<Timestamp>(i) * 86400;
        c.n_ships = corpus.min_ships + i % (corpus.max_ships - corpus.min_ships + 1);
        out.push_back(std::move(c));
    }
    return out;
}

}  // namespace plumeseg
