#include "cli.hpp"

#include <algorithm>
#include <functional>
#include <memory>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "plumeseg/dataset.hpp"
#include "plumeseg/enhance.hpp"
#include "plumeseg/eval.hpp"
#include "plumeseg/grid.hpp"
#include "plumeseg/io.hpp"
#include "plumeseg/models.hpp"
#include "plumeseg/pipeline.hpp"
#include "plumeseg/sector.hpp"
#include "plumeseg/synth.hpp"
#include "plumeseg/tracks.hpp"

namespace fs = std::filesystem;

namespace plumeseg::cli {

namespace {

constexpr const char* kSceneConfig = "scene.cfg";
constexpr const char* kGridFile = "grid.csv";
constexpr const char* kSamplesFile = "samples.csv";
constexpr const char* kAisFile = "ais.csv";
constexpr const char* kWindFile = "wind.csv";
constexpr const char* kRegistryFile = "registry.csv";
constexpr const char* kLabelFile = "labels.csv";

std::string normalize_key(std::string_view key) {
    std::string k(key);
    std::replace(k.begin(), k.end(), '_', '-');
    return k;
}

std::string scene_name(int i) {
    std::string n = std::to_string(i);
    return "scene_" + std::string(n.size() < 4 ? 4 - n.size() : 0, '0') + n;
}

// ------------------------------------------------------------------ options

struct PipelineOptions {
    double cell_size = kDefaultCellSize;
    double min_speed_kt = 14.0;
    int n_levels = 5;
    int n_subsectors = 5;
    double wind_dspeed = 5.0;
    double wind_dangle = 40.0;
    double half_extent = 0.4;
    double dedup_radius = 0.4;
    std::int64_t track_window = 7200;
    std::int64_t track_step = 300;

    void add(CLI::App& app) {
        app.add_option("--grid-cell-size", cell_size, "Grid cell size, degrees");
        app.add_option("--min-speed-kt", min_speed_kt, "Minimum ship speed at overpass, knots");
        app.add_option("--n-levels", n_levels, "Radial levels of the normalized sector");
        app.add_option("--n-subsectors", n_subsectors, "Angular sub-sectors of the normalized sector");
        app.add_option("--wind-dspeed", wind_dspeed, "Wind speed uncertainty, m/s");
        app.add_option("--wind-dangle", wind_dangle, "Wind direction uncertainty, degrees");
        app.add_option("--half-extent", half_extent, "Half side of the ship plume image, degrees");
        app.add_option("--dedup-radius", dedup_radius, "Plume-image center clustering radius, degrees");
        app.add_option("--track-window", track_window, "Track duration before overpass, seconds");
        app.add_option("--track-step", track_step, "Track resampling step, seconds");
    }

    PipelineParams params() const {
        PipelineParams p;
        p.track = {track_window, track_step};
        p.sector = {wind_dspeed, wind_dangle};
        p.normalize.n_levels = n_levels;
        p.normalize.n_subsectors = n_subsectors;
        p.half_extent_deg = half_extent;
        p.min_speed_kt = min_speed_kt;
        p.dedup_radius_deg = dedup_radius;
        return p;
    }
};

// ------------------------------------------------------------- scene files

struct SceneMeta {
    Timestamp t_overpass = 0;
    GridSpec grid;
};

SceneMeta read_scene_meta(const fs::path& dir) {
    const auto path = dir / kSceneConfig;
    std::map<std::string, std::string> kv;
    for (const auto& [k, v] : parse_config(io::read_file(path), path.string())) {
        kv[normalize_key(k)] = v;
    }
    auto get = [&](const std::string& key) -> const std::string& {
        auto it = kv.find(key);
        if (it == kv.end()) {
            throw ValidationError(path.string() + ": missing key '" + key + "'");
        }
        return it->second;
    };
    SceneMeta m;
    m.t_overpass = io::parse_int(get("t-overpass"), "t_overpass");
    m.grid.lat_min = io::parse_double(get("lat-min"), "lat_min");
    m.grid.lon_min = io::parse_double(get("lon-min"), "lon_min");
    m.grid.cell_size = io::parse_double(get("cell-size"), "cell_size");
    m.grid.n_rows = static_cast<int>(io::parse_int(get("n-rows"), "n_rows"));
    m.grid.n_cols = static_cast<int>(io::parse_int(get("n-cols"), "n_cols"));
    m.grid.validate();
    return m;
}

std::string scene_meta_text(const SceneMeta& m) {
    std::string s;
    s += "t_overpass=" + io::format_int(m.t_overpass) + "\n";
    s += "lat_min=" + io::format_double(m.grid.lat_min) + "\n";
    s += "lon_min=" + io::format_double(m.grid.lon_min) + "\n";
    s += "cell_size=" + io::format_double(m.grid.cell_size) + "\n";
    s += "n_rows=" + io::format_int(m.grid.n_rows) + "\n";
    s += "n_cols=" + io::format_int(m.grid.n_cols) + "\n";
    return s;
}

SceneInputs load_scene(const fs::path& dir) {
    const auto meta = read_scene_meta(dir);
    SceneInputs in;
    in.t_overpass = meta.t_overpass;
    in.grid = parse_grid_csv(io::read_file(dir / kGridFile));
    in.ais = parse_ais_csv(io::read_file(dir / kAisFile));
    in.wind = parse_wind_csv(io::read_file(dir / kWindFile));
    in.lengths = parse_registry_csv(io::read_file(dir / kRegistryFile));
    return in;
}

LabelTable load_labels(const fs::path& dir) {
    const auto path = dir / kLabelFile;
    if (!fs::exists(path)) {
        return {};
    }
    return parse_label_csv(io::read_file(path));
}

LabeledDataset load_dataset(const std::string& path) {
    return parse_dataset_csv(io::read_file(path));
}

void require_file(const std::string& path, const std::string& what) {
    if (path.empty()) {
        throw ValidationError("missing required option --" + what);
    }
    if (!fs::exists(path)) {
        throw IoError("input not found: " + path);
    }
}

// Predictions file: group_id,row,col,score,prediction,label
std::string to_predictions_csv(std::span<const FeatureRow> rows, std::span<const double> scores,
                               std::span<const int> predictions) {
    std::string out = "group_id,row,col,score,prediction,label\n";
    for (std::size_t i = 0; i < rows.size(); ++i) {
        out += rows[i].group_id + ',' + io::format_int(rows[i].row) + ',' + io::format_int(rows[i].col) + ',' +
               io::format_double(scores[i]) + ',' + io::format_int(predictions[i]) + ',' +
               (rows[i].label ? io::format_int(*rows[i].label) : std::string()) + '\n';
    }
    return out;
}

std::map<LabelKey, int> parse_predictions_csv(std::string_view text, std::string_view source) {
    const auto table = io::parse_csv(text, source);
    table.require_header({"group_id", "row", "col", "score", "prediction", "label"}, source);
    std::map<LabelKey, int> out;
    for (const auto& r : table.rows) {
        const auto p = io::parse_int(r[4], "prediction");
        if (p != 0 && p != 1) {
            throw ValidationError(std::string(source) + ": prediction must be 0 or 1");
        }
        out[{r[0], static_cast<int>(io::parse_int(r[1], "row")), static_cast<int>(io::parse_int(r[2], "col"))}] =
            static_cast<int>(p);
    }
    return out;
}

// ------------------------------------------------------------- subcommands

struct SynthOptions {
    std::string out;
    int n_scenes = 1;
    int min_ships = 2;
    int max_ships = 3;
    std::uint64_t seed = 0;
    double lat_min = 30.0;
    double lon_min = 10.0;
    int n_rows = 60;
    int n_cols = 60;
    std::int64_t t_overpass = 1622550600;
    double noise_std = 1.0e-6;
    double correlation_length = 0.0;
    double emission_scale = 6.0e-5;
    double puff_sigma = 3000.0;
    double decay_halflife = 7200.0;
    double wind_speed_min = 13.0;
    double wind_speed_max = 17.0;
    double max_course_wind_angle = 60.0;
    double mask_fraction = 1.0;
    double mask_floor = 0.0;
    PipelineOptions pipe;
};

int cmd_synth(const SynthOptions& o, std::ostream& out) {
    if (o.out.empty()) {
        throw ValidationError("missing required option --out");
    }
    CorpusConfig corpus;
    corpus.n_scenes = o.n_scenes;
    corpus.min_ships = o.min_ships;
    corpus.max_ships = o.max_ships;
    auto& sc = corpus.scene;
    sc.grid = {o.lat_min, o.lon_min, o.pipe.cell_size, o.n_rows, o.n_cols};
    sc.t_overpass = o.t_overpass;
    sc.background.noise_std = o.noise_std;
    sc.background.correlation_length_cells = o.correlation_length;
    sc.plume = {o.emission_scale, o.puff_sigma, o.decay_halflife};
    sc.wind_speed_range = {o.wind_speed_min, o.wind_speed_max};
    sc.max_course_wind_angle_deg = o.max_course_wind_angle;
    sc.mask_fraction = o.mask_fraction;
    sc.mask_floor = o.mask_floor;
    sc.track = {o.pipe.track_window, o.pipe.track_step};
    sc.seed = o.seed;
    const auto params = o.pipe.params();
    const auto configs = corpus_configs(corpus);

    std::size_t ships = 0;
    std::size_t positives = 0;
    for (std::size_t i = 0; i < configs.size(); ++i) {
        const auto scene = generate_scene(configs[i]);
        const auto files = scene_to_inputs(scene, params);
        const fs::path dir = fs::path(o.out) / scene_name(static_cast<int>(i));
        fs::create_directories(dir);
        std::vector<PointSample> samples;
        for (int r = 0; r < scene.no2.spec.n_rows; ++r) {
            for (int c = 0; c < scene.no2.spec.n_cols; ++c) {
                const auto p = scene.no2.spec.cell_center(r, c);
                samples.push_back({p.lat, p.lon, scene.no2.at(r, c), 1.0, 0.0});
            }
        }
        io::write_file_atomic(dir / kSceneConfig, scene_meta_text({scene.config.t_overpass, scene.config.grid}));
        io::write_file_atomic(dir / kSamplesFile, to_samples_csv(samples));
        io::write_file_atomic(dir / kGridFile, files.grid_csv);
        io::write_file_atomic(dir / kAisFile, files.ais_csv);
        io::write_file_atomic(dir / kWindFile, files.wind_csv);
        io::write_file_atomic(dir / kRegistryFile, files.registry_csv);
        io::write_file_atomic(dir / kLabelFile, files.label_csv);
        ships += scene.ships.size();
        positives += parse_label_csv(files.label_csv).size();
    }
    out << "synth: scenes=" << configs.size() << " ships=" << ships << " positive_labels=" << positives
        << " seed=" << o.seed << " out=" << o.out << "\n";
    return kExitOk;
}

struct IngestOptions {
    std::string in;
    PipelineOptions pipe;
};

int cmd_ingest(const IngestOptions& o, std::ostream& out) {
    const auto dirs = scene_dirs(o.in);
    std::size_t n_samples = 0;
    std::size_t dropped_samples = 0;
    std::size_t n_ais = 0;
    std::size_t dropped_ais = 0;
    std::size_t n_ships = 0;
    std::size_t unregistered = 0;
    for (const auto& dir : dirs) {
        const auto meta = read_scene_meta(dir);
        GridImage grid;
        if (fs::exists(dir / kSamplesFile)) {
            const auto samples = parse_samples_csv(io::read_file(dir / kSamplesFile));
            auto kept = quality_filter(samples);
            const auto before = kept.size();
            std::erase_if(kept, [&](const PointSample& s) { return !meta.grid.locate(s.lat, s.lon); });
            n_samples += samples.size();
            dropped_samples += samples.size() - before + (before - kept.size());
            grid = regrid(kept, meta.grid);
            io::write_file_atomic(dir / kGridFile, to_grid_csv(grid));
        } else {
            grid = parse_grid_csv(io::read_file(dir / kGridFile));
        }
        const auto ais = parse_ais_csv(io::read_file(dir / kAisFile));
        const auto by_ship = group_by_ship(ais);
        std::size_t kept_ais = 0;
        for (const auto& [mmsi, recs] : by_ship) {
            kept_ais += recs.size();
        }
        n_ais += ais.size();
        dropped_ais += ais.size() - kept_ais;
        parse_wind_csv(io::read_file(dir / kWindFile));
        const auto lengths = parse_registry_csv(io::read_file(dir / kRegistryFile));
        n_ships += by_ship.size();
        for (const auto& [mmsi, recs] : by_ship) {
            if (!lengths.contains(mmsi)) {
                ++unregistered;
            }
        }
    }
    out << "ingest: scenes=" << dirs.size() << " samples=" << n_samples << " dropped_samples=" << dropped_samples
        << " ais_records=" << n_ais << " dropped_ais=" << dropped_ais << " ships=" << n_ships
        << " unregistered=" << unregistered << "\n";
    return kExitOk;
}

std::string report_text(const PreparationReport& r) {
    std::ostringstream s;
    s << "ships=" << r.ships_seen << " no_coverage=" << r.no_coverage << " no_length=" << r.no_length
      << " deselected=" << r.deselected << " off_grid=" << r.off_grid << " empty_sector=" << r.empty_sector
      << " degenerate=" << r.degenerate;
    return s.str();
}

void accumulate(PreparationReport& total, const PreparationReport& r) {
    total.ships_seen += r.ships_seen;
    total.no_coverage += r.no_coverage;
    total.no_length += r.no_length;
    total.deselected += r.deselected;
    total.off_grid += r.off_grid;
    total.empty_sector += r.empty_sector;
    total.degenerate += r.degenerate;
}

struct SceneOptions {
    std::string in;
    PipelineOptions pipe;
};

int cmd_sectors(const SceneOptions& o, std::ostream& out) {
    const auto dirs = scene_dirs(o.in);
    PreparationReport total;
    std::size_t n_images = 0;
    for (const auto& dir : dirs) {
        PreparationReport rep;
        const auto images = build_ship_images(load_scene(dir), o.pipe.params(), &rep);
        accumulate(total, rep);
        std::vector<ShipSector> sectors;
        for (const auto& img : images) {
            sectors.push_back(img.sector);
        }
        n_images += images.size();
        io::write_file_atomic(dir / "sectors.geojson", to_sectors_geojson(sectors));
    }
    out << "sectors: scenes=" << dirs.size() << " images=" << n_images << " " << report_text(total) << "\n";
    return kExitOk;
}

int cmd_enhance(const SceneOptions& o, std::ostream& out) {
    const auto dirs = scene_dirs(o.in);
    std::size_t n_images = 0;
    for (const auto& dir : dirs) {
        const auto images = build_ship_images(load_scene(dir), o.pipe.params());
        const auto edir = dir / "enhanced";
        fs::create_directories(edir);
        for (const auto& img : images) {
            io::write_file_atomic(edir / (img.group_id + ".no2.csv"), to_grid_csv(img.no2));
            io::write_file_atomic(edir / (img.group_id + ".moran.csv"), to_grid_csv(img.moran));
            io::write_file_atomic(edir / (img.group_id + ".moran_high.csv"), to_grid_csv(img.moran_high));
        }
        n_images += images.size();
    }
    out << "enhance: scenes=" << dirs.size() << " images=" << n_images << "\n";
    return kExitOk;
}

struct FeaturesOptions {
    std::string in;
    std::string out;
    PipelineOptions pipe;
};

int cmd_features(const FeaturesOptions& o, std::ostream& out) {
    if (o.out.empty()) {
        throw ValidationError("missing required option --out");
    }
    const auto dirs = scene_dirs(o.in);
    std::vector<ShipImage> images;
    LabelTable labels;
    bool any_labels = false;
    PreparationReport total;
    for (const auto& dir : dirs) {
        PreparationReport rep;
        auto imgs = build_ship_images(load_scene(dir), o.pipe.params(), &rep);
        accumulate(total, rep);
        std::move(imgs.begin(), imgs.end(), std::back_inserter(images));
        if (fs::exists(dir / kLabelFile)) {
            any_labels = true;
            const auto lab = load_labels(dir);
            labels.insert(lab.begin(), lab.end());
        }
    }
    AssemblyReport arep;
    const auto ds = assemble(images, any_labels ? &labels : nullptr, o.pipe.n_levels, o.pipe.n_subsectors, &arep);
    io::write_file_atomic(o.out, to_dataset_csv(ds));
    const auto cc = ds.class_counts();
    out << "features: scenes=" << dirs.size() << " images=" << images.size() << " rows=" << ds.rows.size()
        << " positive=" << cc.positive << " negative=" << cc.negative
        << " dropped_nonfinite=" << arep.dropped_nonfinite << " out=" << o.out << "\n";
    return kExitOk;
}

struct ModelOptions {
    std::string dataset;
    std::string model = "gbt";
    std::uint64_t seed = 0;
    int n_trees = GBTParams{}.n_trees;
    int max_depth = GBTParams{}.max_depth;
    double learning_rate = GBTParams{}.learning_rate;
    double l2 = LogisticParams{}.l2;
    int max_iter = LogisticParams{}.max_iter;

    void add(CLI::App& app) {
        app.add_option("--dataset", dataset, "Dataset CSV")->required();
        app.add_option("--model", model, "no2|moran|moran-high|logistic|gbt");
        app.add_option("--seed", seed, "Random seed");
        app.add_option("--n-trees", n_trees, "Boosting rounds");
        app.add_option("--max-depth", max_depth, "Tree depth");
        app.add_option("--learning-rate", learning_rate, "Boosting shrinkage");
        app.add_option("--l2", l2, "Logistic L2 penalty");
        app.add_option("--max-iter", max_iter, "Logistic iterations");
    }

    SearchSpace space() const {
        SearchSpace s;
        s.gbt_defaults.n_trees = n_trees;
        s.gbt_defaults.max_depth = max_depth;
        s.gbt_defaults.learning_rate = learning_rate;
        s.gbt_defaults.seed = seed;
        s.logistic_defaults.l2 = l2;
        s.logistic_defaults.max_iter = max_iter;
        return s;
    }
};

struct TrainOptions {
    ModelOptions m;
    std::string out;
};

int cmd_train(const TrainOptions& o, std::ostream& out) {
    require_file(o.m.dataset, "dataset");
    if (o.out.empty()) {
        throw ValidationError("missing required option --out");
    }
    const auto family = model_family_from_string(o.m.model);
    const auto ds = load_dataset(o.m.dataset).labeled_only();
    const auto space = o.m.space();
    Hyperparams hp;
    if (family == ModelFamily::logistic) {
        hp = space.logistic_defaults;
    } else if (family == ModelFamily::gbt) {
        hp = space.gbt_defaults;
    }
    const auto model = fit_family(family, hp, ds);
    io::write_file_atomic(o.out, to_model_json(model));
    const auto cc = ds.class_counts();
    out << "train: model=" << to_string(family) << " rows=" << ds.rows.size() << " positive=" << cc.positive
        << " seed=" << o.m.seed << " out=" << o.out << "\n";
    return kExitOk;
}

struct EvaluateOptions {
    ModelOptions m;
    std::string out_dir;
    int outer_folds = 5;
    int inner_folds = 5;
    int n_candidates = 1;
    double cutoff = 0.5;
};

int cmd_evaluate(const EvaluateOptions& o, std::ostream& out) {
    require_file(o.m.dataset, "dataset");
    if (o.out_dir.empty()) {
        throw ValidationError("missing required option --out-dir");
    }
    const auto family = model_family_from_string(o.m.model);
    const auto ds = load_dataset(o.m.dataset);
    CVConfig cv{o.outer_folds, o.inner_folds, o.n_candidates, o.m.seed, o.cutoff};
    const auto report = nested_cv(ds, family, o.m.space(), cv);
    fs::create_directories(o.out_dir);
    const fs::path dir(o.out_dir);
    io::write_file_atomic(dir / "report.json", to_report_json(report));
    io::write_file_atomic(dir / "pr_curve.csv", to_pr_curve_csv(report.pooled_curve));
    io::write_file_atomic(dir / "predictions.csv",
                          to_predictions_csv(report.rows, report.oof_scores, report.oof_predictions));
    out << "evaluate: model=" << to_string(family) << " folds=" << o.outer_folds << " seed=" << o.m.seed
        << " ap=" << io::format_double(report.ap.mean) << " f1=" << io::format_double(report.f1.mean)
        << " out=" << o.out_dir << "\n";
    return kExitOk;
}

struct ProxyOptions {
    std::string dataset;
    std::string predictions;
    std::string model_file;
    bool perfect = false;
    double cutoff = 0.5;
    std::string out;
};

int cmd_proxy_report(const ProxyOptions& o, std::ostream& out) {
    require_file(o.dataset, "dataset");
    if (o.out.empty()) {
        throw ValidationError("missing required option --out");
    }
    const int sources = static_cast<int>(!o.predictions.empty()) + static_cast<int>(!o.model_file.empty()) +
                        static_cast<int>(o.perfect);
    if (sources != 1) {
        throw ValidationError("proxy-report needs exactly one of --predictions, --model-file, --perfect");
    }
    const auto ds = load_dataset(o.dataset);
    std::vector<FeatureRow> rows;
    std::vector<int> preds;
    if (o.perfect) {
        rows = ds.labeled_only().rows;
        preds = to_labels(rows);
    } else if (!o.model_file.empty()) {
        require_file(o.model_file, "model-file");
        const auto model = parse_model_json(io::read_file(o.model_file));
        rows = ds.rows;
        preds = predict_labels(model, rows, o.cutoff);
    } else {
        require_file(o.predictions, "predictions");
        const auto table = parse_predictions_csv(io::read_file(o.predictions), o.predictions);
        for (const auto& r : ds.rows) {
            auto it = table.find({r.group_id, r.row, r.col});
            if (it != table.end()) {
                rows.push_back(r);
                preds.push_back(it->second);
            }
        }
        if (rows.size() != table.size()) {
            throw ValidationError("predictions reference pixels missing from the dataset");
        }
    }
    ProxyTable proxies;
    for (const auto& r : rows) {
        if (!proxies.contains(r.group_id)) {
            ShipInfo ship{0, r.features.at(kShipLength), r.features.at(kShipSpeed)};
            proxies[r.group_id] = emission_proxy(ship).e_s;
        }
    }
    const auto estimates = ship_estimates(rows, preds);
    io::write_file_atomic(o.out, to_proxy_csv(estimates, proxies));
    const auto corr = proxy_correlation(estimates, proxies);
    out << "proxy-report: ships=" << estimates.size() << " used=" << corr.n_used << " excluded=" << corr.n_excluded
        << " r=" << io::format_double(corr.r) << " out=" << o.out << "\n";
    return kExitOk;
}

// ------------------------------------------------------------------ driver

std::vector<std::string> option_names(const CLI::App& app) {
    std::vector<std::string> names;
    for (const auto* opt : app.get_options()) {
        for (const auto& n : opt->get_lnames()) {
            names.push_back(n);
        }
    }
    return names;
}

bool is_flag(const CLI::App& app, const std::string& name) {
    for (const auto* opt : app.get_options()) {
        const auto& ln = opt->get_lnames();
        if (std::find(ln.begin(), ln.end(), name) != ln.end()) {
            return opt->get_type_size() == 0;
        }
    }
    return false;
}

// Splices config-file entries in front of the command-line flags so that
// flags given explicitly win (options take the last value).
std::vector<std::string> expand_config(const CLI::App& sub, const std::vector<std::string>& args) {
    std::string config_path;
    std::vector<std::string> rest;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config") {
            if (i + 1 >= args.size()) {
                throw ValidationError("--config needs a path");
            }
            config_path = args[++i];
        } else if (args[i].starts_with("--config=")) {
            config_path = args[i].substr(9);
        } else {
            rest.push_back(args[i]);
        }
    }
    if (config_path.empty()) {
        return rest;
    }
    if (!fs::exists(config_path)) {
        throw IoError("config not found: " + config_path);
    }
    const auto kv = parse_config(io::read_file(config_path), config_path);
    const auto names = option_names(sub);
    std::vector<std::string> expanded;
    for (const auto& [raw_key, value] : kv) {
        const auto key = normalize_key(raw_key);
        if (key == "config" || key == "help" || std::find(names.begin(), names.end(), key) == names.end()) {
            throw ValidationError("unknown config key '" + raw_key + "' in " + config_path);
        }
        if (is_flag(sub, key)) {
            if (value == "true" || value == "1") {
                expanded.push_back("--" + key);
            } else if (value != "false" && value != "0") {
                throw ValidationError("config key '" + raw_key + "' expects true or false");
            }
            continue;
        }
        expanded.push_back("--" + key + "=" + value);
    }
    expanded.insert(expanded.end(), rest.begin(), rest.end());
    return expanded;
}

}  // namespace

std::map<std::string, std::string> parse_config(std::string_view text, std::string_view source) {
    std::map<std::string, std::string> out;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto end = text.find('\n', pos);
        if (end == std::string_view::npos) {
            end = text.size();
        }
        auto line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) {
            line = line.substr(0, hash);
        }
        line = io::trim(line);
        if (line.empty()) {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw ValidationError(std::string(source) + ":" + std::to_string(line_no) + ": expected key=value");
        }
        const auto key = io::trim(line.substr(0, eq));
        if (key.empty()) {
            throw ValidationError(std::string(source) + ":" + std::to_string(line_no) + ": empty key");
        }
        out[std::string(key)] = std::string(io::trim(line.substr(eq + 1)));
        if (end == text.size()) {
            break;
        }
    }
    return out;
}

std::vector<fs::path> scene_dirs(const fs::path& root) {
    if (root.empty()) {
        throw ValidationError("missing required option --in");
    }
    if (!fs::exists(root)) {
        throw IoError("input not found: " + root.string());
    }
    if (fs::exists(root / kSceneConfig)) {
        return {root};
    }
    std::vector<fs::path> dirs;
    for (const auto& e : fs::directory_iterator(root)) {
        if (e.is_directory() && fs::exists(e.path() / kSceneConfig)) {
            dirs.push_back(e.path());
        }
    }
    std::sort(dirs.begin(), dirs.end());
    if (dirs.empty()) {
        throw ValidationError("no scene directories under " + root.string());
    }
    return dirs;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Ship NO2 plume segmentation pipeline", "plumeseg"};
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "Show help for every subcommand");

    SynthOptions synth;
    auto* s_synth = app.add_subcommand("synth", "Generate synthetic scenes with ground-truth labels");
    s_synth->add_option("--out", synth.out, "Output corpus directory");
    s_synth->add_option("--n-scenes", synth.n_scenes, "Number of scenes");
    s_synth->add_option("--min-ships", synth.min_ships, "Fewest ships per scene");
    s_synth->add_option("--max-ships", synth.max_ships, "Most ships per scene");
    s_synth->add_option("--seed", synth.seed, "Random seed");
    s_synth->add_option("--lat-min", synth.lat_min, "Grid south edge, degrees");
    s_synth->add_option("--lon-min", synth.lon_min, "Grid west edge, degrees");
    s_synth->add_option("--n-rows", synth.n_rows, "Grid rows");
    s_synth->add_option("--n-cols", synth.n_cols, "Grid columns");
    s_synth->add_option("--t-overpass", synth.t_overpass, "Overpass time of the first scene, UTC seconds");
    s_synth->add_option("--noise-std", synth.noise_std, "Background noise standard deviation");
    s_synth->add_option("--correlation-length", synth.correlation_length, "Background correlation length, cells");
    s_synth->add_option("--emission-scale", synth.emission_scale, "Plume mass per unit emission proxy");
    s_synth->add_option("--puff-sigma", synth.puff_sigma, "Puff width, meters");
    s_synth->add_option("--decay-halflife", synth.decay_halflife, "Plume half-life, seconds");
    s_synth->add_option("--wind-speed-min", synth.wind_speed_min, "Slowest scene wind, m/s");
    s_synth->add_option("--wind-speed-max", synth.wind_speed_max, "Fastest scene wind, m/s");
    s_synth->add_option("--max-course-wind-angle", synth.max_course_wind_angle,
                        "Largest angle between ship course and downwind, degrees");
    s_synth->add_option("--mask-fraction", synth.mask_fraction, "Mask threshold in units of noise_std");
    s_synth->add_option("--mask-floor", synth.mask_floor, "Absolute mask threshold floor");
    synth.pipe.add(*s_synth);

    IngestOptions ingest;
    auto* s_ingest = app.add_subcommand("ingest", "Validate scene inputs and regrid point samples");
    s_ingest->add_option("--in", ingest.in, "Scene or corpus directory");
    ingest.pipe.add(*s_ingest);

    SceneOptions sectors;
    auto* s_sectors = app.add_subcommand("sectors", "Build ship sectors (GeoJSON per scene)");
    s_sectors->add_option("--in", sectors.in, "Scene or corpus directory");
    sectors.pipe.add(*s_sectors);

    SceneOptions enhance;
    auto* s_enhance = app.add_subcommand("enhance", "Write cropped NO2 and Moran-enhanced images");
    s_enhance->add_option("--in", enhance.in, "Scene or corpus directory");
    enhance.pipe.add(*s_enhance);

    FeaturesOptions features;
    auto* s_features = app.add_subcommand("features", "Assemble the per-pixel feature dataset");
    s_features->add_option("--in", features.in, "Scene or corpus directory");
    s_features->add_option("--out", features.out, "Dataset CSV");
    features.pipe.add(*s_features);

    TrainOptions train;
    auto* s_train = app.add_subcommand("train", "Fit a model on the whole labeled dataset");
    train.m.add(*s_train);
    s_train->add_option("--out", train.out, "Model JSON");

    EvaluateOptions evaluate;
    auto* s_evaluate = app.add_subcommand("evaluate", "Grouped nested cross-validation");
    evaluate.m.add(*s_evaluate);
    s_evaluate->add_option("--out-dir", evaluate.out_dir, "Report directory");
    s_evaluate->add_option("--outer-folds", evaluate.outer_folds, "Outer folds");
    s_evaluate->add_option("--inner-folds", evaluate.inner_folds, "Inner folds");
    s_evaluate->add_option("--n-candidates", evaluate.n_candidates, "Hyperparameter candidates per outer fold");
    s_evaluate->add_option("--cutoff", evaluate.cutoff, "Probability cutoff for hard predictions");

    ProxyOptions proxy;
    auto* s_proxy = app.add_subcommand("proxy-report", "Correlate segmented NO2 with the emission proxy");
    s_proxy->add_option("--dataset", proxy.dataset, "Dataset CSV");
    s_proxy->add_option("--predictions", proxy.predictions, "Predictions CSV from evaluate");
    s_proxy->add_option("--model-file", proxy.model_file, "Model JSON from train");
    s_proxy->add_flag("--perfect", proxy.perfect, "Use the labels as predictions");
    s_proxy->add_option("--cutoff", proxy.cutoff, "Probability cutoff with --model-file");
    s_proxy->add_option("--out", proxy.out, "Proxy CSV");

    for (auto* sub : app.get_subcommands({})) {
        sub->add_option("--config", "Flat key=value file; flags given on the command line win");
    }

    try {
        std::vector<std::string> argv = args;
        if (!argv.empty()) {
            if (auto* sub = app.get_subcommand_no_throw(argv.front())) {
                auto tail = expand_config(*sub, std::vector<std::string>(argv.begin() + 1, argv.end()));
                argv.resize(1);
                argv.insert(argv.end(), tail.begin(), tail.end());
            }
        }
        std::reverse(argv.begin(), argv.end());
        app.parse(argv);

        const std::map<CLI::App*, std::function<int()>> dispatch{
            {s_synth, [&] { return cmd_synth(synth, out); }},
            {s_ingest, [&] { return cmd_ingest(ingest, out); }},
            {s_sectors, [&] { return cmd_sectors(sectors, out); }},
            {s_enhance, [&] { return cmd_enhance(enhance, out); }},
            {s_features, [&] { return cmd_features(features, out); }},
            {s_train, [&] { return cmd_train(train, out); }},
            {s_evaluate, [&] { return cmd_evaluate(evaluate, out); }},
            {s_proxy, [&] { return cmd_proxy_report(proxy, out); }},
        };
        for (const auto& [sub, fn] : dispatch) {
            if (sub->parsed()) {
                return fn();
            }
        }
        return kExitValidation;
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err) == 0 ? kExitOk : kExitValidation;
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const IoError& e) {
        err << "io error: " << e.what() << "\n";
        return kExitIo;
    } catch (const fs::filesystem_error& e) {
        err << "io error: " << e.what() << "\n";
        return kExitIo;
    }
}

}  // namespace plumeseg::cli
