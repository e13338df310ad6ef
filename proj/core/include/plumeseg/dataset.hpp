#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "plumeseg/grid.hpp"
#include "plumeseg/sector.hpp"
#include "plumeseg/tracks.hpp"

namespace plumeseg {

/// Column order of the per-pixel feature vector.
enum FeatureColumn : std::size_t {
    kMoranI = 0,
    kNo2 = 1,
    kWindSpeed = 2,
    kWindDirSin = 3,
    kWindDirCos = 4,
    kShipSpeed = 5,
    kShipLength = 6,
    kFirstOneHot = 7,
};

/// moran_i, no2, wind_speed, wind_dir_sin, wind_dir_cos, ship_speed, ship_length,
/// level_1..level_n, subsector_1..subsector_m.
std::vector<std::string> feature_names(int n_levels = 5, int n_subsectors = 5);

struct FeatureRow {
    std::string group_id;
    int row = 0;  // scene grid indices
    int col = 0;
    std::vector<double> features;
    /// Moran's I of the median-zeroed image; threshold baseline only, not a model input.
    double moran_high = 0.0;
    std::optional<int> label;
};

struct ClassCounts {
    std::size_t negative = 0;
    std::size_t positive = 0;
};

struct LabeledDataset {
    int n_levels = 5;
    int n_subsectors = 5;
    std::vector<FeatureRow> rows;

    std::size_t n_features() const { return kFirstOneHot + static_cast<std::size_t>(n_levels + n_subsectors); }
    ClassCounts class_counts() const;
    /// Rows that carry a label.
    LabeledDataset labeled_only() const;
};

struct ShipCandidate {
    ShipInfo info;
    Track track;
    GeoPoint image_center;
};

/// Drops ships at or below min_speed_kt, then clusters the rest transitively by
/// image-center distance <= dedup_radius_deg and keeps the fastest of each cluster
/// (ties: smaller mmsi). Input order is preserved.
std::vector<ShipCandidate> select_ships(std::span<const ShipCandidate> candidates, double min_speed_kt = 14.0,
                                        double dedup_radius_deg = 0.4);

/// Everything the feature builder needs for one ship plume image.
struct ShipImage {
    std::string group_id;
    ShipInfo ship;
    WindVector wind;
    ShipSector sector;
    CropWindow window;  // crop position in the scene grid
    GridImage no2;
    GridImage moran;
    GridImage moran_high;
    std::vector<NormalizedPixel> pixels;  // crop indices
};

/// Labels keyed by (group_id, scene row, scene col).
using LabelKey = std::tuple<std::string, int, int>;
using LabelTable = std::map<LabelKey, int>;

struct AssemblyReport {
    std::size_t rows = 0;
    std::size_t dropped_nonfinite = 0;
    std::size_t labeled_positive = 0;
};

/// One row per sector pixel, groups in group_id order. With a label table, listed
/// pixels take their label and every other pixel of the image is negative; a listed
/// pixel outside an assembled image's sector throws "orphan label". Labels of groups
/// that were not assembled are ignored.
LabeledDataset assemble(std::span<const ShipImage> images, const LabelTable* labels, int n_levels = 5,
                        int n_subsectors = 5, AssemblyReport* report = nullptr);

/// "<mmsi>_<YYYY-MM-DD>"
std::string make_group_id(Mmsi mmsi, Timestamp t_overpass);

// Label CSV: group_id,row,col,label
std::string to_label_csv(const LabelTable& labels);
LabelTable parse_label_csv(std::string_view text);

// Dataset CSV: group_id,row,col,<feature names>,moran_high,label (label empty when absent)
std::string to_dataset_csv(const LabeledDataset& dataset);
LabeledDataset parse_dataset_csv(std::string_view text);

}  // namespace plumeseg
