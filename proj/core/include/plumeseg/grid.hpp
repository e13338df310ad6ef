#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "plumeseg/common.hpp"

namespace plumeseg {

inline constexpr double kDefaultCellSize = 0.045;

/// Regular lat/lon raster geometry. Cell (r, c) covers the half-open box
/// [lat_min + r*cell, lat_min + (r+1)*cell) x [lon_min + c*cell, lon_min + (c+1)*cell).
struct GridSpec {
    double lat_min = 0.0;
    double lon_min = 0.0;
    double cell_size = kDefaultCellSize;
    int n_rows = 1;
    int n_cols = 1;

    void validate() const;
    std::size_t size() const { return static_cast<std::size_t>(n_rows) * static_cast<std::size_t>(n_cols); }
    double lat_max() const { return lat_min + n_rows * cell_size; }
    double lon_max() const { return lon_min + n_cols * cell_size; }
    GeoPoint cell_center(int row, int col) const {
        return {lat_min + (row + 0.5) * cell_size, lon_min + (col + 0.5) * cell_size};
    }
    /// Cell containing the point, or nullopt when it lies outside the extent.
    std::optional<std::pair<int, int>> locate(double lat, double lon) const;

    friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

/// Raster of values with a validity mask; invalid cells never enter any statistic.
struct GridImage {
    GridSpec spec;
    std::vector<double> values;  // row-major
    std::vector<unsigned char> valid;

    GridImage() = default;
    explicit GridImage(const GridSpec& s)
        : spec(s), values(s.size(), 0.0), valid(s.size(), 0) {}

    std::size_t index(int row, int col) const {
        return static_cast<std::size_t>(row) * static_cast<std::size_t>(spec.n_cols) + static_cast<std::size_t>(col);
    }
    double at(int row, int col) const { return values[index(row, col)]; }
    bool is_valid(int row, int col) const { return valid[index(row, col)] != 0; }
    void set(int row, int col, double v) {
        values[index(row, col)] = v;
        valid[index(row, col)] = 1;
    }
    void invalidate(int row, int col) {
        values[index(row, col)] = 0.0;
        valid[index(row, col)] = 0;
    }
    std::size_t count_valid() const;
    bool in_bounds(int row, int col) const {
        return row >= 0 && col >= 0 && row < spec.n_rows && col < spec.n_cols;
    }
};

struct PointSample {
    double lat = 0.0;
    double lon = 0.0;
    double value = 0.0;
    double qa = 1.0;
    double cloud_fraction = 0.0;
};

/// Keeps samples with qa > qa_min and cloud_fraction < cloud_max, in order.
std::vector<PointSample> quality_filter(std::span<const PointSample> samples, double qa_min = 0.5,
                                        double cloud_max = 0.5);

/// Per-cell arithmetic mean of the samples falling in each cell; empty cells are invalid.
GridImage regrid(std::span<const PointSample> samples, const GridSpec& spec);

/// Sub-raster window of a parent grid, in parent cell indices.
struct CropWindow {
    int row0 = 0;
    int col0 = 0;
    int n_rows = 0;
    int n_cols = 0;
};

/// Cells whose centers fall in the half-open square [center - h, center + h)
/// on both axes. At most ceil(2h / cell_size) cells per axis.
CropWindow crop_window(const GridSpec& spec, double center_lat, double center_lon, double half_extent = 0.4);

GridSpec window_spec(const GridSpec& spec, const CropWindow& window);
GridImage extract(const GridImage& image, const CropWindow& window);

GridImage crop(const GridImage& image, double center_lat, double center_lon, double half_extent = 0.4);

// grid-csv: "#key=value" header lines then n_rows lines of n_cols values, "nan" for invalid.
std::string to_grid_csv(const GridImage& image);
GridImage parse_grid_csv(std::string_view text);

// Point-sample CSV with header lat,lon,value,qa,cloud_fraction.
std::string to_samples_csv(std::span<const PointSample> samples);
std::vector<PointSample> parse_samples_csv(std::string_view text);

}  // namespace plumeseg
