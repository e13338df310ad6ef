#include "plumeseg/grid.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "plumeseg/io.hpp"

namespace plumeseg {

void GridSpec::validate() const {
    if (!(cell_size > 0.0) || !std::isfinite(cell_size)) {
        throw ValidationError("grid cell_size must be > 0");
    }
    if (n_rows < 1 || n_cols < 1) {
        throw ValidationError("grid must have at least one row and one column");
    }
    if (!std::isfinite(lat_min) || !std::isfinite(lon_min)) {
        throw ValidationError("grid origin must be finite");
    }
}

std::optional<std::pair<int, int>> GridSpec::locate(double lat, double lon) const {
    const double fr = std::floor((lat - lat_min) / cell_size);
    const double fc = std::floor((lon - lon_min) / cell_size);
    if (!(fr >= 0.0 && fr < n_rows && fc >= 0.0 && fc < n_cols)) {
        return std::nullopt;
    }
    return std::make_pair(static_cast<int>(fr), static_cast<int>(fc));
}

std::size_t GridImage::count_valid() const {
    return static_cast<std::size_t>(std::count(valid.begin(), valid.end(), 1));
}

std::vector<PointSample> quality_filter(std::span<const PointSample> samples, double qa_min, double cloud_max) {
    std::vector<PointSample> kept;
    kept.reserve(samples.size());
    for (const auto& s : samples) {
        if (s.qa > qa_min && s.cloud_fraction < cloud_max) {
            kept.push_back(s);
        }
    }
    return kept;
}

GridImage regrid(std::span<const PointSample> samples, const GridSpec& spec) {
    spec.validate();
    GridImage out(spec);
    std::vector<double> sums(spec.size(), 0.0);
    std::vector<std::size_t> counts(spec.size(), 0);
    for (const auto& s : samples) {
        const auto cell = spec.locate(s.lat, s.lon);
        if (!cell) {
            continue;
        }
        const auto idx = out.index(cell->first, cell->second);
        sums[idx] += s.value;
        ++counts[idx];
    }
    for (std::size_t i = 0; i < sums.size(); ++i) {
        if (counts[i] > 0) {
            out.values[i] = sums[i] / static_cast<double>(counts[i]);
            out.valid[i] = 1;
        }
    }
    return out;
}

namespace {

// First and one-past-last index whose cell center lies in [lo, hi).
std::pair<int, int> center_range(double origin, double cell, int n, double lo, double hi) {
    auto center = [&](int i) { return origin + (i + 0.5) * cell; };
    int first = static_cast<int>(std::ceil((lo - origin) / cell - 0.5));
    first = std::clamp(first, 0, n);
    while (first > 0 && center(first - 1) >= lo) {
        --first;
    }
    while (first < n && center(first) < lo) {
        ++first;
    }
    int last = first;
    while (last < n && center(last) < hi) {
        ++last;
    }
    return {first, last};
}

}  // namespace

CropWindow crop_window(const GridSpec& spec, double center_lat, double center_lon, double half_extent) {
    spec.validate();
    if (!(half_extent > 0.0)) {
        throw ValidationError("crop half_extent must be > 0");
    }
    if (!spec.locate(center_lat, center_lon)) {
        throw ValidationError("center out of bounds");
    }
    const auto [r0, r1] =
        center_range(spec.lat_min, spec.cell_size, spec.n_rows, center_lat - half_extent, center_lat + half_extent);
    const auto [c0, c1] =
        center_range(spec.lon_min, spec.cell_size, spec.n_cols, center_lon - half_extent, center_lon + half_extent);
    if (r1 <= r0 || c1 <= c0) {
        throw ValidationError("empty crop");
    }
    return {r0, c0, r1 - r0, c1 - c0};
}

GridSpec window_spec(const GridSpec& spec, const CropWindow& window) {
    GridSpec out = spec;
    out.lat_min = spec.lat_min + window.row0 * spec.cell_size;
    out.lon_min = spec.lon_min + window.col0 * spec.cell_size;
    out.n_rows = window.n_rows;
    out.n_cols = window.n_cols;
    return out;
}

GridImage extract(const GridImage& image, const CropWindow& window) {
    if (window.row0 < 0 || window.col0 < 0 || window.n_rows < 1 || window.n_cols < 1 ||
        window.row0 + window.n_rows > image.spec.n_rows || window.col0 + window.n_cols > image.spec.n_cols) {
        throw ValidationError("crop window outside image");
    }
    if (window.row0 == 0 && window.col0 == 0 && window.n_rows == image.spec.n_rows &&
        window.n_cols == image.spec.n_cols) {
        return image;
    }
    GridImage out(window_spec(image.spec, window));
    for (int r = 0; r < window.n_rows; ++r) {
        for (int c = 0; c < window.n_cols; ++c) {
            const auto src = image.index(window.row0 + r, window.col0 + c);
            const auto dst = out.index(r, c);
            out.values[dst] = image.values[src];
            out.valid[dst] = image.valid[src];
        }
    }
    return out;
}

GridImage crop(const GridImage& image, double center_lat, double center_lon, double half_extent) {
    return extract(image, crop_window(image.spec, center_lat, center_lon, half_extent));
}

std::string to_grid_csv(const GridImage& image) {
    const auto& s = image.spec;
    std::string out;
    out += "#lat_min=" + io::format_double(s.lat_min) + "\n";
    out += "#lon_min=" + io::format_double(s.lon_min) + "\n";
    out += "#cell_size=" + io::format_double(s.cell_size) + "\n";
    out += "#n_rows=" + std::to_string(s.n_rows) + "\n";
    out += "#n_cols=" + std::to_string(s.n_cols) + "\n";
    for (int r = 0; r < s.n_rows; ++r) {
        for (int c = 0; c < s.n_cols; ++c) {
            if (c) {
                out += ',';
            }
            out += image.is_valid(r, c) ? io::format_double(image.at(r, c)) : std::string("nan");
        }
        out += '\n';
    }
    return out;
}

GridImage parse_grid_csv(std::string_view text) {
    std::map<std::string, std::string, std::less<>> keys;
    std::vector<std::string_view> data_lines;
    for (auto line : io::split(text, '\n')) {
        line = io::trim(line);
        if (line.empty()) {
            continue;
        }
        if (line.front() == '#') {
            const auto eq = line.find('=');
            if (eq == std::string_view::npos) {
                throw ValidationError("grid-csv: malformed header line '" + std::string(line) + "'");
            }
            keys[std::string(io::trim(line.substr(1, eq - 1)))] = std::string(io::trim(line.substr(eq + 1)));
            continue;
        }
        data_lines.push_back(line);
    }
    auto need = [&](std::string_view key) -> const std::string& {
        auto it = keys.find(key);
        if (it == keys.end()) {
            throw ValidationError("grid-csv: missing #" + std::string(key));
        }
        return it->second;
    };
    GridSpec spec;
    spec.lat_min = io::parse_double(need("lat_min"), "lat_min");
    spec.lon_min = io::parse_double(need("lon_min"), "lon_min");
    spec.cell_size = io::parse_double(need("cell_size"), "cell_size");
    spec.n_rows = static_cast<int>(io::parse_int(need("n_rows"), "n_rows"));
    spec.n_cols = static_cast<int>(io::parse_int(need("n_cols"), "n_cols"));
    spec.validate();
    if (data_lines.size() != static_cast<std::size_t>(spec.n_rows)) {
        throw ValidationError("grid-csv: expected " + std::to_string(spec.n_rows) + " data rows, got " +
                              std::to_string(data_lines.size()));
    }
    GridImage image(spec);
    for (int r = 0; r < spec.n_rows; ++r) {
        const auto fields = io::split(data_lines[static_cast<std::size_t>(r)], ',');
        if (fields.size() != static_cast<std::size_t>(spec.n_cols)) {
            throw ValidationError("grid-csv: row " + std::to_string(r) + " has " + std::to_string(fields.size()) +
                                  " values, expected " + std::to_string(spec.n_cols));
        }
        for (int c = 0; c < spec.n_cols; ++c) {
            const double v = io::parse_double(fields[static_cast<std::size_t>(c)], "grid value");
            if (std::isnan(v)) {
                image.invalidate(r, c);
            } else if (!std::isfinite(v)) {
                throw ValidationError("grid-csv: non-finite value at row " + std::to_string(r));
            } else {
                image.set(r, c, v);
            }
        }
    }
    return image;
}

std::string to_samples_csv(std::span<const PointSample> samples) {
    std::string out = "lat,lon,value,qa,cloud_fraction\n";
    for (const auto& s : samples) {
        out += io::format_double(s.lat) + ',' + io::format_double(s.lon) + ',' + io::format_double(s.value) + ',' +
               io::format_double(s.qa) + ',' + io::format_double(s.cloud_fraction) + '\n';
    }
    return out;
}

std::vector<PointSample> parse_samples_csv(std::string_view text) {
    const auto table = io::parse_csv(text, "samples csv");
    table.require_header({"lat", "lon", "value", "qa", "cloud_fraction"}, "samples csv");
    std::vector<PointSample> out;
    out.reserve(table.rows.size());
    for (const auto& row : table.rows) {
        PointSample s;
        s.lat = io::parse_double(row[0], "lat");
        s.lon = io::parse_double(row[1], "lon");
        s.value = io::parse_double(row[2], "value");
        s.qa = io::parse_double(row[3], "qa");
        s.cloud_fraction = io::parse_double(row[4], "cloud_fraction");
        if (!(s.qa >= 0.0 && s.qa <= 1.0) || !(s.cloud_fraction >= 0.0 && s.cloud_fraction <= 1.0)) {
            throw ValidationError("samples csv: qa and cloud_fraction must lie in [0,1]");
        }
        out.push_back(s);
    }
    return out;
}

}  // namespace plumeseg
