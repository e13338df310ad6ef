#include "oracles.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <set>

namespace plumeseg::testing {

GridImage random_image(std::mt19937_64& rng, int max_side, double invalid_fraction) {
    std::uniform_int_distribution<int> side(1, max_side);
    const int rows = side(rng);
    const int cols = std::max(side(rng), rows == 1 ? 2 : 1);
    GridImage img(GridSpec{0.0, 0.0, kDefaultCellSize, rows, cols});
    std::normal_distribution<double> value(0.0, 1.0);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            if (u(rng) >= invalid_fraction) {
                img.set(r, c, value(rng));
            }
        }
    }
    // at least two distinct valid values so the variance is nonzero
    img.set(0, 0, 5.0);
    img.set(rows - 1, cols - 1, -5.0);
    return img;
}

TempDir::TempDir(const std::string& prefix) {
    static std::atomic<int> counter{0};
    std::random_device rd;
    for (int attempt = 0; attempt < 100; ++attempt) {
        auto candidate = std::filesystem::temp_directory_path() /
                         (prefix + "_" + std::to_string(rd()) + "_" + std::to_string(counter++));
        if (std::filesystem::create_directory(candidate)) {
            path_ = candidate;
            return;
        }
    }
    throw std::runtime_error("could not create temporary directory");
}

TempDir::~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
}

Track straight_track(Mmsi mmsi, GeoPoint end, double heading_deg, double speed_ms, Timestamp t_end, int n,
                     Timestamp step_s) {
    const double ve = speed_ms * std::sin(deg2rad(heading_deg));
    const double vn = speed_ms * std::cos(deg2rad(heading_deg));
    Track track;
    track.mmsi = mmsi;
    for (int k = n - 1; k >= 0; --k) {
        const double dt = static_cast<double>(k * step_s);
        const double lat = end.lat - vn * dt / kMetersPerDegreeLat;
        const double lon = end.lon - ve * dt / (kMetersPerDegreeLat * std::cos(deg2rad(lat)));
        track.points.push_back({t_end - k * step_s, lat, lon});
    }
    return track;
}

LabeledDataset grouped_dataset(std::mt19937_64& rng, int n_groups, int rows_per_group) {
    LabeledDataset ds;
    std::normal_distribution<double> z(0.0, 1.0);
    std::uniform_int_distribution<int> bin(0, 4);
    for (int g = 0; g < n_groups; ++g) {
        const std::string gid = (g < 10 ? "g0" : "g") + std::to_string(g);
        const double wind = 5.0 + 10.0 * std::abs(z(rng));
        for (int i = 0; i < rows_per_group; ++i) {
            FeatureRow r;
            r.group_id = gid;
            r.row = i / 10;
            r.col = i % 10;
            r.features.assign(17, 0.0);
            for (std::size_t j = 0; j < kFirstOneHot; ++j) {
                r.features[j] = z(rng);
            }
            r.features[kWindSpeed] = wind;
            r.features[kFirstOneHot + static_cast<std::size_t>(bin(rng))] = 1.0;
            r.features[kFirstOneHot + 5 + static_cast<std::size_t>(bin(rng))] = 1.0;
            r.moran_high = r.features[kMoranI] + 0.3 * z(rng);
            const double s = r.features[kNo2] + 0.8 * r.features[kMoranI] + 0.7 * z(rng);
            r.label = s > 1.2 ? 1 : 0;
            if (i == 0) {
                r.label = 1;
            } else if (i == 1) {
                r.label = 0;
            }
            ds.rows.push_back(std::move(r));
        }
    }
    return ds;
}

GridImage moran_dense(const GridImage& image) {
    const auto& s = image.spec;
    const int n = s.n_rows * s.n_cols;
    double sum = 0.0;
    int count = 0;
    for (int i = 0; i < n; ++i) {
        if (image.valid[static_cast<std::size_t>(i)]) {
            sum += image.values[static_cast<std::size_t>(i)];
            ++count;
        }
    }
    const double mean = sum / count;
    double ss = 0.0;
    for (int i = 0; i < n; ++i) {
        if (image.valid[static_cast<std::size_t>(i)]) {
            const double d = image.values[static_cast<std::size_t>(i)] - mean;
            ss += d * d;
        }
    }
    const double var = ss / count;

    GridImage out(s);
    for (int i = 0; i < n; ++i) {
        if (!image.valid[static_cast<std::size_t>(i)]) {
            continue;
        }
        const int ri = i / s.n_cols;
        const int ci = i % s.n_cols;
        double lag = 0.0;
        for (int j = 0; j < n; ++j) {
            const int rj = j / s.n_cols;
            const int cj = j % s.n_cols;
            const bool neighbor = std::max(std::abs(ri - rj), std::abs(ci - cj)) == 1;
            if (neighbor && image.valid[static_cast<std::size_t>(j)]) {
                lag += image.values[static_cast<std::size_t>(j)] - mean;
            }
        }
        out.set(ri, ci, (image.values[static_cast<std::size_t>(i)] - mean) / var * lag);
    }
    return out;
}

namespace {

double segment_distance(const GeoPoint& a, const GeoPoint& b, const GeoPoint& p) {
    const double dx = b.lon - a.lon;
    const double dy = b.lat - a.lat;
    const double len2 = dx * dx + dy * dy;
    double t = len2 > 0.0 ? ((p.lon - a.lon) * dx + (p.lat - a.lat) * dy) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    return std::hypot(a.lon + t * dx - p.lon, a.lat + t * dy - p.lat);
}

}  // namespace

bool inside_polygon_north_ray(std::span<const GeoPoint> ring, const GeoPoint& p, double tol) {
    std::vector<GeoPoint> v(ring.begin(), ring.end());
    if (v.size() > 1 && v.front() == v.back()) {
        v.pop_back();
    }
    const std::size_t n = v.size();
    for (std::size_t i = 0; i < n; ++i) {
        if (segment_distance(v[i], v[(i + 1) % n], p) <= tol) {
            return true;
        }
    }
    int crossings = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& a = v[i];
        const auto& b = v[(i + 1) % n];
        const bool straddles = (a.lon <= p.lon && b.lon > p.lon) || (b.lon <= p.lon && a.lon > p.lon);
        if (!straddles) {
            continue;
        }
        const double lat_at = a.lat + (p.lon - a.lon) / (b.lon - a.lon) * (b.lat - a.lat);
        if (lat_at > p.lat) {
            ++crossings;
        }
    }
    return crossings % 2 == 1;
}

std::vector<CellIndex> sector_cells_oracle(const ShipSector& sector, const GridImage& image) {
    std::vector<CellIndex> out;
    for (int r = 0; r < image.spec.n_rows; ++r) {
        for (int c = 0; c < image.spec.n_cols; ++c) {
            if (image.is_valid(r, c) && inside_polygon_north_ray(sector.polygon, image.spec.cell_center(r, c))) {
                out.push_back({r, c});
            }
        }
    }
    return out;
}

double shoelace_area(std::span<const GeoPoint> ring, const GeoPoint& origin) {
    const double k = kMetersPerDegreeLat;
    const double coslat = std::cos(deg2rad(origin.lat));
    double twice = 0.0;
    for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
        const double x1 = (ring[i].lon - origin.lon) * k * coslat;
        const double y1 = (ring[i].lat - origin.lat) * k;
        const double x2 = (ring[i + 1].lon - origin.lon) * k * coslat;
        const double y2 = (ring[i + 1].lat - origin.lat) * k;
        twice += x1 * y2 - x2 * y1;
    }
    return 0.5 * twice;
}

double ap_oracle(std::span<const int> labels, std::span<const double> scores) {
    std::set<double, std::greater<>> thresholds(scores.begin(), scores.end());
    double total_pos = 0.0;
    for (const int y : labels) {
        total_pos += y;
    }
    double ap = 0.0;
    double prev_recall = 0.0;
    for (const double t : thresholds) {
        double tp = 0.0;
        double fp = 0.0;
        for (std::size_t i = 0; i < scores.size(); ++i) {
            if (scores[i] >= t) {
                (labels[i] ? tp : fp) += 1.0;
            }
        }
        const double precision = tp / (tp + fp);
        const double recall = tp / total_pos;
        ap += (recall - prev_recall) * precision;
        prev_recall = recall;
    }
    return ap;
}

Confusion confusion_oracle(std::span<const int> labels, std::span<const int> predictions) {
    double tp = 0;
    double fp = 0;
    double fn = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        tp += labels[i] == 1 && predictions[i] == 1;
        fp += labels[i] == 0 && predictions[i] == 1;
        fn += labels[i] == 1 && predictions[i] == 0;
    }
    Confusion c;
    c.precision = tp + fp > 0 ? tp / (tp + fp) : 0.0;
    c.recall = tp + fn > 0 ? tp / (tp + fn) : 0.0;
    c.f1 = c.precision + c.recall > 0 ? 2 * c.precision * c.recall / (c.precision + c.recall) : 0.0;
    return c;
}

double f1_at(std::span<const double> values, std::span<const int> labels, double t) {
    std::vector<int> pred(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        pred[i] = values[i] >= t ? 1 : 0;
    }
    return confusion_oracle(labels, pred).f1;
}

std::pair<double, double> threshold_scan_oracle(std::span<const double> values, std::span<const int> labels) {
    std::set<double> distinct(values.begin(), values.end());
    std::vector<double> sorted(distinct.begin(), distinct.end());
    double best_t = sorted.back();
    double best_f1 = -1.0;
    for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
        double t = 0.5 * (sorted[i] + sorted[i + 1]);
        if (!(t > sorted[i])) {
            t = sorted[i + 1];
        }
        const double f1 = f1_at(values, labels, t);
        if (f1 > best_f1) {  // ascending scan keeps the smallest tied threshold
            best_f1 = f1;
            best_t = t;
        }
    }
    return {best_t, best_f1};
}

double pearson_oracle(std::span<const double> a, std::span<const double> b) {
    const double n = static_cast<double>(a.size());
    double ma = 0.0;
    double mb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= n;
    mb /= n;
    double cov = 0.0;
    double va = 0.0;
    double vb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        cov += (a[i] - ma) * (b[i] - mb);
        va += (a[i] - ma) * (a[i] - ma);
        vb += (b[i] - mb) * (b[i] - mb);
    }
    return cov / std::sqrt(va * vb);
}

double gbt_score_oracle(const GBTModel& model, std::span<const double> x) {
    double margin = 0.0;
    for (const auto& tree : model.trees) {
        int node = 0;
        while (tree.nodes[static_cast<std::size_t>(node)].feature >= 0) {
            const auto& nd = tree.nodes[static_cast<std::size_t>(node)];
            node = x[static_cast<std::size_t>(nd.feature)] < nd.threshold ? nd.left : nd.right;
        }
        margin += tree.nodes[static_cast<std::size_t>(node)].value;
    }
    return 1.0 / (1.0 + std::exp(-margin));
}

double median_oracle(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

}  // namespace plumeseg::testing
