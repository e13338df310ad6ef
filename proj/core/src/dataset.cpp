#include "plumeseg/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "plumeseg/io.hpp"

namespace plumeseg {

std::vector<std::string> feature_names(int n_levels, int n_subsectors) {
    std::vector<std::string> names{"moran_i",      "no2",       "wind_speed", "wind_dir_sin",
                                   "wind_dir_cos", "ship_speed", "ship_length"};
    for (int i = 1; i <= n_levels; ++i) {
        names.push_back("level_" + std::to_string(i));
    }
    for (int i = 1; i <= n_subsectors; ++i) {
        names.push_back("subsector_" + std::to_string(i));
    }
    return names;
}

ClassCounts LabeledDataset::class_counts() const {
    ClassCounts cc;
    for (const auto& r : rows) {
        if (r.label) {
            (*r.label ? cc.positive : cc.negative) += 1;
        }
    }
    return cc;
}

LabeledDataset LabeledDataset::labeled_only() const {
    LabeledDataset out;
    out.n_levels = n_levels;
    out.n_subsectors = n_subsectors;
    std::copy_if(rows.begin(), rows.end(), std::back_inserter(out.rows),
                 [](const FeatureRow& r) { return r.label.has_value(); });
    return out;
}

std::vector<ShipCandidate> select_ships(std::span<const ShipCandidate> candidates, double min_speed_kt,
                                        double dedup_radius_deg) {
    const double min_speed_ms = min_speed_kt * kKnotInMs;
    std::vector<std::size_t> fast;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        if (candidates[i].info.speed_ms > min_speed_ms) {
            fast.push_back(i);
        }
    }

    // Union-find over image-center proximity.
    std::vector<std::size_t> parent(fast.size());
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](std::size_t x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    };
    for (std::size_t a = 0; a < fast.size(); ++a) {
        for (std::size_t b = a + 1; b < fast.size(); ++b) {
            const auto& pa = candidates[fast[a]].image_center;
            const auto& pb = candidates[fast[b]].image_center;
            if (std::hypot(pa.lat - pb.lat, pa.lon - pb.lon) <= dedup_radius_deg) {
                parent[find(a)] = find(b);
            }
        }
    }

    std::map<std::size_t, std::size_t> best;  // root -> index into fast
    for (std::size_t a = 0; a < fast.size(); ++a) {
        const auto root = find(a);
        auto it = best.find(root);
        if (it == best.end()) {
            best.emplace(root, a);
            continue;
        }
        const auto& cur = candidates[fast[it->second]].info;
        const auto& cand = candidates[fast[a]].info;
        if (cand.speed_ms > cur.speed_ms || (cand.speed_ms == cur.speed_ms && cand.mmsi < cur.mmsi)) {
            it->second = a;
        }
    }
    std::vector<std::size_t> keep;
    for (const auto& [root, a] : best) {
        keep.push_back(fast[a]);
    }
    std::sort(keep.begin(), keep.end());
    std::vector<ShipCandidate> out;
    for (auto i : keep) {
        out.push_back(candidates[i]);
    }
    return out;
}

std::string make_group_id(Mmsi mmsi, Timestamp t_overpass) {
    return std::to_string(mmsi) + "_" + iso_date(t_overpass);
}

LabeledDataset assemble(std::span<const ShipImage> images, const LabelTable* labels, int n_levels, int n_subsectors,
                        AssemblyReport* report) {
    LabeledDataset ds;
    ds.n_levels = n_levels;
    ds.n_subsectors = n_subsectors;
    AssemblyReport rep;

    std::vector<const ShipImage*> order;
    for (const auto& img : images) {
        order.push_back(&img);
    }
    std::stable_sort(order.begin(), order.end(),
                     [](const ShipImage* a, const ShipImage* b) { return a->group_id < b->group_id; });

    std::set<std::string> groups;
    std::set<LabelKey> known_pixels;
    const std::size_t width = kFirstOneHot + static_cast<std::size_t>(n_levels + n_subsectors);

    for (const auto* img : order) {
        groups.insert(img->group_id);
        const double wind_speed = img->wind.speed();
        const double wind_dir = img->wind.direction();
        std::vector<FeatureRow> group_rows;
        for (const auto& px : img->pixels) {
            if (px.level < 1 || px.level > n_levels || px.sub_sector < 1 || px.sub_sector > n_subsectors) {
                throw ValidationError("assemble: pixel bins do not match the configured level/sub-sector counts");
            }
            FeatureRow row;
            row.group_id = img->group_id;
            row.row = img->window.row0 + px.row;
            row.col = img->window.col0 + px.col;
            known_pixels.emplace(row.group_id, row.row, row.col);
            row.features.assign(width, 0.0);
            row.features[kMoranI] = img->moran.at(px.row, px.col);
            row.features[kNo2] = img->no2.at(px.row, px.col);
            row.features[kWindSpeed] = wind_speed;
            row.features[kWindDirSin] = std::sin(wind_dir);
            row.features[kWindDirCos] = std::cos(wind_dir);
            row.features[kShipSpeed] = img->ship.speed_ms;
            row.features[kShipLength] = img->ship.length_m;
            row.features[kFirstOneHot + static_cast<std::size_t>(px.level - 1)] = 1.0;
            row.features[kFirstOneHot + static_cast<std::size_t>(n_levels + px.sub_sector - 1)] = 1.0;
            row.moran_high = img->moran_high.at(px.row, px.col);
            const bool finite = std::all_of(row.features.begin(), row.features.end(),
                                            [](double v) { return std::isfinite(v); }) &&
                                std::isfinite(row.moran_high);
            if (!finite) {
                ++rep.dropped_nonfinite;
                continue;
            }
            if (labels) {
                auto it = labels->find({row.group_id, row.row, row.col});
                row.label = it == labels->end() ? 0 : it->second;
                rep.labeled_positive += static_cast<std::size_t>(*row.label);
            }
            group_rows.push_back(std::move(row));
        }
        std::sort(group_rows.begin(), group_rows.end(), [](const FeatureRow& a, const FeatureRow& b) {
            return std::tie(a.row, a.col) < std::tie(b.row, b.col);
        });
        for (auto& r : group_rows) {
            ds.rows.push_back(std::move(r));
        }
    }

    if (labels) {
        for (const auto& [key, value] : *labels) {
            if (groups.count(std::get<0>(key)) && !known_pixels.count(key)) {
                throw ValidationError("orphan label: " + std::get<0>(key) + " row " +
                                      std::to_string(std::get<1>(key)) + " col " + std::to_string(std::get<2>(key)));
            }
        }
    }
    rep.rows = ds.rows.size();
    if (report) {
        *report = rep;
    }
    return ds;
}

std::string to_label_csv(const LabelTable& labels) {
    std::string out = "group_id,row,col,label\n";
    for (const auto& [key, value] : labels) {
        out += std::get<0>(key) + ',' + std::to_string(std::get<1>(key)) + ',' + std::to_string(std::get<2>(key)) +
               ',' + std::to_string(value) + '\n';
    }
    return out;
}

LabelTable parse_label_csv(std::string_view text) {
    const auto table = io::parse_csv(text, "label csv");
    table.require_header({"group_id", "row", "col", "label"}, "label csv");
    LabelTable out;
    for (const auto& row : table.rows) {
        const auto label = io::parse_int(row[3], "label");
        if (label != 0 && label != 1) {
            throw ValidationError("label csv: label must be 0 or 1");
        }
        if (row[0].empty()) {
            throw ValidationError("label csv: empty group_id");
        }
        out[{row[0], static_cast<int>(io::parse_int(row[1], "row")), static_cast<int>(io::parse_int(row[2], "col"))}] =
            static_cast<int>(label);
    }
    return out;
}

std::string to_dataset_csv(const LabeledDataset& dataset) {
    std::string out = "group_id,row,col";
    for (const auto& name : feature_names(dataset.n_levels, dataset.n_subsectors)) {
        out += ',' + name;
    }
    out += ",moran_high,label\n";
    for (const auto& r : dataset.rows) {
        out += r.group_id + ',' + std::to_string(r.row) + ',' + std::to_string(r.col);
        for (double v : r.features) {
            out += ',' + io::format_double(v);
        }
        out += ',' + io::format_double(r.moran_high) + ',';
        if (r.label) {
            out += std::to_string(*r.label);
        }
        out += '\n';
    }
    return out;
}

LabeledDataset parse_dataset_csv(std::string_view text) {
    const auto table = io::parse_csv(text, "dataset csv");
    const auto& h = table.header;
    const auto level_count = std::count_if(h.begin(), h.end(), [](const std::string& s) { return s.rfind("level_", 0) == 0; });
    const auto sub_count =
        std::count_if(h.begin(), h.end(), [](const std::string& s) { return s.rfind("subsector_", 0) == 0; });
    LabeledDataset ds;
    ds.n_levels = static_cast<int>(level_count);
    ds.n_subsectors = static_cast<int>(sub_count);
    std::vector<std::string> expected{"group_id", "row", "col"};
    for (const auto& n : feature_names(ds.n_levels, ds.n_subsectors)) {
        expected.push_back(n);
    }
    expected.push_back("moran_high");
    expected.push_back("label");
    table.require_header(expected, "dataset csv");
    const std::size_t nf = ds.n_features();
    for (const auto& row : table.rows) {
        FeatureRow r;
        r.group_id = row[0];
        if (r.group_id.empty()) {
            throw ValidationError("dataset csv: empty group_id");
        }
        r.row = static_cast<int>(io::parse_int(row[1], "row"));
        r.col = static_cast<int>(io::parse_int(row[2], "col"));
        r.features.resize(nf);
        for (std::size_t j = 0; j < nf; ++j) {
            r.features[j] = io::parse_double(row[3 + j], "feature");
        }
        r.moran_high = io::parse_double(row[3 + nf], "moran_high");
        const auto& lab = row[4 + nf];
        if (!lab.empty()) {
            const auto v = io::parse_int(lab, "label");
            if (v != 0 && v != 1) {
                throw ValidationError("dataset csv: label must be 0, 1, or empty");
            }
            r.label = static_cast<int>(v);
        }
        ds.rows.push_back(std::move(r));
    }
    return ds;
}

}  // namespace plumeseg
