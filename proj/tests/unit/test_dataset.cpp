#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <set>

#include "oracles.hpp"
#include "plumeseg/dataset.hpp"
#include "plumeseg/enhance.hpp"
#include "plumeseg/pipeline.hpp"
#include "plumeseg/synth.hpp"

using namespace plumeseg;

namespace {

constexpr Timestamp kT0 = 1622550600;

ShipCandidate candidate(Mmsi mmsi, double speed_kt, GeoPoint center) {
    ShipCandidate c;
    c.info = {mmsi, 100.0, speed_kt * kKnotInMs};
    c.image_center = center;
    return c;
}

// Connected components by depth-first search, then the fastest (smallest mmsi on ties).
std::set<Mmsi> select_oracle(const std::vector<ShipCandidate>& cands, double min_kt, double radius) {
    std::vector<const ShipCandidate*> fast;
    for (const auto& c : cands) {
        if (c.info.speed_ms > min_kt * kKnotInMs) {
            fast.push_back(&c);
        }
    }
    std::vector<int> comp(fast.size(), -1);
    int n_comp = 0;
    for (std::size_t s = 0; s < fast.size(); ++s) {
        if (comp[s] >= 0) {
            continue;
        }
        std::vector<std::size_t> stack{s};
        comp[s] = n_comp;
        while (!stack.empty()) {
            const auto a = stack.back();
            stack.pop_back();
            for (std::size_t b = 0; b < fast.size(); ++b) {
                const auto& pa = fast[a]->image_center;
                const auto& pb = fast[b]->image_center;
                if (comp[b] < 0 && std::hypot(pa.lat - pb.lat, pa.lon - pb.lon) <= radius) {
                    comp[b] = n_comp;
                    stack.push_back(b);
                }
            }
        }
        ++n_comp;
    }
    std::set<Mmsi> out;
    for (int k = 0; k < n_comp; ++k) {
        const ShipCandidate* best = nullptr;
        for (std::size_t i = 0; i < fast.size(); ++i) {
            if (comp[i] != k) {
                continue;
            }
            if (!best || fast[i]->info.speed_ms > best->info.speed_ms ||
                (fast[i]->info.speed_ms == best->info.speed_ms && fast[i]->info.mmsi < best->info.mmsi)) {
                best = fast[i];
            }
        }
        out.insert(best->info.mmsi);
    }
    return out;
}

ShipImage tiny_image(const std::string& gid, WindVector wind, int n_pixels) {
    ShipImage img;
    img.group_id = gid;
    img.ship = {1, 150.0, 8.0};
    img.wind = wind;
    img.window = {10, 20, 4, 4};
    img.no2 = GridImage(GridSpec{0, 0, 1.0, 4, 4});
    img.moran = img.no2;
    img.moran_high = img.no2;
    for (int i = 0; i < 16; ++i) {
        img.no2.set(i / 4, i % 4, i);
        img.moran.set(i / 4, i % 4, -i);
        img.moran_high.set(i / 4, i % 4, 2 * i);
    }
    for (int i = 0; i < n_pixels; ++i) {
        NormalizedPixel px;
        px.row = i / 4;
        px.col = i % 4;
        px.level = 1 + i % 5;
        px.sub_sector = 1 + (i / 2) % 5;
        img.pixels.push_back(px);
    }
    return img;
}

}  // namespace

TEST_SUITE("dataset") {
    TEST_CASE("speed filter is strict") {
        const std::vector<ShipCandidate> c{candidate(1, 14.0, {0, 0}), candidate(2, 14.01, {5, 5})};
        const auto kept = select_ships(c);
        REQUIRE(kept.size() == 1);
        CHECK(kept[0].info.mmsi == 2);
    }

    TEST_CASE("nearby ships keep the fastest") {
        const std::vector<ShipCandidate> c{candidate(1, 16.0, {0, 0}), candidate(2, 18.0, {0.1, 0})};
        const auto kept = select_ships(c);
        REQUIRE(kept.size() == 1);
        CHECK(kept[0].info.mmsi == 2);
    }

    TEST_CASE("selection equals the clustering oracle") {
        std::mt19937_64 rng(41);
        std::uniform_real_distribution<double> pos(0.0, 3.0);
        std::uniform_real_distribution<double> kt(10.0, 25.0);
        for (int trial = 0; trial < 100; ++trial) {
            std::vector<ShipCandidate> c;
            const int n = 1 + trial % 20;
            for (int i = 0; i < n; ++i) {
                c.push_back(candidate(1000 + i, std::round(kt(rng)), {pos(rng), pos(rng)}));
            }
            std::set<Mmsi> got;
            for (const auto& k : select_ships(c)) {
                got.insert(k.info.mmsi);
            }
            CHECK(got == select_oracle(c, 14.0, 0.4));
        }
    }

    TEST_CASE("group ids") {
        CHECK(make_group_id(123456789, kT0) == "123456789_2021-06-01");
    }

    TEST_CASE("one row per sector pixel, unlabeled without a label table") {
        const std::vector<ShipImage> imgs{tiny_image("a", {3, 4}, 7)};
        const auto ds = assemble(imgs, nullptr);
        REQUIRE(ds.rows.size() == 7);
        CHECK(ds.n_features() == 17);
        CHECK(feature_names().size() == 17);
        for (const auto& r : ds.rows) {
            CHECK_FALSE(r.label.has_value());
            CHECK(r.features.size() == 17);
            double onehot = 0;
            for (std::size_t j = kFirstOneHot; j < 17; ++j) {
                onehot += r.features[j];
            }
            CHECK(onehot == 2.0);
        }
        CHECK(ds.rows[3].row == 10);
        CHECK(ds.rows[3].col == 23);
        CHECK(ds.rows[3].features[kNo2] == 3.0);
        CHECK(ds.rows[3].features[kMoranI] == -3.0);
        CHECK(ds.rows[3].moran_high == 6.0);
        CHECK(ds.rows[3].features[kWindSpeed] == 5.0);
    }

    TEST_CASE("eastward wind encodes as sin 0, cos 1") {
        const std::vector<ShipImage> imgs{tiny_image("a", {6, 0}, 2)};
        const auto ds = assemble(imgs, nullptr);
        CHECK(ds.rows[0].features[kWindDirSin] == 0.0);
        CHECK(ds.rows[0].features[kWindDirCos] == 1.0);
    }

    TEST_CASE("labels: listed pixels take their value, others are negative, orphans throw") {
        const std::vector<ShipImage> imgs{tiny_image("b", {1, 1}, 5), tiny_image("a", {1, 1}, 3)};
        LabelTable labels{{{"b", 10, 21}, 1}, {{"zzz", 0, 0}, 1}};
        AssemblyReport rep;
        const auto ds = assemble(imgs, &labels, 5, 5, &rep);
        REQUIRE(ds.rows.size() == 8);
        CHECK(ds.rows[0].group_id == "a");
        CHECK(rep.labeled_positive == 1);
        CHECK(ds.class_counts().positive == 1);
        CHECK(ds.class_counts().negative == 7);
        CHECK(*ds.rows[4].label == 1);
        labels[{"a", 15, 15}] = 1;
        CHECK_THROWS_AS(assemble(imgs, &labels), ValidationError);
    }

    TEST_CASE("label and dataset CSV round-trip") {
        const LabelTable labels{{{"1_2021-06-01", 3, 4}, 1}, {{"2_2021-06-02", 0, 9}, 0}};
        CHECK(parse_label_csv(to_label_csv(labels)) == labels);
        const std::vector<ShipImage> imgs{tiny_image("b", {1, 2}, 5)};
        LabelTable l2{{{"b", 10, 21}, 1}};
        const auto ds = assemble(imgs, &l2);
        const auto text = to_dataset_csv(ds);
        CHECK(to_dataset_csv(parse_dataset_csv(text)) == text);
        CHECK(to_dataset_csv(assemble(imgs, nullptr)) == to_dataset_csv(parse_dataset_csv(to_dataset_csv(assemble(imgs, nullptr)))));
    }
}

TEST_SUITE("pipeline") {
    TEST_CASE("features of a synthetic scene equal values recomputed from the raw inputs") {
        SceneConfig cfg;
        cfg.seed = 77;
        const auto scene = generate_scene(cfg);
        const auto inputs = to_scene_inputs(scene);
        const auto images = build_ship_images(inputs, PipelineParams{});
        REQUIRE(images.size() == scene.ships.size());
        const auto ds = assemble(images, nullptr);

        std::size_t checked = 0;
        for (const auto& ship : scene.ships) {
            const auto gid = make_group_id(ship.info.mmsi, cfg.t_overpass);
            const auto img = std::find_if(images.begin(), images.end(), [&](const auto& i) { return i.group_id == gid; });
            REQUIRE(img != images.end());
            // crop recomputed from the track center
            const auto records = group_by_ship(inputs.ais).at(ship.info.mmsi);
            const auto track = interpolate_track(records, cfg.t_overpass);
            const auto origin = track.points.back().position();
            const auto wind = inputs.wind.nearest(cfg.t_overpass, origin.lat, origin.lon);
            const auto shifted = wind_shift(track, wind, cfg.t_overpass);
            double clat = 0;
            double clon = 0;
            for (const auto& p : shifted.points) {
                clat += p.lat;
                clon += p.lon;
            }
            clat /= static_cast<double>(shifted.points.size());
            clon /= static_cast<double>(shifted.points.size());
            const auto window = crop_window(inputs.grid.spec, clat, clon, 0.4);
            const auto crop_img = extract(inputs.grid, window);
            const auto moran = testing::moran_dense(crop_img);
            const auto sector = make_sector(track, wind, cfg.t_overpass);
            const double speed_ms = speed_at(records, cfg.t_overpass) * kKnotInMs;

            for (const auto& row : ds.rows) {
                if (row.group_id != gid) {
                    continue;
                }
                const int r = row.row - window.row0;
                const int c = row.col - window.col0;
                const auto center = inputs.grid.spec.cell_center(row.row, row.col);
                CHECK(testing::inside_polygon_north_ray(sector.polygon, center));
                CHECK(row.features[kNo2] == inputs.grid.at(row.row, row.col));
                CHECK(row.features[kMoranI] == doctest::Approx(moran.at(r, c)).epsilon(1e-9).scale(1.0));
                CHECK(row.features[kWindSpeed] == doctest::Approx(std::hypot(wind.u, wind.v)));
                CHECK(row.features[kWindDirSin] == doctest::Approx(wind.v / std::hypot(wind.u, wind.v)));
                CHECK(row.features[kWindDirCos] == doctest::Approx(wind.u / std::hypot(wind.u, wind.v)));
                CHECK(row.features[kShipSpeed] == doctest::Approx(speed_ms));
                CHECK(row.features[kShipLength] == inputs.lengths.at(ship.info.mmsi));
                ++checked;
            }
        }
        CHECK(checked == ds.rows.size());
    }

    TEST_CASE("preparation report counts skipped ships") {
        SceneConfig cfg;
        cfg.seed = 5;
        auto inputs = to_scene_inputs(generate_scene(cfg));
        inputs.lengths.erase(inputs.lengths.begin());
        PreparationReport rep;
        const auto images = build_ship_images(inputs, PipelineParams{}, &rep);
        CHECK(rep.ships_seen == 3);
        CHECK(rep.no_length == 1);
        CHECK(images.size() == 2);
    }

    TEST_CASE("image center is the mean of the wind-shifted track") {
        WindShiftedTrack s;
        s.points = {{0, 1.0, 2.0}, {1, 3.0, 6.0}};
        const auto c = track_center(s);
        CHECK(c.lat == 2.0);
        CHECK(c.lon == 4.0);
    }
}
