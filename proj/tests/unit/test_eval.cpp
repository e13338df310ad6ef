#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include <json.hpp>

#include "oracles.hpp"
#include "plumeseg/eval.hpp"

using namespace plumeseg;

namespace {

void random_instance(std::mt19937_64& rng, std::size_t n, std::vector<int>& y, std::vector<double>& s) {
    std::uniform_int_distribution<int> level(0, 20);
    std::bernoulli_distribution coin(0.35);
    y.resize(n);
    s.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        y[i] = coin(rng) ? 1 : 0;
        s[i] = level(rng) / 20.0;  // coarse so ties occur
    }
    y[0] = 1;
}

}  // namespace

TEST_SUITE("eval") {
    TEST_CASE("confusion metrics") {
        const std::vector<int> y{1, 0, 1, 1, 0};
        const auto perfect = pr_metrics(y, y);
        CHECK(perfect.precision == 1.0);
        CHECK(perfect.recall == 1.0);
        CHECK(perfect.f1 == 1.0);
        const auto none = pr_metrics(y, std::vector<int>(5, 0));
        CHECK(none.precision == 0.0);
        CHECK(none.recall == 0.0);
        CHECK(none.f1 == 0.0);
        std::mt19937_64 rng(61);
        std::bernoulli_distribution coin(0.4);
        for (int t = 0; t < 200; ++t) {
            std::vector<int> a(50);
            std::vector<int> b(50);
            for (std::size_t i = 0; i < 50; ++i) {
                a[i] = coin(rng);
                b[i] = coin(rng);
            }
            const auto m = pr_metrics(a, b);
            const auto o = testing::confusion_oracle(a, b);
            CHECK(m.precision == doctest::Approx(o.precision).epsilon(1e-15));
            CHECK(m.recall == doctest::Approx(o.recall).epsilon(1e-15));
            CHECK(m.f1 == doctest::Approx(o.f1).epsilon(1e-15));
        }
    }

    TEST_CASE("average precision special cases") {
        const std::vector<int> y{0, 1, 0, 1, 1, 0, 0};
        CHECK(average_precision(y, std::vector<double>{0.1, 0.9, 0.2, 0.8, 0.7, 0.3, 0.0}) == 1.0);
        CHECK(average_precision(y, std::vector<double>(7, 0.4)) == doctest::Approx(3.0 / 7.0).epsilon(1e-15));
        // one positive ranked second: P = 1/2 at recall 1
        CHECK(average_precision(std::vector<int>{0, 1}, std::vector<double>{0.9, 0.1}) == 0.5);
    }

    TEST_CASE("average precision equals the definition-unrolled oracle") {
        std::mt19937_64 rng(62);
        std::uniform_int_distribution<std::size_t> len(1, 500);
        for (int t = 0; t < 200; ++t) {
            std::vector<int> y;
            std::vector<double> s;
            random_instance(rng, len(rng), y, s);
            CHECK(std::abs(average_precision(y, s) - testing::ap_oracle(y, s)) <= 1e-12);
        }
    }

    TEST_CASE("PR curve: one point per distinct score, recall nondecreasing to 1") {
        std::mt19937_64 rng(63);
        std::vector<int> y;
        std::vector<double> s;
        random_instance(rng, 300, y, s);
        const auto curve = pr_curve(y, s);
        CHECK(curve.size() == std::set<double>(s.begin(), s.end()).size());
        for (std::size_t i = 1; i < curve.size(); ++i) {
            CHECK(curve[i].recall >= curve[i - 1].recall);
            CHECK(curve[i].threshold < curve[i - 1].threshold);
        }
        CHECK(curve.back().recall == 1.0);
        const auto csv = to_pr_curve_csv(curve);
        CHECK(csv.rfind("threshold,precision,recall\n", 0) == 0);
    }

    TEST_CASE("group folds") {
        const std::vector<std::string> g{"a", "b", "c", "d", "e", "a", "c"};
        const auto folds = assign_group_folds(g, 5, 3);
        std::set<int> used;
        for (const auto& [k, f] : folds) {
            used.insert(f);
        }
        CHECK(folds.size() == 5);
        CHECK(used.size() == 5);
        CHECK_THROWS_AS(assign_group_folds(g, 6, 3), ValidationError);
        CHECK_THROWS_AS(assign_group_folds(g, 1, 3), ValidationError);
        CHECK(assign_group_folds(g, 3, 8) == assign_group_folds(g, 3, 8));
    }

    TEST_CASE("five groups, five folds: leave one group out") {
        std::mt19937_64 rng(64);
        const auto ds = testing::grouped_dataset(rng, 5, 30);
        std::vector<std::string> groups;
        for (const auto& r : ds.rows) {
            groups.push_back(r.group_id);
        }
        for (const auto& ns : nested_splits(groups, 5, 2, 1)) {
            std::set<std::string> test;
            for (const auto i : ns.outer.test) {
                test.insert(groups[i]);
            }
            CHECK(test.size() == 1);
            CHECK(ns.outer.test.size() == 30);
        }
    }

    TEST_CASE("no group appears in both train and test of any split") {
        std::mt19937_64 rng(65);
        const auto ds = testing::grouped_dataset(rng, 23, 12);
        std::vector<std::string> groups;
        for (const auto& r : ds.rows) {
            groups.push_back(r.group_id);
        }
        for (const std::uint64_t seed : {0ULL, 1ULL, 99ULL}) {
            const auto plan = nested_splits(groups, 5, 4, seed);
            std::vector<int> covered(groups.size(), 0);
            for (const auto& ns : plan) {
                auto check = [&](const Split& sp) {
                    std::set<std::string> tr;
                    std::set<std::string> te;
                    for (const auto i : sp.train) {
                        tr.insert(groups[i]);
                    }
                    for (const auto i : sp.test) {
                        te.insert(groups[i]);
                    }
                    for (const auto& g : te) {
                        CHECK(tr.count(g) == 0);
                    }
                };
                check(ns.outer);
                std::set<std::size_t> outer_train(ns.outer.train.begin(), ns.outer.train.end());
                for (const auto& in : ns.inner) {
                    check(in);
                    CHECK(in.train.size() + in.test.size() == ns.outer.train.size());
                    for (const auto i : in.test) {
                        CHECK(outer_train.count(i) == 1);
                    }
                }
                for (const auto i : ns.outer.test) {
                    ++covered[i];
                }
            }
            CHECK(std::all_of(covered.begin(), covered.end(), [](int c) { return c == 1; }));
        }
    }

    TEST_CASE("one candidate reduces to plain group k-fold") {
        std::mt19937_64 rng(66);
        const auto ds = testing::grouped_dataset(rng, 10, 40);
        SearchSpace space;
        space.gbt_defaults.n_trees = 10;
        CVConfig cfg;
        cfg.seed = 4;
        const auto report = nested_cv(ds, ModelFamily::gbt, space, cfg);
        std::vector<std::string> groups;
        for (const auto& r : ds.rows) {
            groups.push_back(r.group_id);
        }
        const auto folds = assign_group_folds(groups, 5, 4);
        REQUIRE(report.folds.size() == 5);
        for (int k = 0; k < 5; ++k) {
            LabeledDataset train;
            LabeledDataset test;
            for (const auto& r : ds.rows) {
                (folds.at(r.group_id) == k ? test : train).rows.push_back(r);
            }
            const auto m = fit_gbt(train, space.gbt_defaults);
            const auto y = to_labels(test.rows);
            const double ap = average_precision(y, predict_scores(Model{m}, test.rows));
            CHECK(report.folds[static_cast<std::size_t>(k)].metrics.ap == ap);
            CHECK(std::isnan(report.folds[static_cast<std::size_t>(k)].inner_score));
        }
        CHECK(report.oof_scores.size() == ds.rows.size());
        CHECK(report.pooled_ap == average_precision(report.oof_labels, report.oof_scores));
    }

    TEST_CASE("candidate search picks a candidate and the report is deterministic") {
        std::mt19937_64 rng(67);
        const auto ds = testing::grouped_dataset(rng, 12, 30);
        SearchSpace space;
        space.gbt.n_trees = 10;
        CVConfig cfg;
        cfg.n_outer = 3;
        cfg.n_inner = 3;
        cfg.n_candidates = 3;
        cfg.seed = 11;
        const auto a = nested_cv(ds, ModelFamily::logistic, space, cfg);
        const auto b = nested_cv(ds, ModelFamily::logistic, space, cfg);
        CHECK(to_report_json(a) == to_report_json(b));
        const auto j = nlohmann::json::parse(to_report_json(a));
        CHECK(j["model"] == "logistic");
        CHECK(j["folds"].size() == 3);
        CHECK(j["summary"]["ap"]["mean"].get<double>() == doctest::Approx(a.ap.mean));
        const auto t = nested_cv(ds, ModelFamily::moran_on_high, space, cfg);
        CHECK(t.folds[0].inner_score != t.folds[0].inner_score);  // single threshold candidate
        CHECK(nested_cv(ds, ModelFamily::gbt, space, cfg).folds.size() == 3);
    }

    TEST_CASE("candidate 0 is the default") {
        SearchSpace space;
        const auto c = sample_candidates(ModelFamily::gbt, space, 4, 1, 100);
        REQUIRE(c.size() == 4);
        CHECK(std::get<GBTParams>(c[0]).n_trees == space.gbt_defaults.n_trees);
        CHECK(std::get<GBTParams>(c[1]).n_trees == space.gbt.n_trees);
        CHECK(sample_candidates(ModelFamily::no2, space, 4, 1, 100).size() == 1);
    }

    TEST_CASE("model family names") {
        for (const auto f : {ModelFamily::no2, ModelFamily::moran, ModelFamily::moran_on_high, ModelFamily::logistic,
                             ModelFamily::gbt}) {
            CHECK(model_family_from_string(to_string(f)) == f);
        }
        CHECK(model_family_from_string("moran_on_high") == ModelFamily::moran_on_high);
        CHECK_THROWS_AS(model_family_from_string("svm"), ValidationError);
    }

    TEST_CASE("emission proxy") {
        CHECK(emission_proxy({1, 200.0, 8.0}).e_s == 20480000.0);
        CHECK(emission_proxy({1, 200.0, 0.0}).e_s == 0.0);
        CHECK(emission_proxy({1, 120.0, 14.0}).e_s == 8.0 * emission_proxy({1, 120.0, 7.0}).e_s);
    }

    TEST_CASE("pearson") {
        const std::vector<double> a{1, 2, 3, 4};
        const std::vector<double> b{2, 4, 6, 8};
        CHECK(pearson(a, b) == doctest::Approx(1.0).epsilon(1e-15));
        CHECK_THROWS_WITH_AS(pearson(a, std::vector<double>(4, 3.0)), "zero variance", ValidationError);
        std::mt19937_64 rng(68);
        std::normal_distribution<double> z(0, 1);
        for (int t = 0; t < 100; ++t) {
            std::vector<double> x(30);
            std::vector<double> y(30);
            for (std::size_t i = 0; i < 30; ++i) {
                x[i] = z(rng);
                y[i] = 0.5 * x[i] + z(rng);
            }
            CHECK(pearson(x, y) == doctest::Approx(testing::pearson_oracle(x, y)).epsilon(1e-12));
        }
    }

    TEST_CASE("ship estimates and proxy correlation") {
        std::vector<FeatureRow> rows;
        auto add = [&](const std::string& g, double no2) {
            FeatureRow r;
            r.group_id = g;
            r.features.assign(17, 0.0);
            r.features[kNo2] = no2;
            rows.push_back(r);
        };
        add("1_2021-06-01", 1.0);
        add("1_2021-06-01", 2.0);
        add("2_2021-06-01", 5.0);
        add("3_2021-06-02", 7.0);
        add("4_2021-06-02", 9.0);
        const std::vector<int> pred{1, 1, 1, 0, 1};
        const auto est = ship_estimates(rows, pred);
        REQUIRE(est.size() == 4);
        CHECK(est[0].mmsi == 1);
        CHECK(est[0].date == "2021-06-01");
        CHECK(est[0].no2_sum == 3.0);
        CHECK(est[2].n_plume_pixels == 0);
        const ProxyTable proxies{{"1_2021-06-01", 6.0}, {"2_2021-06-01", 10.0}, {"3_2021-06-02", 1.0},
                                 {"4_2021-06-02", 18.0}};
        const auto c = proxy_correlation(est, proxies);
        CHECK(c.n_used == 3);
        CHECK(c.n_excluded == 1);
        CHECK(c.r == doctest::Approx(1.0));
        const auto csv = to_proxy_csv(est, proxies);
        CHECK(csv.rfind("mmsi,date,no2_sum,e_s\n", 0) == 0);
    }
}
