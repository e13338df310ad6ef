#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "oracles.hpp"
#include "plumeseg/models.hpp"

using namespace plumeseg;

namespace {

struct Xy {
    Matrix x;
    std::vector<int> y;
};

// Labels from a noisy linear rule over the first two columns.
Xy noisy_linear(std::mt19937_64& rng, std::size_t n, std::size_t d, double noise) {
    Xy out{Matrix(n, d), std::vector<int>(n)};
    std::normal_distribution<double> z(0.0, 1.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d; ++j) {
            out.x(i, j) = z(rng);
        }
        out.y[i] = out.x(i, 0) - 0.5 * out.x(i, 1) + noise * z(rng) > 0.3 ? 1 : 0;
    }
    return out;
}

std::vector<FeatureRow> rows_from(const Matrix& x, const std::vector<int>& y) {
    std::vector<FeatureRow> rows(x.rows);
    for (std::size_t i = 0; i < x.rows; ++i) {
        rows[i].group_id = "g" + std::to_string(i % 5);
        rows[i].features.assign(x.row(i).begin(), x.row(i).end());
        rows[i].moran_high = x(i, 0) * 2;
        rows[i].label = y[i];
    }
    return rows;
}

double weighted_logloss(const GBTModel& m, const Matrix& x, const std::vector<int>& y, std::size_t n_trees) {
    double loss = 0.0;
    for (std::size_t i = 0; i < x.rows; ++i) {
        double margin = 0.0;
        for (std::size_t t = 0; t < n_trees; ++t) {
            margin += m.trees[t].predict(x.row(i));
        }
        const double p = sigmoid(margin);
        const double w = y[i] ? m.w_pos : m.w_neg;
        loss -= w * (y[i] ? std::log(p) : std::log(1.0 - p));
    }
    return loss;
}

}  // namespace

TEST_SUITE("models") {
    TEST_CASE("separable feature: F1 = 1 at the smallest midpoint in the gap") {
        const std::vector<double> v{0.1, 0.2, 0.3, 1.0, 1.5, 2.0};
        const std::vector<int> y{0, 0, 0, 1, 1, 1};
        const double t = best_f1_threshold(v, y);
        CHECK(t == doctest::Approx(0.65));
        CHECK(testing::f1_at(v, y, t) == 1.0);
        CHECK_THROWS_AS(best_f1_threshold(v, std::vector<int>(6, 1)), ValidationError);
    }

    TEST_CASE("best threshold equals the exhaustive scan") {
        std::mt19937_64 rng(51);
        std::normal_distribution<double> z(0.0, 1.0);
        std::bernoulli_distribution coin(0.3);
        for (int trial = 0; trial < 100; ++trial) {
            const std::size_t n = 5 + static_cast<std::size_t>(trial) * 3;
            std::vector<double> v(n);
            std::vector<int> y(n);
            for (std::size_t i = 0; i < n; ++i) {
                v[i] = std::round(z(rng) * 4) / 4;
                y[i] = coin(rng) ? 1 : 0;
            }
            y[0] = 1;
            y[1] = 0;
            const auto [t_oracle, f1_oracle] = testing::threshold_scan_oracle(v, y);
            const double t = best_f1_threshold(v, y);
            CHECK(testing::f1_at(v, y, t) == doctest::Approx(f1_oracle).epsilon(1e-12));
            CHECK(t == t_oracle);
        }
    }

    TEST_CASE("threshold model predictions are elementwise comparisons") {
        std::mt19937_64 rng(52);
        auto d = noisy_linear(rng, 200, 17, 0.5);
        LabeledDataset ds;
        ds.rows = rows_from(d.x, d.y);
        for (const auto f : {ThresholdFeature::no2, ThresholdFeature::moran, ThresholdFeature::moran_on_high}) {
            const auto m = fit_threshold(ds, f);
            const auto labels = predict_labels(Model{m}, ds.rows);
            const auto scores = predict_scores(Model{m}, ds.rows);
            for (std::size_t i = 0; i < ds.rows.size(); ++i) {
                const double v = threshold_feature_value(ds.rows[i], f);
                CHECK(scores[i] == v);
                CHECK(labels[i] == (v >= m.threshold ? 1 : 0));
            }
        }
        CHECK(threshold_feature_value(ds.rows[0], ThresholdFeature::no2) == ds.rows[0].features[kNo2]);
        CHECK(threshold_feature_value(ds.rows[0], ThresholdFeature::moran) == ds.rows[0].features[kMoranI]);
    }

    TEST_CASE("logistic gradient matches central differences") {
        std::mt19937_64 rng(53);
        auto d = noisy_linear(rng, 60, 6, 1.0);
        std::vector<double> w(60);
        std::uniform_real_distribution<double> u(0.5, 2.0);
        for (auto& v : w) {
            v = u(rng);
        }
        LogisticObjective obj{&d.x, d.y, w, 0.01};
        std::normal_distribution<double> z(0.0, 1.0);
        for (int trial = 0; trial < 50; ++trial) {
            std::vector<double> theta(7);
            for (auto& t : theta) {
                t = z(rng);
            }
            std::vector<double> grad(7);
            obj.loss_and_grad(theta, grad);
            for (std::size_t j = 0; j < theta.size(); ++j) {
                auto tp = theta;
                auto tm = theta;
                tp[j] += 1e-5;
                tm[j] -= 1e-5;
                CHECK(std::abs(grad[j] - (obj.loss(tp) - obj.loss(tm)) / 2e-5) < 1e-6);
            }
        }
    }

    TEST_CASE("logistic learns the separating direction in 1-D") {
        Matrix x(20, 1);
        std::vector<int> y(20);
        for (std::size_t i = 0; i < 20; ++i) {
            x(i, 0) = static_cast<double>(i);
            y[i] = i >= 10 ? 0 : 1;
        }
        const auto m = fit_logistic(x, y);
        CHECK(m.weights[0] < 0.0);
    }

    TEST_CASE("class weights equal duplicating the minority class") {
        std::mt19937_64 rng(54);
        // 30 positives, 90 negatives
        Matrix x(120, 2);
        std::vector<int> y(120);
        std::normal_distribution<double> z(0.0, 1.0);
        for (std::size_t i = 0; i < 120; ++i) {
            y[i] = i < 30 ? 1 : 0;
            x(i, 0) = z(rng) + (y[i] ? 1.0 : 0.0);
            x(i, 1) = z(rng);
        }
        Matrix dup(180, 2);
        std::vector<int> ydup(180);
        std::size_t k = 0;
        for (std::size_t i = 0; i < 120; ++i) {
            const int copies = y[i] ? 3 : 1;
            for (int c = 0; c < copies; ++c, ++k) {
                dup(k, 0) = x(i, 0);
                dup(k, 1) = x(i, 1);
                ydup[k] = y[i];
            }
        }
        LogisticParams p;
        p.l2 = 0.0;
        p.max_iter = 200000;
        p.tol = 1e-12;
        const auto weighted = fit_logistic(x, y, p);
        p.balanced = false;
        const auto unit = fit_logistic(dup, ydup, p);
        const auto rows = rows_from(x, y);
        const auto sw = predict_scores(Model{weighted}, rows);
        const auto su = predict_scores(Model{unit}, rows);
        for (std::size_t i = 0; i < rows.size(); ++i) {
            CHECK(sw[i] == doctest::Approx(su[i]).epsilon(1e-4));
        }
    }

    TEST_CASE("zero-weight logistic scores 0.5") {
        LogisticModel m;
        m.weights.assign(3, 0.0);
        m.mean.assign(3, 0.0);
        m.stddev.assign(3, 1.0);
        FeatureRow r;
        r.features = {1, 2, 3};
        const std::vector<FeatureRow> rows{r, r};
        for (const double s : predict_scores(Model{m}, rows)) {
            CHECK(s == 0.5);
        }
    }

    TEST_CASE("a single stump splits at the step") {
        Matrix x(40, 1);
        std::vector<int> y(40);
        for (std::size_t i = 0; i < 40; ++i) {
            x(i, 0) = static_cast<double>(i);
            y[i] = i >= 25 ? 1 : 0;
        }
        GBTParams p;
        p.n_trees = 1;
        p.max_depth = 1;
        const auto m = fit_gbt(x, y, p);
        REQUIRE(m.trees.size() == 1);
        const auto& root = m.trees[0].nodes[0];
        CHECK(root.feature == 0);
        CHECK(root.threshold == 24.5);
        CHECK(m.trees[0].depth() == 1);
    }

    TEST_CASE("leaf values equal -G/(H+lambda) * eta from an independent pass") {
        std::mt19937_64 rng(55);
        for (const bool balanced : {false, true}) {
            auto d = noisy_linear(rng, 300, 4, 0.7);
            GBTParams p;
            p.n_trees = 4;
            p.max_depth = 3;
            p.learning_rate = 0.3;
            p.balanced = balanced;
            const auto m = fit_gbt(d.x, d.y, p);
            std::vector<double> margin(d.x.rows, 0.0);
            for (const auto& tree : m.trees) {
                std::vector<double> G(tree.nodes.size(), 0.0);
                std::vector<double> H(tree.nodes.size(), 0.0);
                for (std::size_t i = 0; i < d.x.rows; ++i) {
                    const double w = d.y[i] ? m.w_pos : m.w_neg;
                    const double prob = 1.0 / (1.0 + std::exp(-margin[i]));
                    const auto leaf = static_cast<std::size_t>(tree.leaf_index(d.x.row(i)));
                    G[leaf] += w * (prob - d.y[i]);
                    H[leaf] += w * prob * (1.0 - prob);
                }
                for (std::size_t n = 0; n < tree.nodes.size(); ++n) {
                    if (tree.nodes[n].feature < 0 && H[n] > 0.0) {
                        CHECK(tree.nodes[n].value == doctest::Approx(-G[n] / (H[n] + 1.0) * 0.3).epsilon(1e-10));
                    }
                }
                for (std::size_t i = 0; i < d.x.rows; ++i) {
                    margin[i] += tree.predict(d.x.row(i));
                }
            }
        }
    }

    TEST_CASE("training loss never rises as trees are added") {
        std::mt19937_64 rng(56);
        auto d = noisy_linear(rng, 400, 5, 0.8);
        GBTParams p;
        p.n_trees = 30;
        p.max_depth = 3;
        p.balanced = false;
        const auto m = fit_gbt(d.x, d.y, p);
        double prev = weighted_logloss(m, d.x, d.y, 0);
        for (std::size_t t = 1; t <= m.trees.size(); ++t) {
            const double cur = weighted_logloss(m, d.x, d.y, t);
            CHECK(cur <= prev + 1e-9);
            prev = cur;
        }
    }

    TEST_CASE("GBT scores equal the traversal oracle") {
        std::mt19937_64 rng(57);
        auto d = noisy_linear(rng, 250, 17, 0.5);
        GBTParams p;
        p.n_trees = 20;
        p.subsample = 0.8;
        p.colsample_bytree = 0.7;
        p.colsample_bylevel = 0.8;
        p.reg_alpha = 0.01;
        p.seed = 3;
        const auto m = fit_gbt(d.x, d.y, p);
        const auto rows = rows_from(d.x, d.y);
        const auto scores = predict_scores(Model{m}, rows);
        for (std::size_t i = 0; i < rows.size(); ++i) {
            CHECK(scores[i] == doctest::Approx(testing::gbt_score_oracle(m, d.x.row(i))).epsilon(1e-12));
        }
    }

    TEST_CASE("fits are deterministic for a fixed seed") {
        std::mt19937_64 rng(58);
        auto d = noisy_linear(rng, 200, 6, 0.5);
        GBTParams p;
        p.n_trees = 10;
        p.subsample = 0.7;
        p.seed = 9;
        CHECK(to_model_json(Model{fit_gbt(d.x, d.y, p)}) == to_model_json(Model{fit_gbt(d.x, d.y, p)}));
    }

    TEST_CASE("model JSON round-trip") {
        std::mt19937_64 rng(59);
        auto d = noisy_linear(rng, 150, 17, 0.5);
        LabeledDataset ds;
        ds.rows = rows_from(d.x, d.y);
        GBTParams gp;
        gp.n_trees = 5;
        const std::vector<Model> models{Model{fit_threshold(ds, ThresholdFeature::moran_on_high)},
                                        Model{fit_logistic(ds)}, Model{fit_gbt(ds, gp)}};
        for (const auto& m : models) {
            const auto text = to_model_json(m);
            const auto back = parse_model_json(text);
            CHECK(model_type(back) == model_type(m));
            CHECK(to_model_json(back) == text);
            CHECK(predict_scores(back, ds.rows) == predict_scores(m, ds.rows));
        }
        CHECK_THROWS_AS(parse_model_json("{\"type\":\"forest\"}"), ValidationError);
    }
}
