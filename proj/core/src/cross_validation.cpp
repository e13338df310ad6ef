#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <set>

#include <json.hpp>

#include "plumeseg/eval.hpp"

namespace plumeseg {

using json = nlohmann::ordered_json;

std::map<std::string, int> assign_group_folds(std::span<const std::string> groups, int n_folds, std::uint64_t seed) {
    if (n_folds < 2) {
        throw ValidationError("fold count must be >= 2");
    }
    std::set<std::string> unique(groups.begin(), groups.end());
    if (unique.size() < static_cast<std::size_t>(n_folds)) {
        throw ValidationError("group count (" + std::to_string(unique.size()) + ") is smaller than fold count (" +
                              std::to_string(n_folds) + ")");
    }
    std::vector<std::string> order(unique.begin(), unique.end());
    std::mt19937_64 rng(seed);
    for (std::size_t i = order.size(); i > 1; --i) {
        std::swap(order[i - 1], order[static_cast<std::size_t>(rng() % i)]);
    }
    std::map<std::string, int> folds;
    for (std::size_t i = 0; i < order.size(); ++i) {
        folds[order[i]] = static_cast<int>(i % static_cast<std::size_t>(n_folds));
    }
    return folds;
}

std::string to_string(ModelFamily family) {
    switch (family) {
        case ModelFamily::no2:
            return "no2";
        case ModelFamily::moran:
            return "moran";
        case ModelFamily::moran_on_high:
            return "moran-high";
        case ModelFamily::logistic:
            return "logistic";
        case ModelFamily::gbt:
            return "gbt";
    }
    return "gbt";
}

ModelFamily model_family_from_string(std::string_view name) {
    if (name == "no2") {
        return ModelFamily::no2;
    }
    if (name == "moran") {
        return ModelFamily::moran;
    }
    if (name == "moran-high" || name == "moran_on_high") {
        return ModelFamily::moran_on_high;
    }
    if (name == "logistic") {
        return ModelFamily::logistic;
    }
    if (name == "gbt") {
        return ModelFamily::gbt;
    }
    throw ValidationError("unknown model '" + std::string(name) + "' (expected no2|moran|moran-high|logistic|gbt)");
}

bool is_threshold_family(ModelFamily family) {
    return family == ModelFamily::no2 || family == ModelFamily::moran || family == ModelFamily::moran_on_high;
}

namespace {

std::uint64_t fold_seed(std::uint64_t seed, int k) {
    return seed + 0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(k + 1);
}

ThresholdFeature threshold_feature(ModelFamily family) {
    switch (family) {
        case ModelFamily::moran:
            return ThresholdFeature::moran;
        case ModelFamily::moran_on_high:
            return ThresholdFeature::moran_on_high;
        default:
            return ThresholdFeature::no2;
    }
}

double unit_uniform(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double uniform_in(std::mt19937_64& rng, std::pair<double, double> range) {
    return range.first + (range.second - range.first) * unit_uniform(rng);
}

template <typename T>
T pick(std::mt19937_64& rng, const std::vector<T>& choices) {
    if (choices.empty()) {
        throw ValidationError("empty hyperparameter choice list");
    }
    return choices[static_cast<std::size_t>(rng() % choices.size())];
}

LabeledDataset subset(const LabeledDataset& ds, const std::vector<std::size_t>& idx) {
    LabeledDataset out;
    out.n_levels = ds.n_levels;
    out.n_subsectors = ds.n_subsectors;
    out.rows.reserve(idx.size());
    for (auto i : idx) {
        out.rows.push_back(ds.rows[i]);
    }
    return out;
}

bool has_both_classes(const LabeledDataset& ds) {
    const auto cc = ds.class_counts();
    return cc.positive > 0 && cc.negative > 0;
}

// Selection score of a fitted model on held-out rows: AP, or F1 for thresholds.
double holdout_score(ModelFamily family, const Model& model, const LabeledDataset& test, double cutoff) {
    const auto y = to_labels(test.rows);
    if (is_threshold_family(family)) {
        return pr_metrics(y, predict_labels(model, test.rows, cutoff)).f1;
    }
    return average_precision(y, predict_scores(model, test.rows));
}

json hyperparams_json(const Hyperparams& hp) {
    if (const auto* lp = std::get_if<LogisticParams>(&hp)) {
        return {{"l2", lp->l2}, {"max_iter", lp->max_iter}, {"lr", lp->lr}, {"balanced", lp->balanced}};
    }
    if (const auto* gp = std::get_if<GBTParams>(&hp)) {
        return {{"n_trees", gp->n_trees},
                {"learning_rate", gp->learning_rate},
                {"max_depth", gp->max_depth},
                {"min_child_weight", gp->min_child_weight},
                {"subsample", gp->subsample},
                {"colsample_bytree", gp->colsample_bytree},
                {"colsample_bylevel", gp->colsample_bylevel},
                {"gamma", gp->gamma},
                {"reg_alpha", gp->reg_alpha},
                {"seed", gp->seed}};
    }
    return json::object();
}

json number_or_null(double v) {
    return std::isfinite(v) ? json(v) : json(nullptr);
}

MetricSummary summarize(const std::vector<double>& values) {
    MetricSummary s;
    if (values.empty()) {
        return s;
    }
    const double n = static_cast<double>(values.size());
    for (double v : values) {
        s.mean += v;
    }
    s.mean /= n;
    double ss = 0.0;
    for (double v : values) {
        ss += (v - s.mean) * (v - s.mean);
    }
    s.stdev = std::sqrt(ss / n);
    return s;
}

}  // namespace

std::vector<Hyperparams> sample_candidates(ModelFamily family, const SearchSpace& space, int n_candidates,
                                           std::uint64_t seed, std::size_t n_train_rows) {
    if (n_candidates < 1) {
        throw ValidationError("n_candidates must be >= 1");
    }
    if (is_threshold_family(family)) {
        return {std::monostate{}};
    }
    std::vector<Hyperparams> out;
    std::mt19937_64 rng(seed);
    if (family == ModelFamily::logistic) {
        out.emplace_back(space.logistic_defaults);
        for (int k = 1; k < n_candidates; ++k) {
            LogisticParams p = space.logistic_defaults;
            const double c = pick(rng, space.logistic.c_values);
            p.l2 = 1.0 / (2.0 * c * static_cast<double>(std::max<std::size_t>(n_train_rows, 1)));
            p.max_iter = pick(rng, space.logistic.max_iter);
            out.emplace_back(p);
        }
        return out;
    }
    out.emplace_back(space.gbt_defaults);
    for (int k = 1; k < n_candidates; ++k) {
        GBTParams p = space.gbt_defaults;
        const auto& s = space.gbt;
        p.n_trees = s.n_trees;
        p.gamma = uniform_in(rng, s.gamma);
        p.max_depth = pick(rng, s.max_depth);
        p.min_child_weight = pick(rng, s.min_child_weight);
        p.subsample = uniform_in(rng, s.subsample);
        p.colsample_bytree = uniform_in(rng, s.colsample_bytree);
        p.colsample_bylevel = uniform_in(rng, s.colsample_bylevel);
        p.learning_rate = pick(rng, s.learning_rate);
        p.reg_alpha = pick(rng, s.reg_alpha);
        out.emplace_back(p);
    }
    return out;
}

Model fit_family(ModelFamily family, const Hyperparams& hp, const LabeledDataset& train) {
    if (is_threshold_family(family)) {
        return fit_threshold(train, threshold_feature(family));
    }
    if (family == ModelFamily::logistic) {
        const auto* p = std::get_if<LogisticParams>(&hp);
        return fit_logistic(train, p ? *p : LogisticParams{});
    }
    const auto* p = std::get_if<GBTParams>(&hp);
    return fit_gbt(train, p ? *p : GBTParams{});
}

std::vector<NestedSplit> nested_splits(std::span<const std::string> groups, int n_outer, int n_inner,
                                       std::uint64_t seed) {
    const auto outer = assign_group_folds(groups, n_outer, seed);
    std::vector<NestedSplit> plan;
    for (int k = 0; k < n_outer; ++k) {
        NestedSplit ns;
        ns.fold = k;
        for (std::size_t i = 0; i < groups.size(); ++i) {
            (outer.at(groups[i]) == k ? ns.outer.test : ns.outer.train).push_back(i);
        }
        std::vector<std::string> train_groups;
        for (const auto i : ns.outer.train) {
            train_groups.push_back(groups[i]);
        }
        const auto inner = assign_group_folds(train_groups, n_inner, fold_seed(seed, k) ^ 0xA5A5A5A5ULL);
        for (int j = 0; j < n_inner; ++j) {
            Split sp;
            for (const auto i : ns.outer.train) {
                (inner.at(groups[i]) == j ? sp.test : sp.train).push_back(i);
            }
            ns.inner.push_back(std::move(sp));
        }
        plan.push_back(std::move(ns));
    }
    return plan;
}

CVReport nested_cv(const LabeledDataset& dataset, ModelFamily family, const SearchSpace& space,
                   const CVConfig& config) {
    const auto data = dataset.labeled_only();
    std::vector<std::string> groups;
    groups.reserve(data.rows.size());
    for (const auto& r : data.rows) {
        groups.push_back(r.group_id);
    }
    const auto plan = nested_splits(groups, config.n_outer, config.n_inner, config.seed);

    CVReport report;
    report.family = family;
    report.config = config;
    report.oof_scores.assign(data.rows.size(), 0.0);
    report.oof_predictions.assign(data.rows.size(), 0);
    report.oof_labels = to_labels(data.rows);

    std::vector<double> ps;
    std::vector<double> rs;
    std::vector<double> fs;
    std::vector<double> aps;
    for (const auto& ns : plan) {
        const int k = ns.fold;
        const auto& test_idx = ns.outer.test;
        const auto train = subset(data, ns.outer.train);
        const auto test = subset(data, test_idx);

        FoldResult fr;
        fr.fold = k;
        std::set<std::string> test_groups;
        for (const auto i : test_idx) {
            test_groups.insert(groups[i]);
        }
        fr.test_groups.assign(test_groups.begin(), test_groups.end());
        const auto candidates =
            sample_candidates(family, space, config.n_candidates, fold_seed(config.seed, k), train.rows.size());
        fr.chosen = candidates.front();
        fr.inner_score = std::numeric_limits<double>::quiet_NaN();
        if (candidates.size() > 1) {
            std::vector<std::pair<LabeledDataset, LabeledDataset>> splits;
            for (const auto& sp : ns.inner) {
                auto inner_train = subset(data, sp.train);
                auto inner_test = subset(data, sp.test);
                if (has_both_classes(inner_train) && inner_test.class_counts().positive > 0) {
                    splits.emplace_back(std::move(inner_train), std::move(inner_test));
                }
            }
            double best = -std::numeric_limits<double>::infinity();
            for (const auto& cand : candidates) {
                double sum = 0.0;
                for (const auto& [itrain, itest] : splits) {
                    sum += holdout_score(family, fit_family(family, cand, itrain), itest, config.cutoff);
                }
                const double mean = splits.empty() ? -std::numeric_limits<double>::infinity()
                                                   : sum / static_cast<double>(splits.size());
                if (mean > best) {
                    best = mean;
                    fr.chosen = cand;
                    fr.inner_score = mean;
                }
            }
        }

        const auto model = fit_family(family, fr.chosen, train);
        const auto scores = predict_scores(model, test.rows);
        const auto labels = predict_labels(model, test.rows, config.cutoff);
        const auto y = to_labels(test.rows);
        if (std::count(y.begin(), y.end(), 1) == 0) {
            throw ValidationError("outer fold " + std::to_string(k) + " has no positive labels");
        }
        fr.metrics = pr_metrics(y, labels);
        fr.metrics.ap = average_precision(y, scores);
        for (std::size_t t = 0; t < test_idx.size(); ++t) {
            report.oof_scores[test_idx[t]] = scores[t];
            report.oof_predictions[test_idx[t]] = labels[t];
        }
        ps.push_back(fr.metrics.precision);
        rs.push_back(fr.metrics.recall);
        fs.push_back(fr.metrics.f1);
        aps.push_back(fr.metrics.ap);
        report.folds.push_back(std::move(fr));
    }
    report.precision = summarize(ps);
    report.recall = summarize(rs);
    report.f1 = summarize(fs);
    report.ap = summarize(aps);
    report.pooled_curve = pr_curve(report.oof_labels, report.oof_scores);
    report.pooled_ap = average_precision(report.oof_labels, report.oof_scores);
    report.rows = data.rows;
    return report;
}

std::string to_report_json(const CVReport& report) {
    json j;
    j["model"] = to_string(report.family);
    j["config"] = {{"outer_folds", report.config.n_outer},
                   {"inner_folds", report.config.n_inner},
                   {"n_candidates", report.config.n_candidates},
                   {"seed", report.config.seed},
                   {"cutoff", report.config.cutoff}};
    json folds = json::array();
    for (const auto& f : report.folds) {
        folds.push_back({{"fold", f.fold},
                         {"test_groups", f.test_groups},
                         {"precision", f.metrics.precision},
                         {"recall", f.metrics.recall},
                         {"f1", f.metrics.f1},
                         {"ap", f.metrics.ap},
                         {"n_pos", f.metrics.n_pos},
                         {"n_neg", f.metrics.n_neg},
                         {"inner_score", number_or_null(f.inner_score)},
                         {"hyperparameters", hyperparams_json(f.chosen)}});
    }
    j["folds"] = std::move(folds);
    auto summary = [](const MetricSummary& s) { return json{{"mean", s.mean}, {"std", s.stdev}}; };
    j["summary"] = {{"precision", summary(report.precision)},
                    {"recall", summary(report.recall)},
                    {"f1", summary(report.f1)},
                    {"ap", summary(report.ap)}};
    j["pooled_ap"] = report.pooled_ap;
    return j.dump(2) + "\n";
}

}  // namespace plumeseg
