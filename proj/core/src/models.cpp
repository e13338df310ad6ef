#include "plumeseg/models.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <json.hpp>

namespace plumeseg {

using json = nlohmann::ordered_json;

double sigmoid(double z) {
    if (z >= 0.0) {
        return 1.0 / (1.0 + std::exp(-z));
    }
    const double e = std::exp(z);
    return e / (1.0 + e);
}

Matrix to_matrix(std::span<const FeatureRow> rows) {
    if (rows.empty()) {
        return {};
    }
    const std::size_t d = rows.front().features.size();
    Matrix m(rows.size(), d);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].features.size() != d) {
            throw ValidationError("feature-length mismatch");
        }
        std::copy(rows[i].features.begin(), rows[i].features.end(), m.data.begin() + static_cast<std::ptrdiff_t>(i * d));
    }
    return m;
}

std::vector<int> to_labels(std::span<const FeatureRow> rows) {
    std::vector<int> y;
    y.reserve(rows.size());
    for (const auto& r : rows) {
        if (!r.label) {
            throw ValidationError("training rows must be labeled");
        }
        y.push_back(*r.label);
    }
    return y;
}

namespace {

void require_both_classes(std::span<const int> labels) {
    const auto pos = std::count(labels.begin(), labels.end(), 1);
    if (pos == 0 || pos == static_cast<std::ptrdiff_t>(labels.size())) {
        throw ValidationError("degenerate labels");
    }
}

}  // namespace

std::pair<double, double> balanced_class_weights(std::span<const int> labels) {
    require_both_classes(labels);
    const double n = static_cast<double>(labels.size());
    const double pos = static_cast<double>(std::count(labels.begin(), labels.end(), 1));
    return {n / (2.0 * (n - pos)), n / (2.0 * pos)};
}

// ---------------------------------------------------------------- threshold

std::string to_string(ThresholdFeature f) {
    switch (f) {
        case ThresholdFeature::no2:
            return "no2";
        case ThresholdFeature::moran:
            return "moran";
        case ThresholdFeature::moran_on_high:
            return "moran_on_high";
    }
    return "no2";
}

ThresholdFeature threshold_feature_from_string(std::string_view name) {
    if (name == "no2") {
        return ThresholdFeature::no2;
    }
    if (name == "moran") {
        return ThresholdFeature::moran;
    }
    if (name == "moran_on_high" || name == "moran-high") {
        return ThresholdFeature::moran_on_high;
    }
    throw ValidationError("unknown threshold feature '" + std::string(name) + "'");
}

double threshold_feature_value(const FeatureRow& row, ThresholdFeature f) {
    switch (f) {
        case ThresholdFeature::no2:
            return row.features.at(kNo2);
        case ThresholdFeature::moran:
            return row.features.at(kMoranI);
        case ThresholdFeature::moran_on_high:
            return row.moran_high;
    }
    return 0.0;
}

double best_f1_threshold(std::span<const double> values, std::span<const int> labels) {
    if (values.size() != labels.size()) {
        throw ValidationError("length mismatch");
    }
    require_both_classes(labels);
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] > values[b]; });
    const double total_pos = static_cast<double>(std::count(labels.begin(), labels.end(), 1));

    // Walk distinct values from the top; after consuming the group at v_k the
    // candidate threshold sits between v_k and the next smaller value.
    double best_f1 = -1.0;
    double best_t = values[order.front()];
    double tp = 0.0;
    double fp = 0.0;
    std::size_t i = 0;
    while (i < order.size()) {
        const double v = values[order[i]];
        while (i < order.size() && values[order[i]] == v) {
            (labels[order[i]] ? tp : fp) += 1.0;
            ++i;
        }
        if (i == order.size()) {
            break;
        }
        const double next = values[order[i]];
        double t = 0.5 * (v + next);
        if (!(t > next)) {
            t = v;
        }
        const double f1 = 2.0 * tp / (2.0 * tp + fp + (total_pos - tp));
        if (f1 >= best_f1) {  // later candidates are smaller thresholds
            best_f1 = f1;
            best_t = t;
        }
    }
    return best_t;
}

ThresholdModel fit_threshold(const LabeledDataset& dataset, ThresholdFeature feature) {
    std::vector<double> values;
    std::vector<int> labels;
    for (const auto& r : dataset.rows) {
        if (r.label) {
            values.push_back(threshold_feature_value(r, feature));
            labels.push_back(*r.label);
        }
    }
    return {feature, best_f1_threshold(values, labels)};
}

// ----------------------------------------------------------------- logistic

double LogisticObjective::loss(std::span<const double> theta) const {
    std::vector<double> scratch(theta.size());
    return loss_and_grad(theta, scratch);
}

double LogisticObjective::loss_and_grad(std::span<const double> theta, std::span<double> grad) const {
    const std::size_t d = x->cols;
    const double n = static_cast<double>(x->rows);
    std::fill(grad.begin(), grad.end(), 0.0);
    double total = 0.0;
    for (std::size_t i = 0; i < x->rows; ++i) {
        const auto row = x->row(i);
        double z = theta[d];
        for (std::size_t j = 0; j < d; ++j) {
            z += theta[j] * row[j];
        }
        const double w = sample_weight[i];
        // log(1 + e^z) - y z, evaluated without overflow
        const double softplus = z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
        total += w * (softplus - y[i] * z);
        const double r = w * (sigmoid(z) - y[i]);
        for (std::size_t j = 0; j < d; ++j) {
            grad[j] += r * row[j];
        }
        grad[d] += r;
    }
    double reg = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
        grad[j] = grad[j] / n + 2.0 * l2 * theta[j];
        reg += theta[j] * theta[j];
    }
    grad[d] /= n;
    return total / n + l2 * reg;
}

void fit_standardization(const Matrix& x, std::vector<double>& mean, std::vector<double>& stddev) {
    mean.assign(x.cols, 0.0);
    stddev.assign(x.cols, 1.0);
    if (x.rows == 0) {
        return;
    }
    for (std::size_t j = 0; j < x.cols; ++j) {
        bool binary = true;
        double sum = 0.0;
        for (std::size_t i = 0; i < x.rows; ++i) {
            const double v = x(i, j);
            binary = binary && (v == 0.0 || v == 1.0);
            sum += v;
        }
        if (binary) {
            continue;
        }
        const double mu = sum / static_cast<double>(x.rows);
        double ss = 0.0;
        for (std::size_t i = 0; i < x.rows; ++i) {
            const double dv = x(i, j) - mu;
            ss += dv * dv;
        }
        const double sd = std::sqrt(ss / static_cast<double>(x.rows));
        mean[j] = mu;
        stddev[j] = sd > 0.0 ? sd : 1.0;
    }
}

Matrix standardize(const Matrix& x, std::span<const double> mean, std::span<const double> stddev) {
    Matrix out = x;
    for (std::size_t i = 0; i < x.rows; ++i) {
        for (std::size_t j = 0; j < x.cols; ++j) {
            out(i, j) = (x(i, j) - mean[j]) / stddev[j];
        }
    }
    return out;
}

LogisticModel fit_logistic(const Matrix& x, std::span<const int> y, const LogisticParams& params) {
    if (x.rows != y.size()) {
        throw ValidationError("length mismatch");
    }
    require_both_classes(y);
    LogisticModel model;
    if (params.balanced) {
        std::tie(model.w_neg, model.w_pos) = balanced_class_weights(y);
    }
    fit_standardization(x, model.mean, model.stddev);
    const Matrix xs = standardize(x, model.mean, model.stddev);
    std::vector<double> sw(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
        sw[i] = y[i] ? model.w_pos : model.w_neg;
    }
    const LogisticObjective obj{&xs, y, sw, params.l2};

    const std::size_t d = x.cols;
    std::vector<double> theta(d + 1, 0.0);
    std::vector<double> grad(d + 1, 0.0);
    std::vector<double> trial(d + 1, 0.0);
    std::vector<double> trial_grad(d + 1, 0.0);
    double loss = obj.loss_and_grad(theta, grad);
    double lr = params.lr;
    int it = 0;
    for (; it < params.max_iter; ++it) {
        double gmax = 0.0;
        for (double g : grad) {
            gmax = std::max(gmax, std::abs(g));
        }
        if (gmax < params.tol) {
            break;
        }
        double trial_loss = 0.0;
        for (int halvings = 0;; ++halvings) {
            for (std::size_t j = 0; j <= d; ++j) {
                trial[j] = theta[j] - lr * grad[j];
            }
            trial_loss = obj.loss_and_grad(trial, trial_grad);
            if (!std::isfinite(trial_loss)) {
                throw ValidationError("divergence: non-finite loss (try a smaller lr)");
            }
            if (trial_loss <= loss || halvings >= 50) {
                break;
            }
            lr *= 0.5;
        }
        theta.swap(trial);
        grad.swap(trial_grad);
        loss = trial_loss;
    }
    model.weights.assign(theta.begin(), theta.begin() + static_cast<std::ptrdiff_t>(d));
    model.bias = theta[d];
    model.iterations = it;
    return model;
}

LogisticModel fit_logistic(const LabeledDataset& dataset, const LogisticParams& params) {
    const auto lab = dataset.labeled_only();
    return fit_logistic(to_matrix(lab.rows), to_labels(lab.rows), params);
}

// --------------------------------------------------------------- prediction

std::string model_type(const Model& model) {
    switch (model.index()) {
        case 0:
            return "threshold";
        case 1:
            return "logistic";
        default:
            return "gbt";
    }
}

std::vector<double> predict_scores(const Model& model, std::span<const FeatureRow> rows) {
    std::vector<double> out;
    out.reserve(rows.size());
    if (const auto* t = std::get_if<ThresholdModel>(&model)) {
        for (const auto& r : rows) {
            out.push_back(threshold_feature_value(r, t->feature));
        }
        return out;
    }
    if (const auto* lm = std::get_if<LogisticModel>(&model)) {
        for (const auto& r : rows) {
            if (r.features.size() != lm->weights.size()) {
                throw ValidationError("feature-length mismatch: model expects " + std::to_string(lm->weights.size()) +
                                      ", row has " + std::to_string(r.features.size()));
            }
            double z = lm->bias;
            for (std::size_t j = 0; j < r.features.size(); ++j) {
                z += lm->weights[j] * (r.features[j] - lm->mean[j]) / lm->stddev[j];
            }
            out.push_back(sigmoid(z));
        }
        return out;
    }
    const auto& gm = std::get<GBTModel>(model);
    for (const auto& r : rows) {
        if (r.features.size() != gm.n_features) {
            throw ValidationError("feature-length mismatch: model expects " + std::to_string(gm.n_features) +
                                  ", row has " + std::to_string(r.features.size()));
        }
        out.push_back(sigmoid(gm.margin(r.features)));
    }
    return out;
}

std::vector<int> predict_labels(const Model& model, std::span<const FeatureRow> rows, double cutoff) {
    const auto scores = predict_scores(model, rows);
    if (const auto* t = std::get_if<ThresholdModel>(&model)) {
        cutoff = t->threshold;
    }
    std::vector<int> out(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) {
        out[i] = scores[i] >= cutoff ? 1 : 0;
    }
    return out;
}

// --------------------------------------------------------------------- JSON

namespace {

json gbt_params_json(const GBTParams& p) {
    return {{"n_trees", p.n_trees},
            {"learning_rate", p.learning_rate},
            {"max_depth", p.max_depth},
            {"min_child_weight", p.min_child_weight},
            {"subsample", p.subsample},
            {"colsample_bytree", p.colsample_bytree},
            {"colsample_bylevel", p.colsample_bylevel},
            {"gamma", p.gamma},
            {"reg_alpha", p.reg_alpha},
            {"reg_lambda", p.reg_lambda},
            {"balanced", p.balanced},
            {"seed", p.seed}};
}

GBTParams gbt_params_from_json(const json& j) {
    GBTParams p;
    p.n_trees = j.at("n_trees").get<int>();
    p.learning_rate = j.at("learning_rate").get<double>();
    p.max_depth = j.at("max_depth").get<int>();
    p.min_child_weight = j.at("min_child_weight").get<double>();
    p.subsample = j.at("subsample").get<double>();
    p.colsample_bytree = j.at("colsample_bytree").get<double>();
    p.colsample_bylevel = j.at("colsample_bylevel").get<double>();
    p.gamma = j.at("gamma").get<double>();
    p.reg_alpha = j.at("reg_alpha").get<double>();
    p.reg_lambda = j.at("reg_lambda").get<double>();
    p.balanced = j.at("balanced").get<bool>();
    p.seed = j.at("seed").get<std::uint64_t>();
    return p;
}

}  // namespace

std::string to_model_json(const Model& model) {
    json j;
    j["type"] = model_type(model);
    if (const auto* t = std::get_if<ThresholdModel>(&model)) {
        j["feature"] = to_string(t->feature);
        j["threshold"] = t->threshold;
    } else if (const auto* lm = std::get_if<LogisticModel>(&model)) {
        j["weights"] = lm->weights;
        j["bias"] = lm->bias;
        j["class_weights"] = {lm->w_neg, lm->w_pos};
        j["mean"] = lm->mean;
        j["stddev"] = lm->stddev;
        j["iterations"] = lm->iterations;
    } else {
        const auto& gm = std::get<GBTModel>(model);
        j["params"] = gbt_params_json(gm.params);
        j["n_features"] = gm.n_features;
        j["class_weights"] = {gm.w_neg, gm.w_pos};
        json trees = json::array();
        for (const auto& tree : gm.trees) {
            json nodes = json::array();
            for (const auto& n : tree.nodes) {
                nodes.push_back({{"feature", n.feature},
                                 {"threshold", n.threshold},
                                 {"left", n.left},
                                 {"right", n.right},
                                 {"value", n.value},
                                 {"depth", n.depth}});
            }
            trees.push_back(std::move(nodes));
        }
        j["trees"] = std::move(trees);
    }
    return j.dump(2) + "\n";
}

Model parse_model_json(std::string_view text) {
    try {
        const auto j = json::parse(text);
        const auto type = j.at("type").get<std::string>();
        if (type == "threshold") {
            return ThresholdModel{threshold_feature_from_string(j.at("feature").get<std::string>()),
                                  j.at("threshold").get<double>()};
        }
        if (type == "logistic") {
            LogisticModel lm;
            lm.weights = j.at("weights").get<std::vector<double>>();
            lm.bias = j.at("bias").get<double>();
            lm.w_neg = j.at("class_weights").at(0).get<double>();
            lm.w_pos = j.at("class_weights").at(1).get<double>();
            lm.mean = j.at("mean").get<std::vector<double>>();
            lm.stddev = j.at("stddev").get<std::vector<double>>();
            lm.iterations = j.at("iterations").get<int>();
            if (lm.mean.size() != lm.weights.size() || lm.stddev.size() != lm.weights.size()) {
                throw ValidationError("model json: inconsistent logistic vector lengths");
            }
            return lm;
        }
        if (type == "gbt") {
            GBTModel gm;
            gm.params = gbt_params_from_json(j.at("params"));
            gm.n_features = j.at("n_features").get<std::size_t>();
            gm.w_neg = j.at("class_weights").at(0).get<double>();
            gm.w_pos = j.at("class_weights").at(1).get<double>();
            for (const auto& tj : j.at("trees")) {
                RegressionTree tree;
                for (const auto& nj : tj) {
                    TreeNode n;
                    n.feature = nj.at("feature").get<int>();
                    n.threshold = nj.at("threshold").get<double>();
                    n.left = nj.at("left").get<int>();
                    n.right = nj.at("right").get<int>();
                    n.value = nj.at("value").get<double>();
                    n.depth = nj.at("depth").get<int>();
                    tree.nodes.push_back(n);
                }
                const int count = static_cast<int>(tree.nodes.size());
                for (const auto& n : tree.nodes) {
                    if (n.feature >= 0 && (n.left <= 0 || n.right <= 0 || n.left >= count || n.right >= count ||
                                           static_cast<std::size_t>(n.feature) >= gm.n_features)) {
                        throw ValidationError("model json: malformed tree");
                    }
                }
                if (tree.nodes.empty()) {
                    throw ValidationError("model json: empty tree");
                }
                gm.trees.push_back(std::move(tree));
            }
            return gm;
        }
        throw ValidationError("model json: unknown type '" + type + "'");
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("model json: ") + e.what());
    }
}

}  // namespace plumeseg
