#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "plumeseg/dataset.hpp"

namespace plumeseg {

/// Dense row-major feature matrix.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

    double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
    std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }
};

/// Feature matrix of the given rows (model inputs only).
Matrix to_matrix(std::span<const FeatureRow> rows);
/// Labels of the given rows; throws if any row is unlabeled.
std::vector<int> to_labels(std::span<const FeatureRow> rows);

/// Balanced class weights n / (2 n_c) as (w_neg, w_pos).
std::pair<double, double> balanced_class_weights(std::span<const int> labels);

// ---------------------------------------------------------------- threshold

enum class ThresholdFeature { no2, moran, moran_on_high };

std::string to_string(ThresholdFeature f);
ThresholdFeature threshold_feature_from_string(std::string_view name);
double threshold_feature_value(const FeatureRow& row, ThresholdFeature f);

/// Single-feature rule: positive when value >= threshold.
struct ThresholdModel {
    ThresholdFeature feature = ThresholdFeature::no2;
    double threshold = 0.0;
};

/// Threshold maximizing F1 over midpoints between consecutive distinct values;
/// ties go to the smaller threshold. Throws "degenerate labels" for a single class.
double best_f1_threshold(std::span<const double> values, std::span<const int> labels);

ThresholdModel fit_threshold(const LabeledDataset& dataset, ThresholdFeature feature);

// ----------------------------------------------------------------- logistic

struct LogisticParams {
    double l2 = 1e-4;
    int max_iter = 2000;
    double lr = 0.5;
    double tol = 1e-6;    // stop when the gradient infinity-norm drops below
    bool balanced = true;  // class weights n / (2 n_c); unit weights otherwise
};

struct LogisticModel {
    std::vector<double> weights;  // on standardized inputs
    double bias = 0.0;
    double w_neg = 1.0;
    double w_pos = 1.0;
    std::vector<double> mean;  // one-hot columns: mean 0, stddev 1
    std::vector<double> stddev;
    int iterations = 0;
};

/// Weighted cross-entropy + l2 * |w|^2, averaged over rows, on already standardized
/// inputs. Parameters are (w_0..w_{d-1}, bias).
struct LogisticObjective {
    const Matrix* x = nullptr;
    std::span<const int> y;
    std::span<const double> sample_weight;
    double l2 = 0.0;

    double loss(std::span<const double> theta) const;
    double loss_and_grad(std::span<const double> theta, std::span<double> grad) const;
};

/// Per-column (mean, std); columns holding only 0/1 pass through as (0, 1).
void fit_standardization(const Matrix& x, std::vector<double>& mean, std::vector<double>& stddev);
Matrix standardize(const Matrix& x, std::span<const double> mean, std::span<const double> stddev);

/// Deterministic full-batch gradient descent; the step is halved whenever the loss
/// rises. Throws "divergence" on a non-finite loss.
LogisticModel fit_logistic(const Matrix& x, std::span<const int> y, const LogisticParams& params = {});
LogisticModel fit_logistic(const LabeledDataset& dataset, const LogisticParams& params = {});

// ---------------------------------------------------------------------- GBT

struct GBTParams {
    int n_trees = 100;
    double learning_rate = 0.3;
    int max_depth = 6;
    double min_child_weight = 1.0;
    double subsample = 1.0;
    double colsample_bytree = 1.0;
    double colsample_bylevel = 1.0;
    double gamma = 0.0;      // minimum split gain
    double reg_alpha = 0.0;  // L1 on leaf weights
    double reg_lambda = 1.0;
    bool balanced = true;
    std::uint64_t seed = 0;
};

struct TreeNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;  // rows with x[feature] < threshold go left
    int left = -1;
    int right = -1;
    double value = 0.0;  // leaf output, learning rate already applied
    int depth = 0;
};

struct RegressionTree {
    std::vector<TreeNode> nodes;  // nodes[0] is the root

    double predict(std::span<const double> x) const;
    int leaf_index(std::span<const double> x) const;
    int depth() const;
};

struct GBTModel {
    GBTParams params;
    std::size_t n_features = 0;
    double w_neg = 1.0;
    double w_pos = 1.0;
    std::vector<RegressionTree> trees;

    double margin(std::span<const double> x) const;
};

/// Second-order boosting on the logistic loss with exact greedy splits.
GBTModel fit_gbt(const Matrix& x, std::span<const int> y, const GBTParams& params = {});
GBTModel fit_gbt(const LabeledDataset& dataset, const GBTParams& params = {});

// --------------------------------------------------------------- prediction

using Model = std::variant<ThresholdModel, LogisticModel, GBTModel>;

std::string model_type(const Model& model);

/// Probabilities for logistic/GBT, the raw feature value for threshold models.
std::vector<double> predict_scores(const Model& model, std::span<const FeatureRow> rows);
/// score >= cutoff; threshold models compare against their fitted threshold.
std::vector<int> predict_labels(const Model& model, std::span<const FeatureRow> rows, double cutoff = 0.5);

std::string to_model_json(const Model& model);
Model parse_model_json(std::string_view text);

double sigmoid(double z);

}  // namespace plumeseg
