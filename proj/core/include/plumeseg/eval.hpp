#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "plumeseg/dataset.hpp"
#include "plumeseg/models.hpp"

namespace plumeseg {

struct Metrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    double ap = 0.0;
    std::size_t n_pos = 0;
    std::size_t n_neg = 0;
};

/// Confusion-matrix precision/recall/F1; precision is 0 with no positive predictions.
Metrics pr_metrics(std::span<const int> labels, std::span<const int> predictions);

/// Step-wise area under the PR curve; tied scores form one step.
double average_precision(std::span<const int> labels, std::span<const double> scores);

struct PRPoint {
    double threshold = 0.0;
    double precision = 0.0;
    double recall = 0.0;
};

/// One point per distinct score, sweeping the cutoff from the highest score down.
std::vector<PRPoint> pr_curve(std::span<const int> labels, std::span<const double> scores);

// ------------------------------------------------------- cross-validation

/// Group -> fold assignment: groups sorted, shuffled with the seed, dealt round-robin.
std::map<std::string, int> assign_group_folds(std::span<const std::string> groups, int n_folds, std::uint64_t seed);

/// Row indices of one train/test split.
struct Split {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

/// Outer split plus the inner splits of its training part; every index refers
/// to the input row order.
struct NestedSplit {
    int fold = 0;
    Split outer;
    std::vector<Split> inner;
};

/// Fold plan used by nested_cv: outer folds from assign_group_folds(seed), inner
/// folds over the outer-train groups with a seed derived from the outer fold.
std::vector<NestedSplit> nested_splits(std::span<const std::string> groups, int n_outer, int n_inner,
                                       std::uint64_t seed);

enum class ModelFamily { no2, moran, moran_on_high, logistic, gbt };

std::string to_string(ModelFamily family);
ModelFamily model_family_from_string(std::string_view name);
bool is_threshold_family(ModelFamily family);

/// A point in a family's hyperparameter space.
using Hyperparams = std::variant<std::monostate, LogisticParams, GBTParams>;

/// Per-dimension choices; continuous dimensions are [lo, hi] ranges.
struct LogisticSearchSpace {
    std::vector<double> c_values{0.0001, 0.001, 0.1, 1.0};
    std::vector<int> max_iter{1000, 1200, 1500};
};

struct GBTSearchSpace {
    std::pair<double, double> gamma{0.05, 0.5};
    std::vector<int> max_depth{2, 3, 5, 6};
    std::vector<double> min_child_weight{2, 4, 6, 8, 10, 12};
    std::pair<double, double> subsample{0.6, 1.0};
    std::pair<double, double> colsample_bytree{0.6, 1.0};
    std::pair<double, double> colsample_bylevel{0.6, 1.0};
    std::vector<double> learning_rate{0.001, 0.01, 0.1, 0.2, 0.3, 0.4};
    std::vector<double> reg_alpha{0, 1.0e-5, 5.0e-4, 1.0e-3, 1.0e-2, 0.1, 1};
    int n_trees = 500;
};

struct SearchSpace {
    LogisticParams logistic_defaults;
    GBTParams gbt_defaults;
    LogisticSearchSpace logistic;
    GBTSearchSpace gbt;
};

/// Candidate 0 is the family default; the rest are drawn uniformly per dimension.
std::vector<Hyperparams> sample_candidates(ModelFamily family, const SearchSpace& space, int n_candidates,
                                           std::uint64_t seed, std::size_t n_train_rows);

Model fit_family(ModelFamily family, const Hyperparams& hp, const LabeledDataset& train);

struct CVConfig {
    int n_outer = 5;
    int n_inner = 5;
    int n_candidates = 1;
    std::uint64_t seed = 0;
    double cutoff = 0.5;
};

struct FoldResult {
    int fold = 0;
    std::vector<std::string> test_groups;
    Metrics metrics;
    Hyperparams chosen;
    double inner_score = 0.0;  // mean inner AP (or F1 for thresholds); NaN when no search ran
};

struct MetricSummary {
    double mean = 0.0;
    double stdev = 0.0;  // population
};

struct CVReport {
    ModelFamily family = ModelFamily::gbt;
    CVConfig config;
    std::vector<FoldResult> folds;
    MetricSummary precision;
    MetricSummary recall;
    MetricSummary f1;
    MetricSummary ap;
    double pooled_ap = 0.0;
    std::vector<PRPoint> pooled_curve;
    /// Out-of-fold score and label for every labeled row, in dataset order.
    std::vector<double> oof_scores;
    std::vector<int> oof_predictions;  // the fold model's hard decision
    std::vector<int> oof_labels;
    /// Labeled rows in the order of the out-of-fold vectors.
    std::vector<FeatureRow> rows;
};

/// Group-wise nested cross-validation. Outer folds hold out whole groups; the
/// inner loop picks the candidate with the best mean inner AP (F1 for threshold
/// families); the winner is refit on the outer-train part.
CVReport nested_cv(const LabeledDataset& dataset, ModelFamily family, const SearchSpace& space,
                   const CVConfig& config);

std::string to_report_json(const CVReport& report);
std::string to_pr_curve_csv(std::span<const PRPoint> curve);

// ------------------------------------------------------------ emission proxy

struct EmissionProxy {
    Mmsi mmsi = 0;
    double e_s = 0.0;
};

/// E_s = L^2 * U^3 (length in m, speed in m/s).
EmissionProxy emission_proxy(const ShipInfo& ship);

struct ShipEstimate {
    std::string group_id;
    Mmsi mmsi = 0;
    std::string date;
    double no2_sum = 0.0;
    std::size_t n_plume_pixels = 0;
};

/// Sum of NO2 over predicted-positive rows, per group (group_id "<mmsi>_<date>").
std::vector<ShipEstimate> ship_estimates(std::span<const FeatureRow> rows, std::span<const int> predictions);

struct ProxyCorrelation {
    double r = 0.0;
    std::size_t n_used = 0;
    std::size_t n_excluded = 0;  // ships with no predicted plume pixel
};

double pearson(std::span<const double> a, std::span<const double> b);

/// E_s per group_id.
using ProxyTable = std::map<std::string, double>;

/// Pearson r between no2_sum and E_s over ships with at least one plume pixel.
/// Throws "insufficient ships" with fewer than two such ships.
ProxyCorrelation proxy_correlation(std::span<const ShipEstimate> estimates, const ProxyTable& proxies);

// mmsi,date,no2_sum,e_s
std::string to_proxy_csv(std::span<const ShipEstimate> estimates, const ProxyTable& proxies);

}  // namespace plumeseg
