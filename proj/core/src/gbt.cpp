#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "plumeseg/models.hpp"

namespace plumeseg {

double RegressionTree::predict(std::span<const double> x) const {
    return nodes[static_cast<std::size_t>(leaf_index(x))].value;
}

int RegressionTree::leaf_index(std::span<const double> x) const {
    int i = 0;
    while (nodes[static_cast<std::size_t>(i)].feature >= 0) {
        const auto& n = nodes[static_cast<std::size_t>(i)];
        i = x[static_cast<std::size_t>(n.feature)] < n.threshold ? n.left : n.right;
    }
    return i;
}

int RegressionTree::depth() const {
    int d = 0;
    for (const auto& n : nodes) {
        d = std::max(d, n.depth);
    }
    return d;
}

double GBTModel::margin(std::span<const double> x) const {
    double m = 0.0;
    for (const auto& t : trees) {
        m += t.predict(x);
    }
    return m;
}

namespace {

double unit_uniform(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Soft-thresholded gradient sum for L1 leaf regularization.
double shrink_alpha(double g, double alpha) {
    if (g > alpha) {
        return g - alpha;
    }
    if (g < -alpha) {
        return g + alpha;
    }
    return 0.0;
}

// Random subset of `pool` of size max(1, round(frac * |pool|)), kept sorted.
std::vector<std::size_t> sample_features(const std::vector<std::size_t>& pool, double frac, std::mt19937_64& rng) {
    if (frac >= 1.0) {
        return pool;
    }
    const auto k = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(frac * static_cast<double>(pool.size()))));
    std::vector<std::size_t> shuffled = pool;
    for (std::size_t i = shuffled.size(); i > 1; --i) {
        const auto j = static_cast<std::size_t>(rng() % i);
        std::swap(shuffled[i - 1], shuffled[j]);
    }
    shuffled.resize(std::min(k, shuffled.size()));
    std::sort(shuffled.begin(), shuffled.end());
    return shuffled;
}

struct SplitCandidate {
    double gain = 0.0;
    int feature = -1;
    double threshold = 0.0;
};

class TreeBuilder {
public:
    TreeBuilder(const Matrix& x, const std::vector<std::vector<std::size_t>>& sorted, const GBTParams& p)
        : x_(x), sorted_(sorted), p_(p) {}

    RegressionTree build(const std::vector<double>& g, const std::vector<double>& h,
                         const std::vector<unsigned char>& in_sample, const std::vector<std::size_t>& tree_features,
                         std::mt19937_64& rng) {
        RegressionTree tree;
        tree.nodes.push_back(TreeNode{});
        node_of_.assign(x_.rows, -1);
        for (std::size_t i = 0; i < x_.rows; ++i) {
            if (in_sample[i]) {
                node_of_[i] = 0;
            }
        }
        std::vector<int> level{0};
        for (int depth = 0; !level.empty(); ++depth) {
            std::vector<double> G(tree.nodes.size(), 0.0);
            std::vector<double> H(tree.nodes.size(), 0.0);
            for (std::size_t i = 0; i < x_.rows; ++i) {
                if (node_of_[i] >= 0) {
                    G[static_cast<std::size_t>(node_of_[i])] += g[i];
                    H[static_cast<std::size_t>(node_of_[i])] += h[i];
                }
            }
            std::vector<SplitCandidate> best(tree.nodes.size());
            if (depth < p_.max_depth) {
                const auto level_features = sample_features(tree_features, p_.colsample_bylevel, rng);
                find_splits(level, level_features, g, h, G, H, best);
            }
            std::vector<int> next;
            for (int id : level) {
                const auto nid = static_cast<std::size_t>(id);
                const auto& s = best[nid];
                if (s.feature < 0) {
                    tree.nodes[nid].value =
                        -shrink_alpha(G[nid], p_.reg_alpha) / (H[nid] + p_.reg_lambda) * p_.learning_rate;
                    continue;
                }
                TreeNode left;
                TreeNode right;
                left.depth = right.depth = depth + 1;
                tree.nodes[nid].feature = s.feature;
                tree.nodes[nid].threshold = s.threshold;
                tree.nodes[nid].left = static_cast<int>(tree.nodes.size());
                tree.nodes.push_back(left);
                tree.nodes[nid].right = static_cast<int>(tree.nodes.size());
                tree.nodes.push_back(right);
                next.push_back(tree.nodes[nid].left);
                next.push_back(tree.nodes[nid].right);
            }
            for (std::size_t i = 0; i < x_.rows; ++i) {
                const int id = node_of_[i];
                if (id < 0) {
                    continue;
                }
                const auto& n = tree.nodes[static_cast<std::size_t>(id)];
                if (n.feature >= 0 && n.left > id) {
                    node_of_[i] = x_(i, static_cast<std::size_t>(n.feature)) < n.threshold ? n.left : n.right;
                } else {
                    node_of_[i] = -1;
                }
            }
            level = std::move(next);
        }
        return tree;
    }

private:
    double score(double g, double h) const {
        const double t = shrink_alpha(g, p_.reg_alpha);
        return t * t / (h + p_.reg_lambda);
    }

    void find_splits(const std::vector<int>& level, const std::vector<std::size_t>& features,
                     const std::vector<double>& g, const std::vector<double>& h, const std::vector<double>& G,
                     const std::vector<double>& H, std::vector<SplitCandidate>& best) const {
        const std::size_t n_nodes = G.size();
        std::vector<unsigned char> active(n_nodes, 0);
        for (int id : level) {
            active[static_cast<std::size_t>(id)] = 1;
        }
        std::vector<double> gl(n_nodes);
        std::vector<double> hl(n_nodes);
        std::vector<double> last(n_nodes);
        std::vector<unsigned char> seen(n_nodes);
        for (auto f : features) {
            std::fill(gl.begin(), gl.end(), 0.0);
            std::fill(hl.begin(), hl.end(), 0.0);
            std::fill(seen.begin(), seen.end(), 0);
            for (auto i : sorted_[f]) {
                const int id = node_of_[i];
                if (id < 0 || !active[static_cast<std::size_t>(id)]) {
                    continue;
                }
                const auto nid = static_cast<std::size_t>(id);
                const double v = x_(i, f);
                if (seen[nid] && v > last[nid]) {
                    const double hr = H[nid] - hl[nid];
                    if (hl[nid] >= p_.min_child_weight && hr >= p_.min_child_weight) {
                        const double gr = G[nid] - gl[nid];
                        const double gain =
                            0.5 * (score(gl[nid], hl[nid]) + score(gr, hr) - score(G[nid], H[nid])) - p_.gamma;
                        if (gain > 0.0 && gain > best[nid].gain) {
                            double t = 0.5 * (last[nid] + v);
                            if (!(t > last[nid])) {
                                t = v;
                            }
                            best[nid] = {gain, static_cast<int>(f), t};
                        }
                    }
                }
                gl[nid] += g[i];
                hl[nid] += h[i];
                last[nid] = v;
                seen[nid] = 1;
            }
        }
    }

    const Matrix& x_;
    const std::vector<std::vector<std::size_t>>& sorted_;
    const GBTParams& p_;
    std::vector<int> node_of_;
};

void validate(const GBTParams& p) {
    if (p.n_trees < 1) {
        throw ValidationError("gbt: n_trees must be >= 1");
    }
    if (p.max_depth < 0) {
        throw ValidationError("gbt: max_depth must be >= 0");
    }
    if (!(p.learning_rate > 0.0)) {
        throw ValidationError("gbt: learning_rate must be > 0");
    }
    for (double frac : {p.subsample, p.colsample_bytree, p.colsample_bylevel}) {
        if (!(frac > 0.0 && frac <= 1.0)) {
            throw ValidationError("gbt: sampling fractions must lie in (0, 1]");
        }
    }
    if (p.reg_lambda < 0.0 || p.reg_alpha < 0.0 || p.gamma < 0.0 || p.min_child_weight < 0.0) {
        throw ValidationError("gbt: regularization terms must be >= 0");
    }
}

}  // namespace

GBTModel fit_gbt(const Matrix& x, std::span<const int> y, const GBTParams& params) {
    validate(params);
    if (x.rows != y.size()) {
        throw ValidationError("length mismatch");
    }
    GBTModel model;
    model.params = params;
    model.n_features = x.cols;
    if (params.balanced) {
        std::tie(model.w_neg, model.w_pos) = balanced_class_weights(y);
    } else {
        balanced_class_weights(y);  // degenerate-label check
    }

    std::vector<std::vector<std::size_t>> sorted(x.cols);
    for (std::size_t f = 0; f < x.cols; ++f) {
        auto& idx = sorted[f];
        idx.resize(x.rows);
        std::iota(idx.begin(), idx.end(), 0);
        std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return x(a, f) < x(b, f); });
    }
    std::vector<std::size_t> all_features(x.cols);
    std::iota(all_features.begin(), all_features.end(), 0);

    std::mt19937_64 rng(params.seed);
    std::vector<double> margin(x.rows, 0.0);
    std::vector<double> g(x.rows);
    std::vector<double> h(x.rows);
    std::vector<unsigned char> in_sample(x.rows, 1);
    TreeBuilder builder(x, sorted, model.params);

    for (int t = 0; t < params.n_trees; ++t) {
        for (std::size_t i = 0; i < x.rows; ++i) {
            const double w = y[i] ? model.w_pos : model.w_neg;
            const double p = sigmoid(margin[i]);
            g[i] = w * (p - y[i]);
            h[i] = w * p * (1.0 - p);
        }
        if (params.subsample < 1.0) {
            for (std::size_t i = 0; i < x.rows; ++i) {
                in_sample[i] = unit_uniform(rng) < params.subsample ? 1 : 0;
            }
        }
        const auto tree_features = sample_features(all_features, params.colsample_bytree, rng);
        auto tree = builder.build(g, h, in_sample, tree_features, rng);
        for (std::size_t i = 0; i < x.rows; ++i) {
            margin[i] += tree.predict(x.row(i));
        }
        model.trees.push_back(std::move(tree));
    }
    return model;
}

GBTModel fit_gbt(const LabeledDataset& dataset, const GBTParams& params) {
    const auto lab = dataset.labeled_only();
    return fit_gbt(to_matrix(lab.rows), to_labels(lab.rows), params);
}

}  // namespace plumeseg
