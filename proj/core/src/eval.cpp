#include "plumeseg/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "plumeseg/io.hpp"

namespace plumeseg {

Metrics pr_metrics(std::span<const int> labels, std::span<const int> predictions) {
    if (labels.size() != predictions.size()) {
        throw ValidationError("length mismatch");
    }
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
    Metrics m;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i]) {
            ++m.n_pos;
            predictions[i] ? ++tp : ++fn;
        } else {
            ++m.n_neg;
            if (predictions[i]) {
                ++fp;
            }
        }
    }
    m.precision = tp + fp > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
    m.recall = tp + fn > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
    m.f1 = m.precision + m.recall > 0.0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
    return m;
}

std::vector<PRPoint> pr_curve(std::span<const int> labels, std::span<const double> scores) {
    if (labels.size() != scores.size()) {
        throw ValidationError("length mismatch");
    }
    const auto total_pos = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
    if (total_pos == 0) {
        throw ValidationError("no positive labels");
    }
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    std::vector<PRPoint> curve;
    std::size_t tp = 0;
    std::size_t seen = 0;
    std::size_t i = 0;
    while (i < order.size()) {
        const double s = scores[order[i]];
        while (i < order.size() && scores[order[i]] == s) {
            tp += static_cast<std::size_t>(labels[order[i]] != 0);
            ++seen;
            ++i;
        }
        curve.push_back({s, static_cast<double>(tp) / static_cast<double>(seen),
                         static_cast<double>(tp) / static_cast<double>(total_pos)});
    }
    return curve;
}

double average_precision(std::span<const int> labels, std::span<const double> scores) {
    const auto curve = pr_curve(labels, scores);
    double ap = 0.0;
    double prev_recall = 0.0;
    for (const auto& p : curve) {
        ap += (p.recall - prev_recall) * p.precision;
        prev_recall = p.recall;
    }
    return ap;
}

EmissionProxy emission_proxy(const ShipInfo& ship) {
    if (!(ship.length_m > 0.0)) {
        throw ValidationError("emission proxy: ship length must be > 0");
    }
    if (!(ship.speed_ms >= 0.0)) {
        throw ValidationError("emission proxy: ship speed must be >= 0");
    }
    const double u = ship.speed_ms;
    return {ship.mmsi, ship.length_m * ship.length_m * u * u * u};
}

std::vector<ShipEstimate> ship_estimates(std::span<const FeatureRow> rows, std::span<const int> predictions) {
    if (rows.size() != predictions.size()) {
        throw ValidationError("length mismatch");
    }
    std::vector<ShipEstimate> out;
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& gid = rows[i].group_id;
        auto it = index.find(gid);
        if (it == index.end()) {
            ShipEstimate est;
            est.group_id = gid;
            const auto us = gid.find('_');
            est.mmsi = io::parse_int(std::string_view(gid).substr(0, us), "group_id mmsi");
            est.date = us == std::string::npos ? std::string() : gid.substr(us + 1);
            it = index.emplace(gid, out.size()).first;
            out.push_back(std::move(est));
        }
        if (predictions[i]) {
            auto& est = out[it->second];
            est.no2_sum += rows[i].features.at(kNo2);
            ++est.n_plume_pixels;
        }
    }
    return out;
}

double pearson(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        throw ValidationError("length mismatch");
    }
    if (a.size() < 2) {
        throw ValidationError("insufficient ships");
    }
    const double n = static_cast<double>(a.size());
    const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
    const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
    double sab = 0.0;
    double saa = 0.0;
    double sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double da = a[i] - ma;
        const double db = b[i] - mb;
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    if (saa == 0.0 || sbb == 0.0) {
        throw ValidationError("zero variance");
    }
    return sab / std::sqrt(saa * sbb);
}

ProxyCorrelation proxy_correlation(std::span<const ShipEstimate> estimates, const ProxyTable& proxies) {
    ProxyCorrelation out;
    std::vector<double> no2;
    std::vector<double> es;
    for (const auto& e : estimates) {
        if (e.n_plume_pixels == 0) {
            ++out.n_excluded;
            continue;
        }
        auto it = proxies.find(e.group_id);
        if (it == proxies.end()) {
            throw ValidationError("no emission proxy for " + e.group_id);
        }
        no2.push_back(e.no2_sum);
        es.push_back(it->second);
    }
    out.n_used = no2.size();
    if (no2.size() < 2) {
        throw ValidationError("insufficient ships");
    }
    out.r = pearson(no2, es);
    return out;
}

std::string to_proxy_csv(std::span<const ShipEstimate> estimates, const ProxyTable& proxies) {
    std::string out = "mmsi,date,no2_sum,e_s\n";
    for (const auto& e : estimates) {
        auto it = proxies.find(e.group_id);
        out += std::to_string(e.mmsi) + ',' + e.date + ',' + io::format_double(e.no2_sum) + ',' +
               (it == proxies.end() ? std::string("nan") : io::format_double(it->second)) + '\n';
    }
    return out;
}

std::string to_pr_curve_csv(std::span<const PRPoint> curve) {
    std::string out = "threshold,precision,recall\n";
    for (const auto& p : curve) {
        out += io::format_double(p.threshold) + ',' + io::format_double(p.precision) + ',' +
               io::format_double(p.recall) + '\n';
    }
    return out;
}

}  // namespace plumeseg
