#include "swt/sensitivity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace swt {

Matrix SensitivityStats::variance_matrix() const {
    if (sample_count == 0) return Matrix(dim, dim);
    Matrix v = sum;
    for (double& e : v.values()) e /= sample_count;
    return v;
}

SensitivityStats accumulate_pair(SensitivityStats stats, const Matrix& sigma_orig,
                                 const Matrix& sigma_aug) {
    if (stats.dim == 0) {
        stats = SensitivityStats(sigma_orig.rows());
    }
    if (sigma_orig.rows() != stats.dim || sigma_orig.cols() != stats.dim ||
        !sigma_orig.same_shape(sigma_aug)) {
        throw DimensionError("accumulate_pair: covariance dimensions disagree");
    }
    for (int i = 0; i < stats.dim; ++i) {
        for (int j = 0; j < stats.dim; ++j) {
            const double d = sigma_orig(i, j) - sigma_aug(i, j);
            stats.sum(i, j) += 0.25 * d * d;
        }
    }
    ++stats.sample_count;
    return stats;
}

SensitivityStats merge(const SensitivityStats& a, const SensitivityStats& b) {
    if (a.sample_count == 0) return b;
    if (b.sample_count == 0) return a;
    if (a.dim != b.dim) throw DimensionError("merge: stats dimensions disagree");
    SensitivityStats out = a;
    for (size_t i = 0; i < out.sum.values().size(); ++i) {
        out.sum.values()[i] += b.sum.values()[i];
    }
    out.sample_count += b.sample_count;
    return out;
}

void ClusterConfig::validate() const {
    if (k < 2) throw ConfigError("ClusterConfig: k must be >= 2");
    if (m < 1 || m >= k) throw ConfigError("ClusterConfig: require 1 <= m < k");
}

KmeansResult kmeans_1d(const std::vector<double>& values, int k) {
    if (values.empty()) throw DimensionError("kmeans_1d: values must be nonempty");
    if (k < 1) throw ConfigError("kmeans_1d: k must be >= 1");
    for (double v : values) {
        if (!std::isfinite(v)) throw NumericError("kmeans_1d: non-finite value");
    }

    // Collapse duplicates; equal values always share a cluster, which also
    // settles boundary ties deterministically.
    std::map<double, double> grouped;  // value -> weight
    for (double v : values) grouped[v] += 1.0;
    const int n = static_cast<int>(grouped.size());
    std::vector<double> xs, ws;
    xs.reserve(n);
    ws.reserve(n);
    for (const auto& [v, w] : grouped) {
        xs.push_back(v);
        ws.push_back(w);
    }
    const int keff = std::min(k, n);

    // Weighted prefix sums for O(1) segment costs.
    std::vector<double> pw(n + 1, 0.0), px(n + 1, 0.0), pxx(n + 1, 0.0);
    for (int i = 0; i < n; ++i) {
        pw[i + 1] = pw[i] + ws[i];
        px[i + 1] = px[i] + ws[i] * xs[i];
        pxx[i + 1] = pxx[i] + ws[i] * xs[i] * xs[i];
    }
    auto segment_cost = [&](int a, int b) {  // inclusive [a, b]
        const double w = pw[b + 1] - pw[a];
        const double sx = px[b + 1] - px[a];
        const double sxx = pxx[b + 1] - pxx[a];
        return std::max(0.0, sxx - sx * sx / w);
    };

    // D[j][i]: best cost of the first i+1 distinct values in j+1 clusters.
    std::vector<std::vector<double>> cost(keff, std::vector<double>(n, 0.0));
    std::vector<std::vector<int>> split(keff, std::vector<int>(n, 0));
    for (int i = 0; i < n; ++i) cost[0][i] = segment_cost(0, i);
    for (int j = 1; j < keff; ++j) {
        for (int i = j; i < n; ++i) {
            double best = std::numeric_limits<double>::infinity();
            int best_t = j;
            for (int t = j; t <= i; ++t) {  // cluster j covers [t, i]
                const double c = cost[j - 1][t - 1] + segment_cost(t, i);
                if (c < best) {  // strict <: ties keep the smallest start
                    best = c;
                    best_t = t;
                }
            }
            cost[j][i] = best;
            split[j][i] = best_t;
        }
    }

    // Backtrack segment starts.
    std::vector<int> starts(keff);
    int end = n - 1;
    for (int j = keff - 1; j >= 1; --j) {
        starts[j] = split[j][end];
        end = starts[j] - 1;
    }
    starts[0] = 0;

    KmeansResult result;
    result.effective_k = keff;
    result.centroids.resize(keff);
    std::vector<int> distinct_label(n);
    for (int j = 0; j < keff; ++j) {
        const int a = starts[j];
        const int b = (j + 1 < keff) ? starts[j + 1] - 1 : n - 1;
        const double w = pw[b + 1] - pw[a];
        result.centroids[j] = (px[b + 1] - px[a]) / w;
        for (int i = a; i <= b; ++i) distinct_label[i] = j;
    }

    result.labels.resize(values.size());
    double objective = 0.0;
    for (size_t idx = 0; idx < values.size(); ++idx) {
        const int pos = static_cast<int>(
            std::lower_bound(xs.begin(), xs.end(), values[idx]) - xs.begin());
        const int lab = distinct_label[pos];
        result.labels[idx] = lab;
        const double d = values[idx] - result.centroids[lab];
        objective += d * d;
    }
    result.objective = objective;
    return result;
}

MaskDerivation derive_mask(const SensitivityStats& stats, const ClusterConfig& cfg) {
    cfg.validate();
    if (stats.sample_count < 1) {
        throw DimensionError("derive_mask: stats hold no accumulated pairs");
    }
    const Matrix v = stats.variance_matrix();
    const int c = stats.dim;

    std::vector<double> entries;
    entries.reserve(static_cast<size_t>(c) * (c - 1) / 2);
    for (int i = 0; i < c; ++i) {
        for (int j = i + 1; j < c; ++j) {
            const double raw = v(i, j);
            entries.push_back(cfg.log_scale ? std::log10(raw + kLogClusterFloor) : raw);
        }
    }

    MaskDerivation out;
    out.mask = SelectionMask(c);
    if (entries.empty()) {
        out.degenerate = true;
        return out;
    }
    out.clustering = kmeans_1d(entries, cfg.k);
    if (out.clustering.effective_k <= cfg.m) {
        out.degenerate = true;  // cannot split into low/high groups
        return out;
    }
    size_t idx = 0;
    for (int i = 0; i < c; ++i) {
        for (int j = i + 1; j < c; ++j) {
            if (out.clustering.labels[idx] >= cfg.m) {
                out.mask.set(i, j, true);
            }
            ++idx;
        }
    }
    return out;
}

}  // namespace swt
