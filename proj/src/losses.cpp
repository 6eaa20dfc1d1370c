#include "swt/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace swt {

SelectionMask full_mask(int channels) {
    SelectionMask m(channels);
    for (int i = 0; i < channels; ++i) {
        for (int j = i + 1; j < channels; ++j) {
            m.set(i, j, true);
        }
    }
    return m;
}

const char* to_string(LossVariant v) {
    switch (v) {
        case LossVariant::DWT: return "dwt";
        case LossVariant::IW: return "iw";
        case LossVariant::IRW: return "irw";
        case LossVariant::ISW: return "isw";
    }
    return "?";
}

LossVariant loss_variant_from_string(const std::string& s) {
    if (s == "dwt") return LossVariant::DWT;
    if (s == "iw") return LossVariant::IW;
    if (s == "irw") return LossVariant::IRW;
    if (s == "isw") return LossVariant::ISW;
    throw ConfigError("unknown loss variant: " + s);
}

void LossConfig::validate() const {
    if (margin_delta < 0.0) throw ConfigError("LossConfig: margin_delta must be >= 0");
    if (variant != LossVariant::IRW && margin_delta != 0.0) {
        throw ConfigError("LossConfig: margin_delta is only meaningful for the IRW variant");
    }
    if (lambda_weight < 0.0) throw ConfigError("LossConfig: lambda_weight must be >= 0");
    if (num_layers <= 0) throw ConfigError("LossConfig: num_layers must be positive");
}

namespace {

// L1 subgradient with sign(0) = 0, so exactly-decorrelated pairs stay silent.
inline double l1_sign(double v) {
    if (v > 0.0) return 1.0;
    if (v < 0.0) return -1.0;
    return 0.0;
}

struct ChannelStats {
    double mean = 0.0;
    double var = 0.0;
    double scale = 0.0;   // 1/sqrt(max(var, eps))
    bool frozen = false;  // var <= eps: scale does not depend on the data
};

void channel_stats(const FeatureMap& x, std::vector<ChannelStats>& st) {
    const int n = x.pixels();
    st.resize(x.channels);
    for (int c = 0; c < x.channels; ++c) {
        const double* p = x.channel(c);
        double mean = 0.0;
        for (int i = 0; i < n; ++i) mean += p[i];
        mean /= n;
        double var = 0.0;
        for (int i = 0; i < n; ++i) {
            const double d = p[i] - mean;
            var += d * d;
        }
        var /= n;
        st[c].mean = mean;
        st[c].var = var;
        st[c].frozen = var <= kStandardizeEpsilon;
        st[c].scale = 1.0 / std::sqrt(std::max(var, kStandardizeEpsilon));
    }
}

// Backprop of dL/dXs (h) through per-channel standardization onto x.
// For a live channel y = (x - mu)/sqrt(v):
//   dL/dx_p = s * (h_p - mean(h) - y_p * mean(h . y))
// For a frozen channel the scale is a constant, leaving s * (h_p - mean(h)).
void standardize_backward(const FeatureMap& xs, const std::vector<ChannelStats>& st,
                          const FeatureMap& h, FeatureMap& grad) {
    const int n = xs.pixels();
    for (int c = 0; c < xs.channels; ++c) {
        const double* y = xs.channel(c);
        const double* hc = h.channel(c);
        double* g = grad.channel(c);
        double h_mean = 0.0;
        for (int p = 0; p < n; ++p) h_mean += hc[p];
        h_mean /= n;
        const double s = st[c].scale;
        if (st[c].frozen) {
            for (int p = 0; p < n; ++p) g[p] = s * (hc[p] - h_mean);
            continue;
        }
        double hy = 0.0;
        for (int p = 0; p < n; ++p) hy += hc[p] * y[p];
        hy /= n;
        for (int p = 0; p < n; ++p) {
            g[p] = s * (hc[p] - h_mean - y[p] * hy);
        }
    }
}

// dL/dX for L = f(Sigma) with Sigma = (1/N) Y Y^T: (1/N) (G + G^T) Y.
void covariance_backward(const FeatureMap& y, const Matrix& g, FeatureMap& out) {
    const int c = y.channels;
    const int n = y.pixels();
    for (int i = 0; i < c; ++i) {
        double* dst = out.channel(i);
        std::fill(dst, dst + n, 0.0);
        for (int k = 0; k < c; ++k) {
            const double w = (g(i, k) + g(k, i)) / n;
            if (w == 0.0) continue;
            const double* src = y.channel(k);
            for (int p = 0; p < n; ++p) dst[p] += w * src[p];
        }
    }
}

LossResult masked_standardized_l1(const FeatureMap& x, const SelectionMask& m,
                                  bool average_over_all_entries, bool want_gradient) {
    validate_feature_map(x, "iw_loss");
    if (m.dim != x.channels) {
        throw DimensionError("iw_loss: mask dimension does not match channel count");
    }
    if (!m.is_strict_upper()) {
        throw DimensionError("iw_loss: mask must be strictly upper triangular");
    }

    const int c = x.channels;
    const int n = x.pixels();
    const int ones = m.popcount();
    const double denom = average_over_all_entries ? static_cast<double>(c) * c
                                                  : static_cast<double>(ones);

    LossResult result;
    result.gradient = FeatureMap(c, x.height, x.width);
    if (ones == 0) return result;  // defined as 0 with zero gradient

    std::vector<ChannelStats> st;
    channel_stats(x, st);
    FeatureMap xs(c, x.height, x.width);
    for (int ch = 0; ch < c; ++ch) {
        const double* src = x.channel(ch);
        double* dst = xs.channel(ch);
        const double mean = st[ch].mean;
        const double scale = st[ch].scale;
        for (int p = 0; p < n; ++p) dst[p] = scale * (src[p] - mean);
    }

    // Sigma_s over the masked strict-upper entries only.
    double value = 0.0;
    Matrix g(c, c);
    for (int i = 0; i < c; ++i) {
        const double* xi = xs.channel(i);
        for (int j = i + 1; j < c; ++j) {
            if (!m.get(i, j)) continue;
            const double* xj = xs.channel(j);
            double s = 0.0;
            for (int p = 0; p < n; ++p) s += xi[p] * xj[p];
            const double sigma = s / n;
            value += std::abs(sigma);
            g(i, j) = l1_sign(sigma) / denom;
        }
    }
    result.value = value / denom;

    if (want_gradient) {
        FeatureMap h(c, x.height, x.width);
        covariance_backward(xs, g, h);
        standardize_backward(xs, st, h, result.gradient);
    }
    return result;
}

}  // namespace

LossResult dwt_loss(const FeatureMap& x) {
    validate_feature_map(x, "dwt_loss");
    const int c = x.channels;
    const int n = x.pixels();
    const MeanVector mu = compute_mean(x);

    FeatureMap centered(c, x.height, x.width);
    for (int ch = 0; ch < c; ++ch) {
        const double* src = x.channel(ch);
        double* dst = centered.channel(ch);
        for (int p = 0; p < n; ++p) dst[p] = src[p] - mu[ch];
    }
    const Matrix sigma = compute_covariance(x, mu);

    const double denom = static_cast<double>(c) * c;
    double value = 0.0;
    Matrix g(c, c);
    for (int i = 0; i < c; ++i) {
        for (int j = 0; j < c; ++j) {
            const double r = sigma(i, j) - (i == j ? 1.0 : 0.0);
            value += std::abs(r);
            g(i, j) = l1_sign(r) / denom;
        }
    }

    LossResult result;
    result.value = value / denom;
    result.gradient = FeatureMap(c, x.height, x.width);
    // Rows of (G+G^T)Y are combinations of zero-mean rows, so the centering
    // projector on the right is a no-op and is skipped.
    covariance_backward(centered, g, result.gradient);
    return result;
}

double dwt_loss_value(const FeatureMap& x) {
    validate_feature_map(x, "dwt_loss");
    const MeanVector mu = compute_mean(x);
    const Matrix sigma = compute_covariance(x, mu);
    const int c = x.channels;
    double value = 0.0;
    for (int i = 0; i < c; ++i) {
        for (int j = 0; j < c; ++j) {
            value += std::abs(sigma(i, j) - (i == j ? 1.0 : 0.0));
        }
    }
    return value / (static_cast<double>(c) * c);
}

LossResult iw_loss(const FeatureMap& x, const SelectionMask& m,
                   bool average_over_all_entries) {
    return masked_standardized_l1(x, m, average_over_all_entries, true);
}

double iw_loss_value(const FeatureMap& x, const SelectionMask& m,
                     bool average_over_all_entries) {
    return masked_standardized_l1(x, m, average_over_all_entries, false).value;
}

LossResult irw_loss(const FeatureMap& x, const SelectionMask& m, double delta,
                    bool average_over_all_entries) {
    if (delta < 0.0) throw ConfigError("irw_loss: delta must be >= 0");
    LossResult inner = masked_standardized_l1(x, m, average_over_all_entries, true);
    if (inner.value > delta) {
        inner.value -= delta;
        return inner;
    }
    LossResult result;
    result.value = 0.0;
    result.gradient = FeatureMap(x.channels, x.height, x.width);
    return result;
}

LossResult isw_loss(const FeatureMap& x, const SelectionMask& m_tilde,
                    bool average_over_all_entries) {
    return masked_standardized_l1(x, m_tilde, average_over_all_entries, true);
}

CombinedLoss total_loss(const LossResult& task,
                        const std::vector<LossResult>& whitening,
                        const LossConfig& config) {
    config.validate();
    if (static_cast<int>(whitening.size()) != config.num_layers) {
        throw DimensionError("total_loss: expected one whitening loss per layer");
    }
    CombinedLoss out;
    out.task_gradient = task.gradient;
    const double w = config.lambda_weight / config.num_layers;
    double wsum = 0.0;
    out.whitening_gradients.reserve(whitening.size());
    for (const LossResult& l : whitening) {
        wsum += l.value;
        FeatureMap g = l.gradient;
        for (double& v : g.data) v *= w;
        out.whitening_gradients.push_back(std::move(g));
    }
    out.value = task.value + config.lambda_weight * (wsum / config.num_layers);
    return out;
}

double mean_offdiag_abs(const Matrix& sigma) {
    const int c = sigma.rows();
    if (c < 2) return 0.0;
    double s = 0.0;
    int count = 0;
    for (int i = 0; i < c; ++i) {
        for (int j = i + 1; j < c; ++j) {
            s += std::abs(sigma(i, j));
            ++count;
        }
    }
    return s / count;
}

ConflictReport conflict_probe(const FeatureMap& x, int steps, double lr) {
    validate_feature_map(x, "conflict_probe");
    if (steps < 0) throw ConfigError("conflict_probe: steps must be >= 0");
    if (lr <= 0.0) throw ConfigError("conflict_probe: lr must be positive");

    ConflictReport report;
    report.initial_offdiag = mean_offdiag_abs(standardized_covariance(x));

    const SelectionMask m = full_mask(x.channels);

    FeatureMap x_dwt = x;
    for (int step = 0; step < steps; ++step) {
        LossResult l = dwt_loss(x_dwt);
        if (!std::isfinite(l.value) || !l.gradient.all_finite()) {
            report.dwt_diverged = true;
            report.dwt_diverged_at = step;
            break;
        }
        for (size_t i = 0; i < x_dwt.data.size(); ++i) {
            x_dwt.data[i] -= lr * l.gradient.data[i];
        }
        if (!x_dwt.all_finite()) {
            report.dwt_diverged = true;
            report.dwt_diverged_at = step;
            break;
        }
    }
    report.dwt_offdiag = report.dwt_diverged
                             ? std::numeric_limits<double>::quiet_NaN()
                             : mean_offdiag_abs(standardized_covariance(x_dwt));

    FeatureMap x_iw = x;
    for (int step = 0; step < steps; ++step) {
        LossResult l = iw_loss(x_iw, m);
        if (!std::isfinite(l.value) || !l.gradient.all_finite()) {
            report.iw_diverged = true;
            report.iw_diverged_at = step;
            break;
        }
        for (size_t i = 0; i < x_iw.data.size(); ++i) {
            x_iw.data[i] -= lr * l.gradient.data[i];
        }
        if (!x_iw.all_finite()) {
            report.iw_diverged = true;
            report.iw_diverged_at = step;
            break;
        }
    }
    report.iw_offdiag = report.iw_diverged
                            ? std::numeric_limits<double>::quiet_NaN()
                            : mean_offdiag_abs(standardized_covariance(x_iw));
    return report;
}

}  // namespace swt
