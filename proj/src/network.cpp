#include "swt/network.hpp"

#include <algorithm>
#include <cmath>

namespace swt {

namespace {

// y[i] += w * x[i]; the hot loop of every convolution here.
inline void axpy(double w, const double* x, double* y, int n) {
    for (int i = 0; i < n; ++i) y[i] += w * x[i];
}

// Dot product with eight independent accumulators; fixed summation order,
// wide enough for the vector units.
inline double dot(const double* a, const double* b, int n) {
    double acc[8] = {0, 0, 0, 0, 0, 0, 0, 0};
    int i = 0;
    for (; i + 8 <= n; i += 8) {
        for (int j = 0; j < 8; ++j) acc[j] += a[i + j] * b[i + j];
    }
    double s = ((acc[0] + acc[1]) + (acc[2] + acc[3])) +
               ((acc[4] + acc[5]) + (acc[6] + acc[7]));
    for (; i < n; ++i) s += a[i] * b[i];
    return s;
}

}  // namespace

FeatureMap conv_forward(const ConvLayer& layer, const FeatureMap& input) {
    if (input.channels != layer.in_ch) {
        throw DimensionError("conv_forward: channel count mismatch");
    }
    const int h = input.height, w = input.width;
    const int k = layer.ksize, pad = k / 2;
    FeatureMap out(layer.out_ch, h, w);

    for (int co = 0; co < layer.out_ch; ++co) {
        double* oc = out.channel(co);
        std::fill(oc, oc + out.pixels(), layer.bias[co]);
        for (int ci = 0; ci < layer.in_ch; ++ci) {
            const double* ic = input.channel(ci);
            const double* wk =
                layer.weights.data() + (static_cast<size_t>(co) * layer.in_ch + ci) * k * k;
            for (int ky = 0; ky < k; ++ky) {
                for (int kx = 0; kx < k; ++kx) {
                    const double wv = wk[ky * k + kx];
                    if (wv == 0.0) continue;
                    const int dy = ky - pad, dx = kx - pad;
                    const int y0 = std::max(0, -dy), y1 = std::min(h, h - dy);
                    const int x0 = std::max(0, -dx), x1 = std::min(w, w - dx);
                    for (int y = y0; y < y1; ++y) {
                        axpy(wv, ic + static_cast<size_t>(y + dy) * w + (x0 + dx),
                             oc + static_cast<size_t>(y) * w + x0, x1 - x0);
                    }
                }
            }
        }
    }
    return out;
}

void conv_backward(const ConvLayer& layer, const FeatureMap& input,
                   const FeatureMap& d_out, FeatureMap* d_input,
                   std::vector<double>& d_weights, std::vector<double>& d_bias) {
    const int h = input.height, w = input.width;
    const int k = layer.ksize, pad = k / 2;
    d_weights.assign(layer.weights.size(), 0.0);
    d_bias.assign(layer.bias.size(), 0.0);
    if (d_input) {
        *d_input = FeatureMap(layer.in_ch, h, w);
    }

    for (int co = 0; co < layer.out_ch; ++co) {
        const double* go = d_out.channel(co);
        double bsum = 0.0;
        for (int p = 0; p < d_out.pixels(); ++p) bsum += go[p];
        d_bias[co] = bsum;

        for (int ci = 0; ci < layer.in_ch; ++ci) {
            const double* ic = input.channel(ci);
            double* gw =
                d_weights.data() + (static_cast<size_t>(co) * layer.in_ch + ci) * k * k;
            const double* wk =
                layer.weights.data() + (static_cast<size_t>(co) * layer.in_ch + ci) * k * k;
            double* gi = d_input ? d_input->channel(ci) : nullptr;
            for (int ky = 0; ky < k; ++ky) {
                for (int kx = 0; kx < k; ++kx) {
                    const int dy = ky - pad, dx = kx - pad;
                    const int y0 = std::max(0, -dy), y1 = std::min(h, h - dy);
                    const int x0 = std::max(0, -dx), x1 = std::min(w, w - dx);
                    double acc = 0.0;
                    for (int y = y0; y < y1; ++y) {
                        const double* in_row = ic + static_cast<size_t>(y + dy) * w + (x0 + dx);
                        const double* go_row = go + static_cast<size_t>(y) * w + x0;
                        acc += dot(in_row, go_row, x1 - x0);
                        if (gi) {
                            axpy(wk[ky * k + kx], go_row,
                                 gi + static_cast<size_t>(y + dy) * w + (x0 + dx), x1 - x0);
                        }
                    }
                    gw[ky * k + kx] = acc;
                }
            }
        }
    }
}

void NetworkConfig::validate() const {
    for (int w : widths) {
        if (w < 1) throw ConfigError("NetworkConfig: block widths must be positive");
    }
    if (num_classes < 2) throw ConfigError("NetworkConfig: need at least two classes");
}

std::vector<ConvLayer*> TrainState::parameter_layers() {
    std::vector<ConvLayer*> out{&blocks[0], &blocks[1], &blocks[2], &head};
    if (arch.aux_head) out.push_back(&aux);
    return out;
}

std::vector<const ConvLayer*> TrainState::parameter_layers() const {
    std::vector<const ConvLayer*> out{&blocks[0], &blocks[1], &blocks[2], &head};
    if (arch.aux_head) out.push_back(&aux);
    return out;
}

bool TrainState::all_finite() const {
    for (const ConvLayer* layer : parameter_layers()) {
        for (double v : layer->weights) {
            if (!std::isfinite(v)) return false;
        }
        for (double v : layer->bias) {
            if (!std::isfinite(v)) return false;
        }
    }
    return true;
}

TrainState init_state(const NetworkConfig& arch, uint64_t seed, double base_lr) {
    arch.validate();
    TrainState state;
    state.arch = arch;
    state.rng_seed = seed;
    state.base_lr = base_lr;

    state.blocks[0] = ConvLayer(3, arch.widths[0], 3);
    state.blocks[1] = ConvLayer(arch.widths[0], arch.widths[1], 3);
    state.blocks[2] = ConvLayer(arch.widths[1], arch.widths[2], 3);
    state.head = ConvLayer(arch.widths[2], arch.num_classes, 1);
    if (arch.aux_head) {
        state.aux = ConvLayer(arch.widths[1], arch.num_classes, 1);
    }

    Rng rng(mix_seed(seed, 0x1217));
    for (ConvLayer* layer : state.parameter_layers()) {
        const double fan_in = static_cast<double>(layer->in_ch) * layer->ksize * layer->ksize;
        const double std_dev = std::sqrt(2.0 / fan_in);
        for (double& v : layer->weights) v = std_dev * rng.normal();
        // biases stay zero
    }

    for (ConvLayer* layer : state.parameter_layers()) {
        MomentumState m;
        m.weights.assign(layer->weights.size(), 0.0);
        m.bias.assign(layer->bias.size(), 0.0);
        state.momentum.push_back(std::move(m));
    }
    return state;
}

namespace {

// Instance standardization with cached per-channel scale. The scale is
// 1/sqrt(max(var, eps)): data-dependent above the variance floor, constant
// below it.
void instance_norm_forward(const FeatureMap& a, FeatureMap& z,
                           std::vector<double>& scale, std::vector<uint8_t>& frozen) {
    const int n = a.pixels();
    z = FeatureMap(a.channels, a.height, a.width);
    scale.resize(a.channels);
    frozen.resize(a.channels);
    for (int c = 0; c < a.channels; ++c) {
        const double* src = a.channel(c);
        double* dst = z.channel(c);
        double mean = 0.0;
        for (int p = 0; p < n; ++p) mean += src[p];
        mean /= n;
        double var = 0.0;
        for (int p = 0; p < n; ++p) {
            const double d = src[p] - mean;
            var += d * d;
        }
        var /= n;
        frozen[c] = var <= kStandardizeEpsilon;
        const double s = 1.0 / std::sqrt(std::max(var, kStandardizeEpsilon));
        scale[c] = s;
        for (int p = 0; p < n; ++p) dst[p] = s * (src[p] - mean);
    }
}

void instance_norm_backward(const FeatureMap& z, const std::vector<double>& scale,
                            const std::vector<uint8_t>& frozen, const FeatureMap& dz,
                            FeatureMap& da) {
    const int n = z.pixels();
    da = FeatureMap(z.channels, z.height, z.width);
    for (int c = 0; c < z.channels; ++c) {
        const double* y = z.channel(c);
        const double* h = dz.channel(c);
        double* g = da.channel(c);
        double h_mean = 0.0;
        for (int p = 0; p < n; ++p) h_mean += h[p];
        h_mean /= n;
        const double s = scale[c];
        if (frozen[c]) {
            for (int p = 0; p < n; ++p) g[p] = s * (h[p] - h_mean);
            continue;
        }
        double hy = dot(h, y, n) / n;
        for (int p = 0; p < n; ++p) g[p] = s * (h[p] - h_mean - y[p] * hy);
    }
}

void check_finite(const FeatureMap& x, const std::string& where) {
    if (!x.all_finite()) {
        throw NumericError("forward: non-finite activation after " + where);
    }
}

}  // namespace

ForwardResult forward(const TrainState& state, const FeatureMap& image) {
    validate_feature_map(image, "forward");
    if (image.channels != 3) {
        throw DimensionError("forward: expected a 3-channel input image");
    }
    ForwardResult fr;
    const FeatureMap* prev = &image;
    for (int b = 0; b < 3; ++b) {
        fr.pre_norm[b] = conv_forward(state.blocks[b], *prev);
        check_finite(fr.pre_norm[b], "conv" + std::to_string(b + 1));
        instance_norm_forward(fr.pre_norm[b], fr.standardized[b], fr.norm_scale[b],
                              fr.norm_frozen[b]);
        fr.activated[b] = fr.standardized[b];
        for (double& v : fr.activated[b].data) v = std::max(0.0, v);
        prev = &fr.activated[b];
    }
    fr.logits = conv_forward(state.head, fr.activated[2]);
    check_finite(fr.logits, "head");
    if (state.arch.aux_head) {
        fr.aux_logits = conv_forward(state.aux, fr.activated[1]);
        check_finite(fr.aux_logits, "aux head");
    }
    return fr;
}

LossResult task_loss(const FeatureMap& logits, const std::vector<int>& labels) {
    const int k = logits.channels;
    const int n = logits.pixels();
    if (static_cast<int>(labels.size()) != n) {
        throw DimensionError("task_loss: label count does not match logits");
    }
    LossResult result;
    result.gradient = FeatureMap(k, logits.height, logits.width);
    double loss = 0.0;
    const double inv_n = 1.0 / n;
    for (int p = 0; p < n; ++p) {
        const int label = labels[p];
        if (label < 0 || label >= k) {
            throw DimensionError("task_loss: label out of range");
        }
        double mx = logits.data[p];
        for (int c = 1; c < k; ++c) {
            mx = std::max(mx, logits.data[static_cast<size_t>(c) * n + p]);
        }
        double sum = 0.0;
        for (int c = 0; c < k; ++c) {
            sum += std::exp(logits.data[static_cast<size_t>(c) * n + p] - mx);
        }
        const double log_sum = std::log(sum) + mx;
        loss += log_sum - logits.data[static_cast<size_t>(label) * n + p];
        for (int c = 0; c < k; ++c) {
            const double soft =
                std::exp(logits.data[static_cast<size_t>(c) * n + p] - log_sum);
            result.gradient.data[static_cast<size_t>(c) * n + p] =
                (soft - (c == label ? 1.0 : 0.0)) * inv_n;
        }
    }
    result.value = loss * inv_n;
    return result;
}

void ParamGrads::init_like(const TrainState& state) {
    weights.clear();
    bias.clear();
    for (const ConvLayer* layer : state.parameter_layers()) {
        weights.emplace_back(layer->weights.size(), 0.0);
        bias.emplace_back(layer->bias.size(), 0.0);
    }
}

void ParamGrads::accumulate_scaled(const ParamGrads& other, double scale) {
    for (size_t l = 0; l < weights.size(); ++l) {
        for (size_t i = 0; i < weights[l].size(); ++i) {
            weights[l][i] += scale * other.weights[l][i];
        }
        for (size_t i = 0; i < bias[l].size(); ++i) {
            bias[l][i] += scale * other.bias[l][i];
        }
    }
}

void ParamGrads::scale(double s) {
    for (auto& w : weights) {
        for (double& v : w) v *= s;
    }
    for (auto& b : bias) {
        for (double& v : b) v *= s;
    }
}

ParamGrads backward(const TrainState& state, const FeatureMap& image,
                    const ForwardResult& fr, const FeatureMap& d_logits,
                    const std::array<FeatureMap, 3>* d_standardized,
                    const FeatureMap* d_aux_logits) {
    ParamGrads grads;
    grads.init_like(state);
    const int head_idx = 3;

    FeatureMap d_act2;  // gradient at activated[2]
    conv_backward(state.head, fr.activated[2], d_logits, &d_act2,
                  grads.weights[head_idx], grads.bias[head_idx]);

    FeatureMap d_act_aux;
    if (state.arch.aux_head && d_aux_logits) {
        conv_backward(state.aux, fr.activated[1], *d_aux_logits, &d_act_aux,
                      grads.weights[4], grads.bias[4]);
    }

    FeatureMap* d_act = &d_act2;
    FeatureMap d_prev;
    for (int b = 2; b >= 0; --b) {
        // ReLU
        FeatureMap dz = *d_act;
        const FeatureMap& z = fr.standardized[b];
        for (size_t i = 0; i < dz.data.size(); ++i) {
            if (z.data[i] <= 0.0) dz.data[i] = 0.0;
        }
        // whitening loss and aux head attach here
        if (d_standardized) {
            const FeatureMap& extra = (*d_standardized)[b];
            if (extra.size() == dz.size()) {
                for (size_t i = 0; i < dz.data.size(); ++i) dz.data[i] += extra.data[i];
            }
        }
        if (b == 1 && d_act_aux.size() == dz.size()) {
            // aux gradient flows through the ReLU at block 2's output
            for (size_t i = 0; i < dz.data.size(); ++i) {
                if (z.data[i] > 0.0) dz.data[i] += d_act_aux.data[i];
            }
        }

        FeatureMap da;
        instance_norm_backward(z, fr.norm_scale[b], fr.norm_frozen[b], dz, da);

        const FeatureMap& block_input = (b == 0) ? image : fr.activated[b - 1];
        if (b == 0) {
            conv_backward(state.blocks[0], block_input, da, nullptr, grads.weights[0],
                          grads.bias[0]);
        } else {
            conv_backward(state.blocks[b], block_input, da, &d_prev, grads.weights[b],
                          grads.bias[b]);
            d_act = &d_prev;
        }
    }
    return grads;
}

void sgd_step(TrainState& state, const ParamGrads& grads, double lr, double mu) {
    std::vector<ConvLayer*> layers = state.parameter_layers();
    for (size_t l = 0; l < layers.size(); ++l) {
        MomentumState& mom = state.momentum[l];
        std::vector<double>& w = layers[l]->weights;
        for (size_t i = 0; i < w.size(); ++i) {
            mom.weights[i] = mu * mom.weights[i] + grads.weights[l][i];
            w[i] -= lr * mom.weights[i];
        }
        std::vector<double>& b = layers[l]->bias;
        for (size_t i = 0; i < b.size(); ++i) {
            mom.bias[i] = mu * mom.bias[i] + grads.bias[l][i];
            b[i] -= lr * mom.bias[i];
        }
    }
}

}  // namespace swt
