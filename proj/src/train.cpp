#include "swt/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace swt {

const char* to_string(TrainVariant v) {
    switch (v) {
        case TrainVariant::baseline: return "baseline";
        case TrainVariant::iw: return "iw";
        case TrainVariant::irw: return "irw";
        case TrainVariant::isw: return "isw";
    }
    return "?";
}

TrainVariant train_variant_from_string(const std::string& s) {
    if (s == "baseline") return TrainVariant::baseline;
    if (s == "iw") return TrainVariant::iw;
    if (s == "irw") return TrainVariant::irw;
    if (s == "isw") return TrainVariant::isw;
    throw ConfigError("unknown training variant: " + s);
}

void TrainConfig::validate() const {
    if (n_phase1_epochs < 1) throw ConfigError("TrainConfig: n_phase1_epochs must be >= 1");
    if (total_iterations < 1) throw ConfigError("TrainConfig: total_iterations must be >= 1");
    if (base_lr <= 0.0) throw ConfigError("TrainConfig: base_lr must be positive");
    if (poly_power < 0.0) throw ConfigError("TrainConfig: poly_power must be >= 0");
    if (momentum < 0.0 || momentum >= 1.0) {
        throw ConfigError("TrainConfig: momentum must be in [0, 1)");
    }
    if (lambda_weight < 0.0) throw ConfigError("TrainConfig: lambda_weight must be >= 0");
    if (margin_delta < 0.0) throw ConfigError("TrainConfig: margin_delta must be >= 0");
    if (batch_size < 1) throw ConfigError("TrainConfig: batch_size must be >= 1");
    if (eval_num_classes < 2) throw ConfigError("TrainConfig: eval_num_classes must be >= 2");
    if (gamma_aux < 0.0) throw ConfigError("TrainConfig: gamma_aux must be >= 0");
    for (int w : widths) {
        if (w < 1) throw ConfigError("TrainConfig: widths must be positive");
    }
}

long TrainConfig::phase1_iterations(int dataset_size) const {
    return static_cast<long>(n_phase1_epochs) * (dataset_size / batch_size);
}

double poly_lr(double base_lr, long iteration, long total_iterations, double power) {
    const double frac = 1.0 - static_cast<double>(iteration) / total_iterations;
    return base_lr * std::pow(std::max(0.0, frac), power);
}

SensitivityPassResult run_sensitivity_pass(const TrainState& state,
                                           const std::vector<SyntheticScene>& scenes,
                                           const PhotometricTransform& t,
                                           const ClusterConfig& cluster) {
    if (scenes.empty()) {
        throw DimensionError("run_sensitivity_pass: empty dataset slice");
    }
    SensitivityPassResult out;
    for (size_t i = 0; i < scenes.size(); ++i) {
        const FeatureMap& original = scenes[i].image;
        const FeatureMap transformed = apply_transform(original, t, static_cast<uint64_t>(i));
        const ForwardResult fr_orig = forward(state, original);
        const ForwardResult fr_aug = forward(state, transformed);
        for (int layer = 0; layer < 3; ++layer) {
            const Matrix sigma_orig = standardized_covariance(fr_orig.standardized[layer]);
            const Matrix sigma_aug = standardized_covariance(fr_aug.standardized[layer]);
            out.stats[layer] = accumulate_pair(std::move(out.stats[layer]), sigma_orig, sigma_aug);
        }
    }
    for (int layer = 0; layer < 3; ++layer) {
        out.masks[layer] = derive_mask(out.stats[layer], cluster);
    }
    return out;
}

namespace {

// Per-instance whitening loss at one layer under the active variant.
LossResult layer_whitening_loss(TrainVariant variant, const FeatureMap& z,
                                const SelectionMask& mask, double margin_delta) {
    switch (variant) {
        case TrainVariant::iw: return iw_loss(z, mask);
        case TrainVariant::irw: return irw_loss(z, mask, margin_delta);
        case TrainVariant::isw: return isw_loss(z, mask);
        case TrainVariant::baseline: break;
    }
    throw ConfigError("layer_whitening_loss: baseline has no whitening loss");
}

}  // namespace

std::array<double, 3> masked_covariance_means(const TrainState& state,
                                              const std::vector<SyntheticScene>& data,
                                              const std::vector<SelectionMask>& masks) {
    std::array<double, 3> acc{0.0, 0.0, 0.0};
    if (data.empty()) return acc;
    for (const SyntheticScene& scene : data) {
        const ForwardResult fr = forward(state, scene.image);
        for (int layer = 0; layer < 3; ++layer) {
            acc[layer] += iw_loss_value(fr.standardized[layer], masks[layer]);
        }
    }
    for (double& v : acc) v /= static_cast<double>(data.size());
    return acc;
}

TrainResult train(const TrainConfig& config, const std::vector<SyntheticScene>& data,
                  const PhotometricTransform& transform, const ClusterConfig& cluster) {
    config.validate();
    cluster.validate();
    if (data.empty()) throw DimensionError("train: empty dataset");
    if (static_cast<int>(data.size()) < config.batch_size) {
        throw ConfigError("train: batch size exceeds dataset size");
    }
    const long phase1_end = config.phase1_iterations(static_cast<int>(data.size()));
    if (phase1_end >= config.total_iterations) {
        throw ConfigError("train: total_iterations must exceed the phase-1 length");
    }

    NetworkConfig arch;
    arch.widths = config.widths;
    arch.num_classes = config.eval_num_classes;
    arch.aux_head = config.aux_enabled;

    TrainResult result;
    result.state = init_state(arch, config.seed, config.base_lr);
    TrainState& state = result.state;
    result.log.reserve(config.total_iterations);

    // Logging masks before the phase switch: the full strict-upper mask.
    std::vector<SelectionMask> log_masks(3, SelectionMask(1));
    const std::array<int, 3> widths = config.widths;
    for (int layer = 0; layer < 3; ++layer) log_masks[layer] = full_mask(widths[layer]);

    Rng shuffle_rng(mix_seed(config.seed, 0x5d0f));
    std::vector<int> order(data.size());
    std::iota(order.begin(), order.end(), 0);
    const long iters_per_epoch = static_cast<long>(data.size() / config.batch_size);

    const double layer_weight = config.lambda_weight / 3.0;
    long cursor = 0;  // batch cursor within the shuffled epoch

    for (long iter = 0; iter < config.total_iterations; ++iter) {
        if (iter % iters_per_epoch == 0) {
            shuffle_rng.shuffle(order);
            cursor = 0;
        }
        if (iter == phase1_end) {
            // Phase switch: fix the per-layer masks.
            if (config.variant == TrainVariant::isw) {
                SensitivityPassResult pass =
                    run_sensitivity_pass(state, data, transform, cluster);
                state.layer_masks.clear();
                for (int layer = 0; layer < 3; ++layer) {
                    state.layer_masks.push_back(pass.masks[layer].mask);
                    result.variance_matrices[layer] = pass.stats[layer].variance_matrix();
                }
                result.sensitivity_ran = true;
            } else {
                state.layer_masks.clear();
                for (int layer = 0; layer < 3; ++layer) {
                    state.layer_masks.push_back(full_mask(widths[layer]));
                }
            }
            state.phase = Phase::phase2;
            for (int layer = 0; layer < 3; ++layer) log_masks[layer] = state.layer_masks[layer];
            result.masked_cov_phase2_start = masked_covariance_means(state, data, log_masks);
        }

        const double lr = poly_lr(config.base_lr, iter, config.total_iterations,
                                  config.poly_power);
        const bool apply_whitening =
            state.phase == Phase::phase2 && config.variant != TrainVariant::baseline &&
            config.lambda_weight > 0.0;

        ParamGrads batch_grads;
        batch_grads.init_like(state);
        double task_sum = 0.0;
        double aux_sum = 0.0;
        std::array<double, 3> wloss_sum{0.0, 0.0, 0.0};

        for (int b = 0; b < config.batch_size; ++b) {
            const SyntheticScene& scene = data[order[cursor % data.size()]];
            ++cursor;
            const ForwardResult fr = forward(state, scene.image);
            LossResult task = task_loss(fr.logits, scene.labels);
            task_sum += task.value;

            LossResult aux;
            const FeatureMap* d_aux = nullptr;
            if (config.aux_enabled) {
                aux = task_loss(fr.aux_logits, scene.labels);
                aux_sum += aux.value;
                for (double& v : aux.gradient.data) v *= config.gamma_aux;
                d_aux = &aux.gradient;
            }

            std::array<FeatureMap, 3> wgrads;
            bool have_wgrads = false;
            for (int layer = 0; layer < 3; ++layer) {
                const SelectionMask& mask =
                    state.phase == Phase::phase2 ? state.layer_masks[layer] : log_masks[layer];
                if (apply_whitening) {
                    LossResult wl = layer_whitening_loss(config.variant, fr.standardized[layer],
                                                         mask, config.margin_delta);
                    wloss_sum[layer] += wl.value;
                    wgrads[layer] = std::move(wl.gradient);
                    for (double& v : wgrads[layer].data) v *= layer_weight;
                    have_wgrads = true;
                } else {
                    wloss_sum[layer] += iw_loss_value(fr.standardized[layer], mask);
                }
            }

            ParamGrads grads = backward(state, scene.image, fr, task.gradient,
                                        have_wgrads ? &wgrads : nullptr, d_aux);
            batch_grads.accumulate_scaled(grads, 1.0 / config.batch_size);
        }

        const double mean_task = task_sum / config.batch_size;
        double total_value = mean_task + config.gamma_aux * (aux_sum / config.batch_size);
        if (apply_whitening) {
            for (double w : wloss_sum) {
                total_value += layer_weight * (w / config.batch_size);
            }
        }
        if (!std::isfinite(total_value)) {
            throw NumericError("train: non-finite loss at iteration " +
                               std::to_string(iter));
        }

        sgd_step(state, batch_grads, lr, config.momentum);
        ++state.iteration;
        if (!state.all_finite()) {
            throw NumericError("train: non-finite parameters after iteration " +
                               std::to_string(iter));
        }

        TrainLogRow row;
        row.iteration = iter;
        row.lr = lr;
        row.task_loss = mean_task;
        for (int layer = 0; layer < 3; ++layer) {
            row.wloss[layer] = wloss_sum[layer] / config.batch_size;
        }
        row.phase = state.phase == Phase::phase1 ? 1 : 2;
        result.log.push_back(row);
    }

    result.masked_cov_final = masked_covariance_means(state, data, log_masks);
    return result;
}

EvalResult evaluate_miou(const TrainState& state, const std::vector<SyntheticScene>& data) {
    if (data.empty()) throw DimensionError("evaluate_miou: empty dataset");
    const int k = state.arch.num_classes;
    std::vector<long> confusion(static_cast<size_t>(k) * k, 0);  // [gt][pred]

    for (const SyntheticScene& scene : data) {
        const ForwardResult fr = forward(state, scene.image);
        const int n = fr.logits.pixels();
        for (int p = 0; p < n; ++p) {
            int best = 0;
            double best_v = fr.logits.data[p];
            for (int c = 1; c < k; ++c) {
                const double v = fr.logits.data[static_cast<size_t>(c) * n + p];
                if (v > best_v) {
                    best_v = v;
                    best = c;
                }
            }
            const int gt = scene.labels[p];
            if (gt < 0 || gt >= k) {
                throw DimensionError("evaluate_miou: label out of range");
            }
            ++confusion[static_cast<size_t>(gt) * k + best];
        }
    }

    EvalResult out;
    out.per_class_iou.assign(k, std::numeric_limits<double>::quiet_NaN());
    out.gt_pixels.assign(k, 0);
    double sum = 0.0;
    int counted = 0;
    for (int c = 0; c < k; ++c) {
        long tp = confusion[static_cast<size_t>(c) * k + c];
        long gt_total = 0, pred_total = 0;
        for (int j = 0; j < k; ++j) {
            gt_total += confusion[static_cast<size_t>(c) * k + j];
            pred_total += confusion[static_cast<size_t>(j) * k + c];
        }
        out.gt_pixels[c] = gt_total;
        const long uni = gt_total + pred_total - tp;
        if (uni > 0) {
            out.per_class_iou[c] = static_cast<double>(tp) / uni;
        }
        if (gt_total > 0) {  // mean over classes present in ground truth
            sum += static_cast<double>(tp) / uni;
            ++counted;
        }
    }
    out.miou = counted > 0 ? sum / counted : 0.0;
    return out;
}

}  // namespace swt
