#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "swt/losses.hpp"

namespace swt {

// Square convolution, zero padding ksize/2 (spatial size preserved).
// Weights are [out][in][ky][kx] row-major.
struct ConvLayer {
    int in_ch = 0;
    int out_ch = 0;
    int ksize = 0;
    std::vector<double> weights;
    std::vector<double> bias;

    ConvLayer() = default;
    ConvLayer(int in, int out, int k)
        : in_ch(in), out_ch(out), ksize(k),
          weights(static_cast<size_t>(out) * in * k * k, 0.0), bias(out, 0.0) {}

    size_t weight_count() const { return weights.size(); }
};

FeatureMap conv_forward(const ConvLayer& layer, const FeatureMap& input);
// d_input may be null for the first layer.
void conv_backward(const ConvLayer& layer, const FeatureMap& input,
                   const FeatureMap& d_out, FeatureMap* d_input,
                   std::vector<double>& d_weights, std::vector<double>& d_bias);

struct NetworkConfig {
    std::array<int, 3> widths{16, 32, 32};
    int num_classes = 5;
    bool aux_head = false;  // auxiliary 1x1 classifier off block 2

    void validate() const;
};

enum class Phase { phase1, phase2 };

struct MomentumState {
    std::vector<double> weights;
    std::vector<double> bias;
};

// Three conv+IN+ReLU blocks, a 1x1 classifier head, optimizer state, the
// training phase and the per-layer selective masks fixed at the phase switch.
struct TrainState {
    NetworkConfig arch;
    std::array<ConvLayer, 3> blocks;
    ConvLayer head;
    ConvLayer aux;  // present only when arch.aux_head

    std::vector<MomentumState> momentum;  // aligned with parameter_layers()
    long iteration = 0;
    double base_lr = 1e-2;
    Phase phase = Phase::phase1;
    std::vector<SelectionMask> layer_masks;  // one per block in phase 2
    uint64_t rng_seed = 0;

    std::vector<ConvLayer*> parameter_layers();
    std::vector<const ConvLayer*> parameter_layers() const;
    bool all_finite() const;
};

// Kaiming fan-in initialization from the given seed; biases zero.
TrainState init_state(const NetworkConfig& arch, uint64_t seed, double base_lr);

// Per-layer activations kept for the backward pass. `standardized` holds the
// post-instance-normalization maps the whitening losses and sensitivity
// statistics consume.
struct ForwardResult {
    std::array<FeatureMap, 3> pre_norm;
    std::array<FeatureMap, 3> standardized;
    std::array<std::vector<double>, 3> norm_scale;
    std::array<std::vector<uint8_t>, 3> norm_frozen;
    std::array<FeatureMap, 3> activated;
    FeatureMap logits;
    FeatureMap aux_logits;  // empty unless aux head enabled
};

// conv -> instance standardization (no affine) -> ReLU per block, widths
// 3 -> w1 -> w2 -> w3, then a 1x1 conv to num_classes logits. Throws
// NumericError naming the layer on non-finite activations.
ForwardResult forward(const TrainState& state, const FeatureMap& image);

// Mean per-pixel cross-entropy on stabilized log-softmax; gradient w.r.t.
// logits.
LossResult task_loss(const FeatureMap& logits, const std::vector<int>& labels);

struct ParamGrads {
    std::vector<std::vector<double>> weights;  // aligned with parameter_layers()
    std::vector<std::vector<double>> bias;

    void init_like(const TrainState& state);
    void accumulate_scaled(const ParamGrads& other, double scale);
    void scale(double s);
};

// Backpropagates the task gradient (and optional pre-scaled whitening
// gradients injected at the standardized maps, and optional auxiliary-head
// gradient) to every parameter.
ParamGrads backward(const TrainState& state, const FeatureMap& image,
                    const ForwardResult& fr, const FeatureMap& d_logits,
                    const std::array<FeatureMap, 3>* d_standardized,
                    const FeatureMap* d_aux_logits);

// SGD with momentum: v <- mu*v + g, p <- p - lr*v.
void sgd_step(TrainState& state, const ParamGrads& grads, double lr, double mu);

}  // namespace swt
