#pragma once

#include "swt/dataset.hpp"
#include "swt/network.hpp"
#include "swt/sensitivity.hpp"

namespace swt {

// baseline trains with instance normalization only (whitening losses are
// logged but carry zero weight); the other variants add their loss in
// phase 2. iw/irw use the full strict-upper mask; isw derives selective
// masks from the sensitivity pass.
enum class TrainVariant { baseline, iw, irw, isw };

const char* to_string(TrainVariant v);
TrainVariant train_variant_from_string(const std::string& s);

struct TrainConfig {
    int n_phase1_epochs = 5;
    long total_iterations = 4000;
    double base_lr = 1e-2;
    double poly_power = 0.9;
    double momentum = 0.9;
    double lambda_weight = 0.6;
    TrainVariant variant = TrainVariant::isw;
    double margin_delta = kDefaultIrwMargin;  // irw only
    int batch_size = 1;
    int eval_num_classes = 5;
    bool aux_enabled = false;
    double gamma_aux = 0.4;
    std::array<int, 3> widths{16, 32, 32};
    uint64_t seed = 1;

    void validate() const;
    long phase1_iterations(int dataset_size) const;
};

// lr(t) = base_lr * (1 - t/T)^power.
double poly_lr(double base_lr, long iteration, long total_iterations, double power);

struct TrainLogRow {
    long iteration = 0;
    double lr = 0.0;
    double task_loss = 0.0;
    std::array<double, 3> wloss{0.0, 0.0, 0.0};
    int phase = 1;
};

struct SensitivityPassResult {
    std::array<SensitivityStats, 3> stats;
    std::array<MaskDerivation, 3> masks;
};

// Freezes the model, runs every scene and its photometric transform through
// the network, accumulates the per-layer variance matrices and derives the
// per-layer masks. One (x, tau(x)) pair per scene, draw seeds keyed by the
// scene index.
SensitivityPassResult run_sensitivity_pass(const TrainState& state,
                                           const std::vector<SyntheticScene>& scenes,
                                           const PhotometricTransform& t,
                                           const ClusterConfig& cluster);

struct TrainResult {
    TrainState state;
    std::vector<TrainLogRow> log;
    std::array<Matrix, 3> variance_matrices;  // zero-sized unless isw
    bool sensitivity_ran = false;
    // Masked mean |Sigma_s| over the training set at the phase switch and
    // after the final iteration, per layer.
    std::array<double, 3> masked_cov_phase2_start{0, 0, 0};
    std::array<double, 3> masked_cov_final{0, 0, 0};
};

// Two-phase procedure: n epochs of task-only training, the sensitivity pass
// (isw), then the combined objective under SGD momentum with polynomial lr
// decay. Aborts with NumericError naming the iteration if the loss leaves
// the finite range.
TrainResult train(const TrainConfig& config, const std::vector<SyntheticScene>& data,
                  const PhotometricTransform& transform, const ClusterConfig& cluster);

struct EvalResult {
    std::vector<double> per_class_iou;   // NaN for classes absent everywhere
    std::vector<long> gt_pixels;         // ground-truth pixels per class
    double miou = 0.0;                   // mean over classes present in ground truth
};

EvalResult evaluate_miou(const TrainState& state, const std::vector<SyntheticScene>& data);

// Mean |Sigma_s . mask| per layer, averaged over the dataset. Zero-bit masks
// yield 0.
std::array<double, 3> masked_covariance_means(const TrainState& state,
                                              const std::vector<SyntheticScene>& data,
                                              const std::vector<SelectionMask>& masks);

}  // namespace swt
