#pragma once

#include <cstdint>
#include <vector>

#include "swt/linalg.hpp"

namespace swt {

// C x C binary mask restricted to the strict upper triangle. Carries both the
// full mask M (every pair i < j) and its style-selective subsets.
struct SelectionMask {
    int dim = 0;
    std::vector<uint8_t> bits;  // row-major, dim*dim

    SelectionMask() = default;
    explicit SelectionMask(int d) : dim(d), bits(static_cast<size_t>(d) * d, 0) {
        if (d <= 0) throw DimensionError("SelectionMask: dim must be positive");
    }

    bool get(int i, int j) const { return bits[static_cast<size_t>(i) * dim + j] != 0; }
    void set(int i, int j, bool v) {
        if (i >= j) throw DimensionError("SelectionMask: only strict upper entries may be set");
        bits[static_cast<size_t>(i) * dim + j] = v ? 1 : 0;
    }

    int popcount() const {
        int n = 0;
        for (uint8_t b : bits) n += b != 0;
        return n;
    }

    bool is_strict_upper() const {
        for (int i = 0; i < dim; ++i) {
            for (int j = 0; j <= i; ++j) {
                if (bits[static_cast<size_t>(i) * dim + j]) return false;
            }
        }
        return true;
    }

    bool is_subset_of(const SelectionMask& other) const {
        if (dim != other.dim) return false;
        for (size_t i = 0; i < bits.size(); ++i) {
            if (bits[i] && !other.bits[i]) return false;
        }
        return true;
    }

    bool operator==(const SelectionMask& other) const {
        return dim == other.dim && bits == other.bits;
    }
};

// Strict upper triangular mask: bits[i][j] = 1 iff i < j.
SelectionMask full_mask(int channels);

enum class LossVariant { DWT, IW, IRW, ISW };

const char* to_string(LossVariant v);
LossVariant loss_variant_from_string(const std::string& s);

struct LossConfig {
    LossVariant variant = LossVariant::ISW;
    double margin_delta = 0.0;  // IRW only; best supplementary sweep row is 1/64
    double lambda_weight = 0.6;
    int num_layers = 3;
    // Masked losses divide by the mask cardinality by default; the
    // alternative reading of the arithmetic mean divides by C^2.
    bool average_over_all_entries = false;

    void validate() const;
};

inline constexpr double kDefaultIrwMargin = 1.0 / 64.0;

// Loss value plus its gradient with respect to the raw input feature map.
struct LossResult {
    double value = 0.0;
    FeatureMap gradient;
};

// mean |Sigma_mu - I| over all C^2 entries, gradient through Eq. of the
// population covariance.
LossResult dwt_loss(const FeatureMap& x);

// mean |Sigma_s(i,j)| over the mask's 1-bits, gradient chained through the
// per-channel mean/variance of standardization. Empty mask yields 0.
LossResult iw_loss(const FeatureMap& x, const SelectionMask& m,
                   bool average_over_all_entries = false);

// Hinge relaxation: max(iw - delta, 0); zero gradient at and inside the margin.
LossResult irw_loss(const FeatureMap& x, const SelectionMask& m, double delta,
                    bool average_over_all_entries = false);

// Same contract as iw_loss, averaged over the selective mask.
LossResult isw_loss(const FeatureMap& x, const SelectionMask& m_tilde,
                    bool average_over_all_entries = false);

// Value-only variants (no gradient tensor); used for logging and statistics.
double iw_loss_value(const FeatureMap& x, const SelectionMask& m,
                     bool average_over_all_entries = false);
double dwt_loss_value(const FeatureMap& x);

// Combined objective: task + lambda * (1/L) * sum of whitening losses.
// Gradients are returned pre-scaled by their weights, in their own spaces.
struct CombinedLoss {
    double value = 0.0;
    FeatureMap task_gradient;
    std::vector<FeatureMap> whitening_gradients;
};

CombinedLoss total_loss(const LossResult& task,
                        const std::vector<LossResult>& whitening,
                        const LossConfig& config);

// Gradient-descent comparison of the raw-covariance objective against the
// standardize-then-decorrelate objective on a free variable X.
struct ConflictReport {
    double initial_offdiag = 0.0;  // mean |offdiag Sigma_s| of the input
    double dwt_offdiag = 0.0;      // after descending dwt_loss
    double iw_offdiag = 0.0;       // after descending iw_loss
    bool dwt_diverged = false;
    bool iw_diverged = false;
    int dwt_diverged_at = -1;
    int iw_diverged_at = -1;
};

ConflictReport conflict_probe(const FeatureMap& x, int steps, double lr);

// Mean absolute strict-upper entry of the standardized covariance.
double mean_offdiag_abs(const Matrix& sigma);

}  // namespace swt
