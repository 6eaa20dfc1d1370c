#pragma once

#include "swt/losses.hpp"
#include "swt/matrix.hpp"

namespace swt {

// Running variance matrix V of standardized-covariance entries across
// photometric transformations. Stores the sum of per-pair variance
// contributions so that merging partial accumulations is exact.
struct SensitivityStats {
    int dim = 0;
    Matrix sum;  // accumulated sigma_i^2, entrywise
    long sample_count = 0;

    SensitivityStats() = default;
    explicit SensitivityStats(int d) : dim(d), sum(d, d) {
        if (d <= 0) throw DimensionError("SensitivityStats: dim must be positive");
    }

    // V = (1/N) sum of sigma_i^2.
    Matrix variance_matrix() const;
};

// Adds one (original, transformed) covariance pair. The per-pair variance of
// two samples reduces to 1/4 (a - b)^2 entrywise.
SensitivityStats accumulate_pair(SensitivityStats stats, const Matrix& sigma_orig,
                                 const Matrix& sigma_aug);

// Joins two partial accumulations; equals accumulating all pairs into one.
SensitivityStats merge(const SensitivityStats& a, const SensitivityStats& b);

struct ClusterConfig {
    int k = 3;
    int m = 1;
    // Cluster log10(V + 1e-12) rather than raw magnitudes; variance spectra
    // span orders of magnitude.
    bool log_scale = true;

    void validate() const;
};

inline constexpr double kLogClusterFloor = 1e-12;

struct KmeansResult {
    std::vector<int> labels;        // per input value; cluster ids ascend with centroid
    std::vector<double> centroids;  // ascending, length effective_k
    int effective_k = 0;            // < k when there are fewer distinct values
    double objective = 0.0;         // within-cluster sum of squared deviations
};

// Globally optimal 1-D k-means over contiguous partitions of the sorted
// values, by dynamic programming. Deterministic; ties at boundaries resolve
// toward the lower cluster. Fewer distinct values than k degrades to one
// cluster per distinct value.
KmeansResult kmeans_1d(const std::vector<double>& values, int k);

struct MaskDerivation {
    SelectionMask mask;
    KmeansResult clustering;
    // Effective cluster count <= m: the split is impossible and the mask is
    // empty. A status, not an error.
    bool degenerate = false;
};

// Clusters the strict-upper entries of V and selects the entries falling in
// the top k-m clusters.
MaskDerivation derive_mask(const SensitivityStats& stats, const ClusterConfig& cfg);

}  // namespace swt
