#pragma once

#include <vector>

#include "swt/feature_map.hpp"
#include "swt/matrix.hpp"

namespace swt {

// Per-channel mean of a feature map, length == channels.
using MeanVector = std::vector<double>;

// Symmetric eigendecomposition, eigenvalues descending, column i of
// eigenvectors paired with eigenvalues[i].
struct EigenDecomposition {
    std::vector<double> eigenvalues;
    Matrix eigenvectors;
};

// Rank handling for inverse_sqrt / whiten. strict rejects matrices whose
// trailing eigenvalues fall below the rank tolerance; lenient zeroes the
// corresponding entries of the inverse square root (pseudo-inverse).
enum class RankMode { strict, lenient };

// Channel variance floor used by standardization. Scale is 1/sqrt(max(var, eps)):
// exact unit variance above the floor, bounded amplification below it,
// all-zero output for constant channels.
inline constexpr double kStandardizeEpsilon = 1e-5;

// Eigenvalues <= kRankTolerance * lambda_max count as null space.
inline constexpr double kRankTolerance = 1e-10;

// Jacobi sweep convergence: off-diagonal Frobenius <= tol * ||A||_F.
inline constexpr double kJacobiTolerance = 1e-12;
inline constexpr int kJacobiMaxSweeps = 100;

MeanVector compute_mean(const FeatureMap& x);

// Population covariance (divides by H*W, no Bessel correction).
Matrix compute_covariance(const FeatureMap& x, const MeanVector& mu);

// Cyclic Jacobi rotations with fixed row-major sweep order; deterministic
// for identical input. Throws NumericError on non-convergence.
EigenDecomposition sym_eigen(const Matrix& m);

// Q diag(lambda^-1/2) Q^T. Eigenvalues below the rank tolerance are an error
// in strict mode and mapped to zero in lenient mode.
Matrix inverse_sqrt(const Matrix& m, RankMode mode = RankMode::strict);

// Closed-form whitening: Sigma^-1/2 (X - mu 1^T).
FeatureMap whiten(const FeatureMap& x, RankMode mode = RankMode::strict);

// Per-channel zero-mean unit-variance rescaling (instance normalization,
// no affine parameters).
FeatureMap standardize(const FeatureMap& x);

// Covariance of the standardized map: (1/HW) Xs Xs^T. Entries are
// correlations in [-1, 1]; unit diagonal for non-degenerate channels.
Matrix standardized_covariance(const FeatureMap& x);

// Validation helper: symmetry within 1e-12 and eigenvalues >= -1e-9 slack.
bool is_valid_covariance(const Matrix& m, std::string* why = nullptr);

}  // namespace swt
