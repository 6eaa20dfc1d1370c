#pragma once

#include <functional>
#include <string>

#include "swt/network.hpp"

namespace swt {

// Central finite differences of a scalar functional, step h per coordinate.
FeatureMap finite_difference_gradient(const std::function<double(const FeatureMap&)>& f,
                                      FeatureMap x, double h);

// max |a - n| normalized by the larger gradient magnitude.
double gradient_relative_error(const std::vector<double>& analytic,
                               const std::vector<double>& numeric);

inline constexpr double kFdStep = 1e-5;
inline constexpr double kLossGradTolerance = 1e-6;
inline constexpr double kEndToEndGradTolerance = 1e-5;

struct GradCheckReport {
    std::string name;
    int cases = 0;
    double worst_rel_error = 0.0;
    double tolerance = 0.0;
    bool pass = false;
};

// Finite-difference suite for one loss variant over random feature maps
// (C in {2,4,8,16}, H*W in {4,16,64}; `channels` overrides the C choices).
// Instances are resampled when a covariance entry sits on the L1 kink,
// where the oracle is undefined. `corrupt` perturbs one analytic entry to
// prove the harness can fail.
GradCheckReport gradcheck_loss(LossVariant variant, uint64_t seed, int cases,
                               bool corrupt = false,
                               const std::vector<int>& channels = {});

// Finite differences of the combined objective (task + optional auxiliary
// head + weighted whitening losses) with respect to every network parameter
// on a small instance.
GradCheckReport gradcheck_end_to_end(uint64_t seed, int cases, bool aux_head,
                                     bool corrupt = false);

}  // namespace swt
