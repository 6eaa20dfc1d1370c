#pragma once

#include <cstdint>

#include "swt/image.hpp"

namespace swt {

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
    bool well_ordered() const { return lo <= hi; }
    bool is_point(double v) const { return lo == v && hi == v; }
};

inline constexpr double kPi = 3.14159265358979323846;

// Color jitter + Gaussian blur family. Factor defaults mirror the usual
// jitter strengths (0.8 brightness/contrast/saturation, 0.3 of the hue
// wheel); blur sigma range follows the common (0.1, 2.0) default.
struct PhotometricTransform {
    Interval brightness{0.2, 1.8};
    Interval contrast{0.2, 1.8};
    Interval saturation{0.2, 1.8};
    Interval hue_shift{-0.6 * kPi, 0.6 * kPi};  // radians
    Interval blur_sigma{0.1, 2.0};
    uint64_t rng_seed = 0;

    void validate() const;

    // Ranges collapsed so that apply_transform is the identity map.
    static PhotometricTransform identity(uint64_t seed = 0);
};

// Jitter factors are drawn uniformly from the ranges, in the fixed order
// brightness, contrast, saturation, hue, blur sigma, from a stream keyed by
// (t.rng_seed, draw_seed); then the operations are applied in that same
// order. Output is clamped to [0, 1]. Deterministic given both seeds.
FeatureMap apply_transform(const FeatureMap& image, const PhotometricTransform& t,
                           uint64_t draw_seed);

}  // namespace swt
