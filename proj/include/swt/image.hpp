#pragma once

#include "swt/feature_map.hpp"

namespace swt {

// Hexcone HSV with hue in sector units [0, 6). The formulas are pinned in
// doc/FORMATS.md so golden images stay stable.
struct Hsv {
    double h = 0.0;
    double s = 0.0;
    double v = 0.0;
};

Hsv rgb_to_hsv(double r, double g, double b);
void hsv_to_rgb(const Hsv& hsv, double& r, double& g, double& b);

// Rec.601 luma.
inline double luma(double r, double g, double b) {
    return 0.299 * r + 0.587 * g + 0.114 * b;
}

// exp(x) from fully specified arithmetic (range reduction + Horner + ldexp);
// used wherever byte-stable outputs are generated, since libm exp varies
// across platforms in the last ulp.
double portable_exp(double x);

// Discrete Gaussian kernel sampled at integer offsets, truncated at
// radius ceil(3*sigma) and renormalized. sigma == 0 yields {1}.
std::vector<double> gaussian_kernel(double sigma);

// Separable Gaussian blur with reflective borders, applied per channel.
FeatureMap gaussian_blur(const FeatureMap& img, double sigma);

// Rotate hue of a 3xHxW image by `radians`; saturation/value untouched.
FeatureMap rotate_hue(const FeatureMap& img, double radians);

void clamp01(FeatureMap& img);

}  // namespace swt
