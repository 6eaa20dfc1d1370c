#include "swt/photometric.hpp"

#include <algorithm>
#include <cmath>

namespace swt {

void PhotometricTransform::validate() const {
    if (!brightness.well_ordered() || !contrast.well_ordered() ||
        !saturation.well_ordered() || !hue_shift.well_ordered() ||
        !blur_sigma.well_ordered()) {
        throw ConfigError("PhotometricTransform: every range must satisfy lo <= hi");
    }
    if (blur_sigma.lo < 0.0) {
        throw ConfigError("PhotometricTransform: blur sigma must be >= 0");
    }
}

PhotometricTransform PhotometricTransform::identity(uint64_t seed) {
    PhotometricTransform t;
    t.brightness = {1.0, 1.0};
    t.contrast = {1.0, 1.0};
    t.saturation = {1.0, 1.0};
    t.hue_shift = {0.0, 0.0};
    t.blur_sigma = {0.0, 0.0};
    t.rng_seed = seed;
    return t;
}

namespace {

void scale_all(FeatureMap& img, double f) {
    for (double& v : img.data) v = std::min(1.0, std::max(0.0, v * f));
}

// Blend toward the image-wide mean luma.
void adjust_contrast(FeatureMap& img, double f) {
    const int n = img.pixels();
    const double* r = img.channel(0);
    const double* g = img.channel(1);
    const double* b = img.channel(2);
    double m = 0.0;
    for (int p = 0; p < n; ++p) m += luma(r[p], g[p], b[p]);
    m /= n;
    const double add = (1.0 - f) * m;
    for (double& v : img.data) v = std::min(1.0, std::max(0.0, v * f + add));
}

// Blend each pixel toward its own luma.
void adjust_saturation(FeatureMap& img, double f) {
    const int n = img.pixels();
    double* r = img.channel(0);
    double* g = img.channel(1);
    double* b = img.channel(2);
    for (int p = 0; p < n; ++p) {
        const double gray = (1.0 - f) * luma(r[p], g[p], b[p]);
        r[p] = std::min(1.0, std::max(0.0, r[p] * f + gray));
        g[p] = std::min(1.0, std::max(0.0, g[p] * f + gray));
        b[p] = std::min(1.0, std::max(0.0, b[p] * f + gray));
    }
}

}  // namespace

FeatureMap apply_transform(const FeatureMap& image, const PhotometricTransform& t,
                           uint64_t draw_seed) {
    validate_feature_map(image, "apply_transform");
    if (image.channels != 3) {
        throw DimensionError("apply_transform: expected a 3-channel image");
    }
    t.validate();

    Rng rng(mix_seed(t.rng_seed, draw_seed));
    const double f_brightness = rng.uniform(t.brightness.lo, t.brightness.hi);
    const double f_contrast = rng.uniform(t.contrast.lo, t.contrast.hi);
    const double f_saturation = rng.uniform(t.saturation.lo, t.saturation.hi);
    const double hue = rng.uniform(t.hue_shift.lo, t.hue_shift.hi);
    const double sigma = rng.uniform(t.blur_sigma.lo, t.blur_sigma.hi);

    FeatureMap out = image;
    if (f_brightness != 1.0) scale_all(out, f_brightness);
    if (f_contrast != 1.0) adjust_contrast(out, f_contrast);
    if (f_saturation != 1.0) adjust_saturation(out, f_saturation);
    if (hue != 0.0) out = rotate_hue(out, hue);
    if (sigma > 0.0) out = gaussian_blur(out, sigma);
    clamp01(out);
    return out;
}

}  // namespace swt
