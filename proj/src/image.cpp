#include "swt/image.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace swt {

Hsv rgb_to_hsv(double r, double g, double b) {
    const double v = std::max({r, g, b});
    const double mn = std::min({r, g, b});
    const double delta = v - mn;
    Hsv out;
    out.v = v;
    out.s = v > 0.0 ? delta / v : 0.0;
    if (delta == 0.0) {
        out.h = 0.0;
        return out;
    }
    double h;
    if (v == r) {
        h = (g - b) / delta;
        if (h < 0.0) h += 6.0;
    } else if (v == g) {
        h = (b - r) / delta + 2.0;
    } else {
        h = (r - g) / delta + 4.0;
    }
    if (h >= 6.0) h -= 6.0;
    out.h = h;
    return out;
}

void hsv_to_rgb(const Hsv& hsv, double& r, double& g, double& b) {
    const double c = hsv.v * hsv.s;
    const double hp = hsv.h;
    const int sector = std::min(5, std::max(0, static_cast<int>(hp)));
    const double frac = hp - sector;
    const double m = hsv.v - c;
    double x;
    switch (sector) {
        case 0: x = c * frac;         r = c + m; g = x + m; b = m;     break;
        case 1: x = c * (1.0 - frac); r = x + m; g = c + m; b = m;     break;
        case 2: x = c * frac;         r = m;     g = c + m; b = x + m; break;
        case 3: x = c * (1.0 - frac); r = m;     g = x + m; b = c + m; break;
        case 4: x = c * frac;         r = x + m; g = m;     b = c + m; break;
        default: x = c * (1.0 - frac); r = c + m; g = m;    b = x + m; break;
    }
}

double portable_exp(double x) {
    if (x != x) return x;
    if (x > 709.0) return std::numeric_limits<double>::infinity();
    if (x < -745.0) return 0.0;
    // x = n*ln2 + r with |r| <= ln2/2, exp(r) by a 13-term Horner series.
    constexpr double kLn2Hi = 6.93147180369123816490e-01;
    constexpr double kLn2Lo = 1.90821492927058770002e-10;
    constexpr double kInvLn2 = 1.44269504088896338700e+00;
    const double nd = std::floor(x * kInvLn2 + 0.5);
    const int n = static_cast<int>(nd);
    const double r = (x - nd * kLn2Hi) - nd * kLn2Lo;
    double p = 1.0;
    for (int k = 13; k >= 1; --k) {
        p = 1.0 + p * r / k;
    }
    return std::ldexp(p, n);
}

std::vector<double> gaussian_kernel(double sigma) {
    if (sigma < 0.0) throw ConfigError("gaussian_kernel: sigma must be >= 0");
    if (sigma == 0.0) return {1.0};
    const int radius = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> k(2 * radius + 1);
    const double inv = 1.0 / (2.0 * sigma * sigma);
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        const double v = portable_exp(-(static_cast<double>(i) * i) * inv);
        k[i + radius] = v;
        sum += v;
    }
    for (double& v : k) v /= sum;
    return k;
}

namespace {

// Symmetric reflection: -1 -> 0, n -> n-1.
inline int reflect(int i, int n) {
    while (i < 0 || i >= n) {
        if (i < 0) i = -i - 1;
        if (i >= n) i = 2 * n - 1 - i;
    }
    return i;
}

}  // namespace

FeatureMap gaussian_blur(const FeatureMap& img, double sigma) {
    validate_feature_map(img, "gaussian_blur");
    if (sigma == 0.0) return img;
    const std::vector<double> kernel = gaussian_kernel(sigma);
    const int radius = static_cast<int>(kernel.size() / 2);
    const int h = img.height, w = img.width;

    FeatureMap tmp(img.channels, h, w);
    for (int c = 0; c < img.channels; ++c) {
        const double* src = img.channel(c);
        double* dst = tmp.channel(c);
        for (int y = 0; y < h; ++y) {
            const double* row = src + static_cast<size_t>(y) * w;
            for (int x = 0; x < w; ++x) {
                double s = 0.0;
                for (int k = -radius; k <= radius; ++k) {
                    s += kernel[k + radius] * row[reflect(x + k, w)];
                }
                dst[static_cast<size_t>(y) * w + x] = s;
            }
        }
    }
    FeatureMap out(img.channels, h, w);
    for (int c = 0; c < img.channels; ++c) {
        const double* src = tmp.channel(c);
        double* dst = out.channel(c);
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                double s = 0.0;
                for (int k = -radius; k <= radius; ++k) {
                    s += kernel[k + radius] * src[static_cast<size_t>(reflect(y + k, h)) * w + x];
                }
                dst[static_cast<size_t>(y) * w + x] = s;
            }
        }
    }
    return out;
}

FeatureMap rotate_hue(const FeatureMap& img, double radians) {
    validate_feature_map(img, "rotate_hue");
    if (img.channels != 3) throw DimensionError("rotate_hue: expected a 3-channel image");
    if (radians == 0.0) return img;
    constexpr double kPi = 3.14159265358979323846;
    const double shift_sectors = radians * (3.0 / kPi);

    FeatureMap out = img;
    const int n = img.pixels();
    double* r = out.channel(0);
    double* g = out.channel(1);
    double* b = out.channel(2);
    for (int p = 0; p < n; ++p) {
        Hsv hsv = rgb_to_hsv(r[p], g[p], b[p]);
        double h = std::fmod(hsv.h + shift_sectors, 6.0);
        if (h < 0.0) h += 6.0;
        hsv.h = h;
        hsv_to_rgb(hsv, r[p], g[p], b[p]);
    }
    return out;
}

void clamp01(FeatureMap& img) {
    for (double& v : img.data) {
        v = std::min(1.0, std::max(0.0, v));
    }
}

}  // namespace swt
