#include "swt/dataset.hpp"

#include <algorithm>
#include <cmath>

namespace swt {

void StyleRange::validate() const {
    if (!hue_rotation.well_ordered() || !brightness_scale.well_ordered() ||
        !blur_sigma.well_ordered()) {
        throw ConfigError("StyleRange: every range must satisfy lo <= hi");
    }
    if (blur_sigma.lo < 0.0) throw ConfigError("StyleRange: blur sigma must be >= 0");
    if (brightness_scale.lo < 0.0) {
        throw ConfigError("StyleRange: brightness scale must be >= 0");
    }
}

void DatasetConfig::validate() const {
    if (num_scenes < 1) throw ConfigError("DatasetConfig: num_scenes must be >= 1");
    if (height < 8 || width < 8) throw ConfigError("DatasetConfig: scene too small");
    if (num_classes < 2 || num_classes > 5) {
        throw ConfigError("DatasetConfig: num_classes must be in [2, 5]");
    }
    style.validate();
}

namespace {

struct Rgb {
    double r, g, b;
};

// Base palette; class 0 is the background.
constexpr Rgb kPalette[5] = {
    {0.45, 0.42, 0.40},  // muted background
    {0.85, 0.25, 0.25},  // red
    {0.25, 0.80, 0.30},  // green
    {0.25, 0.35, 0.85},  // blue
    {0.82, 0.78, 0.22},  // yellow
};

// Oriented gratings keyed by class; orientation/frequency is the
// style-invariant cue.
double texture_intensity(int cls, double x, double y, double phase) {
    constexpr double kTau = 6.28318530717958647692;
    switch (cls) {
        case 1: return 0.5 + 0.42 * std::sin(kTau * y / 6.0 + phase);           // horizontal stripes
        case 2: return 0.5 + 0.42 * std::sin(kTau * x / 6.0 + phase);           // vertical stripes
        case 3: return 0.5 + 0.42 * std::sin(kTau * (x + y) / 8.0 + phase);     // diagonal stripes
        case 4: return 0.5 + 0.42 * std::sin(kTau * x / 5.0 + phase) *
                                    std::sin(kTau * y / 5.0 + phase);           // checker
        default:  // background: slow diagonal wash
            return 0.5 + 0.25 * std::sin(kTau * (0.35 * x + 0.65 * y) / 40.0 + phase);
    }
}

struct Shape {
    int kind;  // 0 rect, 1 ellipse, 2 triangle
    int cls;
    double cx, cy, rx, ry;
    double phase;
};

bool covers(const Shape& s, int x, int y) {
    const double dx = x - s.cx;
    const double dy = y - s.cy;
    switch (s.kind) {
        case 0: return std::abs(dx) <= s.rx && std::abs(dy) <= s.ry;
        case 1: return (dx * dx) / (s.rx * s.rx) + (dy * dy) / (s.ry * s.ry) <= 1.0;
        default:  // upward isosceles triangle
            if (dy < -s.ry || dy > s.ry) return false;
            return std::abs(dx) <= s.rx * (s.ry - dy) / (2.0 * s.ry);
    }
}

}  // namespace

SyntheticScene generate_scene(uint64_t content_seed, const SceneStyle& style,
                              int height, int width, int num_classes) {
    Rng rng(mix_seed(content_seed, 0x5ce9e));
    const int num_shapes = 2 + static_cast<int>(rng.index(4));  // 2..5

    std::vector<Shape> shapes(num_shapes);
    for (Shape& s : shapes) {
        s.kind = static_cast<int>(rng.index(3));
        s.cls = 1 + static_cast<int>(rng.index(num_classes - 1));
        s.cx = rng.uniform(width * 0.15, width * 0.85);
        s.cy = rng.uniform(height * 0.15, height * 0.85);
        s.rx = rng.uniform(width * 0.08, width * 0.22);
        s.ry = rng.uniform(height * 0.08, height * 0.22);
        s.phase = rng.uniform(0.0, 6.28318530717958647692);
    }
    const double bg_phase = rng.uniform(0.0, 6.28318530717958647692);

    SyntheticScene scene;
    scene.content_seed = content_seed;
    scene.style = style;
    scene.labels.assign(static_cast<size_t>(height) * width, 0);
    scene.image = FeatureMap(3, height, width);

    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            int cls = 0;
            double phase = bg_phase;
            // later shapes overwrite earlier ones
            for (const Shape& s : shapes) {
                if (covers(s, x, y)) {
                    cls = s.cls;
                    phase = s.phase;
                }
            }
            scene.labels[static_cast<size_t>(y) * width + x] = cls;
            const double t = texture_intensity(cls, x, y, phase);
            const Rgb& base = kPalette[cls];
            scene.image.at(0, y, x) = std::min(1.0, std::max(0.0, base.r * t * 1.6));
            scene.image.at(1, y, x) = std::min(1.0, std::max(0.0, base.g * t * 1.6));
            scene.image.at(2, y, x) = std::min(1.0, std::max(0.0, base.b * t * 1.6));
        }
    }

    // Style pass: photometric only, labels stay put.
    if (style.hue_rotation != 0.0) scene.image = rotate_hue(scene.image, style.hue_rotation);
    if (style.brightness_scale != 1.0) {
        for (double& v : scene.image.data) {
            v = std::min(1.0, std::max(0.0, v * style.brightness_scale));
        }
    }
    if (style.blur_sigma > 0.0) scene.image = gaussian_blur(scene.image, style.blur_sigma);
    clamp01(scene.image);
    return scene;
}

std::vector<SyntheticScene> generate_dataset(const DatasetConfig& cfg) {
    cfg.validate();
    Rng style_rng(mix_seed(cfg.seed, 0xd0d0));
    std::vector<SyntheticScene> scenes;
    scenes.reserve(cfg.num_scenes);
    for (int i = 0; i < cfg.num_scenes; ++i) {
        SceneStyle style;
        style.hue_rotation = style_rng.uniform(cfg.style.hue_rotation.lo, cfg.style.hue_rotation.hi);
        style.brightness_scale =
            style_rng.uniform(cfg.style.brightness_scale.lo, cfg.style.brightness_scale.hi);
        style.blur_sigma = style_rng.uniform(cfg.style.blur_sigma.lo, cfg.style.blur_sigma.hi);
        const uint64_t content_seed = mix_seed(cfg.seed, 0xc0000 + static_cast<uint64_t>(i));
        scenes.push_back(generate_scene(content_seed, style, cfg.height, cfg.width, cfg.num_classes));
    }
    return scenes;
}

}  // namespace swt
