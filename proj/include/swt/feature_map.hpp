#pragma once

#include <cmath>
#include <vector>

#include "swt/common.hpp"

namespace swt {

// A C x H x W activation tensor, row-major with channel as the slowest axis.
// RGB rasters are feature maps with channels == 3 and values in [0, 1].
struct FeatureMap {
    int channels = 0;
    int height = 0;
    int width = 0;
    std::vector<double> data;

    FeatureMap() = default;
    FeatureMap(int c, int h, int w, double fill = 0.0)
        : channels(c), height(h), width(w),
          data(static_cast<size_t>(c) * h * w, fill) {
        if (c <= 0 || h <= 0 || w <= 0) {
            throw DimensionError("FeatureMap: dimensions must be positive");
        }
    }

    int pixels() const { return height * width; }
    size_t size() const { return data.size(); }

    double& at(int c, int y, int x) {
        return data[(static_cast<size_t>(c) * height + y) * width + x];
    }
    double at(int c, int y, int x) const {
        return data[(static_cast<size_t>(c) * height + y) * width + x];
    }

    double* channel(int c) { return data.data() + static_cast<size_t>(c) * pixels(); }
    const double* channel(int c) const {
        return data.data() + static_cast<size_t>(c) * pixels();
    }

    bool same_shape(const FeatureMap& other) const {
        return channels == other.channels && height == other.height && width == other.width;
    }

    bool all_finite() const {
        for (double v : data) {
            if (!std::isfinite(v)) return false;
        }
        return true;
    }
};

// Throws unless x has positive dims, consistent storage and finite values.
void validate_feature_map(const FeatureMap& x, const char* op);

}  // namespace swt
