#include "ctrvis/features.hpp"

#include <cstdio>

#include "ctrvis/error.hpp"

namespace ctrvis {

namespace {

constexpr std::array<std::string_view, kFeatureCount> kDescriptions = {
    "gray level contrast (middle 95% width)",
    "dominant gray level bins",
    "gray level standard deviation",
    "dominant RGB bins",
    "largest RGB bin share",
    "dominant HSV bins",
    "largest HSV bin share",
    "best harmony template deviation",
    "mean deviation of two best harmony templates",
    "coherent component count",
    "largest coherent component share",
    "second coherent component share",
    "color rank of largest coherent component",
    "color rank of second coherent component",
    "dominant hue count",
    "dominant hue contrast",
    "hue spread around red",
    "mean lightness",
    "lightness standard deviation",
    "largest segment share",
    "segment size contrast",
    "image-wide dominant hues in largest segment",
    "segment-wide dominant hues in largest segment",
    "most dominant hues in one segment",
    "dominant hue count contrast across segments",
    "hue contrast in largest segment",
    "spread of segment hue contrast",
    "largest segment harmony deviation",
    "largest segment two-template harmony deviation",
    "largest segment mean lightness",
    "spread of segment mean lightness",
    "segment mean lightness range",
    "saliency background share",
    "salient component count",
    "largest salient component share",
    "largest salient component mean saliency",
    "background component count",
    "largest background component share",
    "total distance between salient centers",
    "distance from main salient center to a thirds point",
    "total distance of salient centers to image center",
    "character count",
    "face count",
};

}  // namespace

std::string feature_name(int n) { return "f" + std::to_string(n); }

std::string_view feature_description(int n) {
    if (n < 1 || n > static_cast<int>(kFeatureCount)) return {};
    return kDescriptions[static_cast<std::size_t>(n - 1)];
}

bool is_count_feature(int n) noexcept {
    switch (n) {
        case 2: case 4: case 6: case 10: case 13: case 14: case 15: case 22: case 23: case 24:
        case 25: case 34: case 37: case 42: case 43:
            return true;
        default:
            return false;
    }
}

bool is_ratio_feature(int n) noexcept {
    switch (n) {
        case 5: case 7: case 11: case 12: case 18: case 20: case 21: case 30: case 33: case 35:
        case 38:
            return true;
        default:
            return false;
    }
}

void ThresholdConfig::validate() const {
    auto in_unit = [](double v) { return v > 0.0 && v < 1.0; };
    if (!in_unit(c1) || !in_unit(c2) || !in_unit(c4_frac) || !in_unit(c5) || !in_unit(c6) ||
        !in_unit(sat_val_floor)) {
        throw Error(ErrorCode::InvalidArgument, "threshold constants must lie in (0, 1)");
    }
    if (!(harmony_rotation_step > 0.0 && harmony_rotation_step < 360.0)) {
        throw Error(ErrorCode::InvalidArgument, "harmony rotation step must lie in (0, 360)");
    }
}

std::string ThresholdConfig::canonical() const {
    char buf[256];
    std::snprintf(buf, sizeof(buf), "c1=%.17g;c2=%.17g;c4=%.17g;c5=%.17g;c6=%.17g;satval=%.17g;step=%.17g",
                  c1, c2, c4_frac, c5, c6, sat_val_floor, harmony_rotation_step);
    return buf;
}

}  // namespace ctrvis
