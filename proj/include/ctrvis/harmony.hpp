#pragma once

#include <array>
#include <span>
#include <string_view>
#include <vector>

#include "ctrvis/image.hpp"

namespace ctrvis {

struct HueSector {
    double center = 0.0;  // offset from the template's rotation, degrees
    double width = 0.0;   // angular width, degrees
};

/// Hue-wheel harmony template. Template N has no sectors: it admits only
/// achromatic pixels.
struct HarmonyTemplate {
    char name = '?';
    std::vector<HueSector> sectors;
};

inline constexpr std::size_t kHarmonyTemplateCount = 8;

/// Templates in the order i, V, L, I, T, Y, X, N. Every template's first
/// sector is centered on the rotation angle, so i, V and T are nested for
/// every rotation.
const std::array<HarmonyTemplate, kHarmonyTemplateCount>& harmony_templates();

/// Shortest angular distance between two hues, in degrees, in [0, 180].
double hue_arc_degrees(double a, double b) noexcept;

/// Arc distance (radians, in [0, pi]) from `hue` to the nearest point of the
/// template rotated by `alpha` degrees; 0 inside a sector and pi for N.
double template_distance(const HarmonyTemplate& t, double alpha, double hue) noexcept;

struct HarmonyFit {
    std::array<double, kHarmonyTemplateCount> gamma{};  // per template, in template order
    double best = 0.0;      // min gamma
    double best_two = 0.0;  // mean of the two smallest gammas
};

/// Saturation-weighted hue distance to each template, minimized over a uniform
/// rotation grid with the given step, normalized by pixels.size() (the whole
/// image or one segment). Hues are pooled into half-degree bins represented by
/// their saturation-weighted mean hue before the rotation sweep.
HarmonyFit fit_harmony(std::span<const HsvPixel> pixels, double rotation_step);

}  // namespace ctrvis
