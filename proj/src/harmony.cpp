#include "ctrvis/harmony.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "ctrvis/error.hpp"

namespace ctrvis {

const std::array<HarmonyTemplate, kHarmonyTemplateCount>& harmony_templates() {
    static const std::array<HarmonyTemplate, kHarmonyTemplateCount> templates = {{
        {'i', {{0.0, 18.0}}},
        {'V', {{0.0, 93.6}}},
        {'L', {{0.0, 18.0}, {90.0, 79.2}}},
        {'I', {{0.0, 18.0}, {180.0, 18.0}}},
        {'T', {{0.0, 180.0}}},
        {'Y', {{0.0, 93.6}, {180.0, 18.0}}},
        {'X', {{0.0, 93.6}, {180.0, 93.6}}},
        {'N', {}},
    }};
    return templates;
}

double hue_arc_degrees(double a, double b) noexcept {
    double d = std::fmod(std::fabs(a - b), 360.0);
    return d > 180.0 ? 360.0 - d : d;
}

double template_distance(const HarmonyTemplate& t, double alpha, double hue) noexcept {
    if (t.sectors.empty()) return std::numbers::pi;
    double best = 180.0;
    for (const HueSector& s : t.sectors) {
        const double d = hue_arc_degrees(hue, alpha + s.center) - 0.5 * s.width;
        best = std::min(best, std::max(0.0, d));
    }
    return best * std::numbers::pi / 180.0;
}

HarmonyFit fit_harmony(std::span<const HsvPixel> pixels, double rotation_step) {
    if (pixels.empty()) throw Error(ErrorCode::InvalidArgument, "harmony fit needs at least one pixel");
    if (!(rotation_step > 0.0 && rotation_step < 360.0)) {
        throw Error(ErrorCode::InvalidArgument, "rotation step must lie in (0, 360)");
    }

    constexpr int kBins = 720;
    std::array<double, kBins> weight{};
    std::array<double, kBins> weighted_hue{};
    for (const HsvPixel& p : pixels) {
        if (p.saturation <= 0.0) continue;
        const int b = std::min(kBins - 1, static_cast<int>(p.hue * (kBins / 360.0)));
        weight[b] += p.saturation;
        weighted_hue[b] += p.saturation * p.hue;
    }
    struct Pooled {
        double hue;
        double weight;
    };
    std::vector<Pooled> pooled;
    double total_weight = 0.0;
    for (int b = 0; b < kBins; ++b) {
        if (weight[b] > 0.0) {
            pooled.push_back({weighted_hue[b] / weight[b], weight[b]});
            total_weight += weight[b];
        }
    }

    const double n = static_cast<double>(pixels.size());
    const int steps = static_cast<int>(std::ceil(360.0 / rotation_step - 1e-9));
    const auto& templates = harmony_templates();

    HarmonyFit fit;
    for (std::size_t t = 0; t < templates.size(); ++t) {
        if (templates[t].sectors.empty()) {
            fit.gamma[t] = total_weight * std::numbers::pi / n;
            continue;
        }
        double best = std::numeric_limits<double>::infinity();
        for (int k = 0; k < steps && best > 0.0; ++k) {
            const double alpha = k * rotation_step;
            double sum = 0.0;
            for (const Pooled& p : pooled) sum += p.weight * template_distance(templates[t], alpha, p.hue);
            best = std::min(best, sum / n);
        }
        fit.gamma[t] = pooled.empty() ? 0.0 : best;
    }

    std::array<double, kHarmonyTemplateCount> sorted = fit.gamma;
    std::sort(sorted.begin(), sorted.end());
    fit.best = sorted[0];
    fit.best_two = 0.5 * (sorted[0] + sorted[1]);
    return fit;
}

}  // namespace ctrvis
