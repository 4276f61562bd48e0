#include "ctrvis/global_features.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "ctrvis/harmony.hpp"

namespace ctrvis {

double mean_of(std::span<const double> values) noexcept {
    if (values.empty()) return 0.0;
    double s = 0.0;
    for (double v : values) s += v;
    return s / static_cast<double>(values.size());
}

double population_stddev(std::span<const double> values) noexcept {
    if (values.size() < 2) return 0.0;
    // Shifted by the first value so constant input gives exactly zero.
    const double shift = values.front();
    double m = 0.0;
    for (double v : values) m += v - shift;
    m /= static_cast<double>(values.size());
    double ss = 0.0;
    for (double v : values) ss += (v - shift - m) * (v - shift - m);
    return std::sqrt(ss / static_cast<double>(values.size()));
}

int gray_contrast_width(const Histogram& gray) {
    const std::int64_t total = gray.total();
    if (total == 0) return 0;
    // A tail bin is discarded only while the cumulative mass through it stays
    // within 2.5% of the total: cum * 40 <= total.
    const int n = static_cast<int>(gray.counts.size());
    int lo = 0;
    std::int64_t cum = 0;
    for (; lo < n; ++lo) {
        cum += gray.counts[lo];
        if (cum * 40 > total) break;
    }
    int hi = n - 1;
    cum = 0;
    for (; hi >= 0; --hi) {
        cum += gray.counts[hi];
        if (cum * 40 > total) break;
    }
    return std::max(0, hi - lo);
}

int dominant_bin_count(const Histogram& h, double fraction) {
    const double threshold = fraction * static_cast<double>(h.max_count());
    int n = 0;
    for (auto c : h.counts) {
        if (c > 0 && static_cast<double>(c) >= threshold) ++n;
    }
    return n;
}

int bin_rank(const Histogram& h, int bin) {
    const auto target = h.counts[static_cast<std::size_t>(bin)];
    int rank = 1;
    for (std::size_t i = 0; i < h.counts.size(); ++i) {
        const auto c = h.counts[i];
        if (c > target || (c == target && static_cast<int>(i) < bin)) ++rank;
    }
    return rank;
}

double hue_bin_center(int k) noexcept { return 18.0 * k + 9.0; }

double max_bin_center_arc(std::span<const int> bins) noexcept {
    double best = 0.0;
    for (std::size_t i = 0; i < bins.size(); ++i) {
        for (std::size_t j = i + 1; j < bins.size(); ++j) {
            best = std::max(best, hue_arc_degrees(hue_bin_center(bins[i]), hue_bin_center(bins[j])));
        }
    }
    return best * std::numbers::pi / 180.0;
}

std::vector<CoherentComponent> coherent_components(const ImageBuffer& img, double c4_frac) {
    const int w = img.width(), h = img.height();
    const std::size_t n = img.size();
    std::vector<int> bins(n);
    for (std::size_t i = 0; i < n; ++i) bins[i] = hsv_bin(img.pixels()[i]);

    const double min_size = c4_frac * static_cast<double>(n);
    std::vector<char> seen(n, 0);
    std::vector<std::size_t> stack;
    std::vector<CoherentComponent> kept;
    for (std::size_t start = 0; start < n; ++start) {
        if (seen[start]) continue;
        CoherentComponent comp;
        comp.color_bin = bins[start];
        seen[start] = 1;
        stack.assign(1, start);
        while (!stack.empty()) {
            const std::size_t p = stack.back();
            stack.pop_back();
            comp.pixels.push_back(p);
            const int x = static_cast<int>(p % w), y = static_cast<int>(p / w);
            for (int dy = -1; dy <= 1; ++dy) {
                for (int dx = -1; dx <= 1; ++dx) {
                    const int nx = x + dx, ny = y + dy;
                    if ((dx == 0 && dy == 0) || nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
                    const std::size_t q = img.index(nx, ny);
                    if (!seen[q] && bins[q] == comp.color_bin) {
                        seen[q] = 1;
                        stack.push_back(q);
                    }
                }
            }
        }
        if (static_cast<double>(comp.size()) >= min_size) kept.push_back(std::move(comp));
    }
    std::stable_sort(kept.begin(), kept.end(),
                     [](const CoherentComponent& a, const CoherentComponent& b) { return a.size() > b.size(); });
    return kept;
}

void gray_level_features(const ImageBuffer& img, const ThresholdConfig& cfg, FeatureVector& out) {
    const Histogram hist = gray_histogram(img);
    out.set(1, gray_contrast_width(hist));
    out.set(2, dominant_bin_count(hist, cfg.c1));
    std::vector<double> gray;
    gray.reserve(img.size());
    for (const Rgb& p : img.pixels()) gray.push_back(gray_of(p));
    out.set(3, population_stddev(gray));
}

void color_distribution_features(const ImageBuffer& img, const ThresholdConfig& cfg, FeatureVector& out) {
    const double n = static_cast<double>(img.size());
    const Histogram rgb = rgb_histogram(img);
    out.set(4, dominant_bin_count(rgb, cfg.c2));
    out.set(5, static_cast<double>(rgb.max_count()) / n);
    const Histogram hsv = hsv_histogram(img);
    out.set(6, dominant_bin_count(hsv, cfg.c2));
    out.set(7, static_cast<double>(hsv.max_count()) / n);
}

void harmony_features(std::span<const HsvPixel> hsv, const ThresholdConfig& cfg, FeatureVector& out) {
    const HarmonyFit fit = fit_harmony(hsv, cfg.harmony_rotation_step);
    out.set(8, fit.best);
    out.set(9, fit.best_two);
}

void coherent_component_features(const ImageBuffer& img, const ThresholdConfig& cfg, FeatureVector& out) {
    const auto comps = coherent_components(img, cfg.c4_frac);
    const double n = static_cast<double>(img.size());
    out.set(10, static_cast<double>(comps.size()));
    if (comps.empty()) {
        out.set(11, 0.0, false);
        out.set(13, 0.0, false);
    } else {
        out.set(11, static_cast<double>(comps[0].size()) / n);
    }
    if (comps.size() < 2) {
        out.set(12, 0.0, false);
        out.set(14, 0.0, false);
    } else {
        out.set(12, static_cast<double>(comps[1].size()) / n);
    }
    if (!comps.empty()) {
        const Histogram hsv = hsv_histogram(img);
        out.set(13, bin_rank(hsv, comps[0].color_bin));
        if (comps.size() >= 2) out.set(14, bin_rank(hsv, comps[1].color_bin));
    }
}

void hue_distribution_features(const ImageBuffer& img, const ThresholdConfig& cfg, FeatureVector& out) {
    std::array<std::int64_t, 20> hist{};
    std::vector<double> arcs;
    for (const Rgb& p : img.pixels()) {
        if (!is_chromatic(p, cfg.sat_val_floor)) continue;
        ++hist[static_cast<std::size_t>(hue_bin(p, 20))];
        arcs.push_back(hue_arc_degrees(hsv_of(p).hue, 0.0) * std::numbers::pi / 180.0);
    }
    const double threshold = cfg.c5 * static_cast<double>(img.size());
    std::vector<int> dominant;
    for (int k = 0; k < 20; ++k) {
        if (hist[static_cast<std::size_t>(k)] > 0 && static_cast<double>(hist[static_cast<std::size_t>(k)]) >= threshold) {
            dominant.push_back(k);
        }
    }
    out.set(15, static_cast<double>(dominant.size()));
    out.set(16, max_bin_center_arc(dominant), dominant.size() >= 2);
    out.set(17, population_stddev(arcs), !arcs.empty());
}

void lightness_features(const ImageBuffer& img, FeatureVector& out) {
    const auto l = lightness(img);
    out.set(18, mean_of(l));
    out.set(19, population_stddev(l));
}

void global_features(const ImageBuffer& img, const ThresholdConfig& cfg, FeatureVector& out) {
    gray_level_features(img, cfg, out);
    color_distribution_features(img, cfg, out);
    const auto hsv = to_hsv(img);
    harmony_features(hsv, cfg, out);
    coherent_component_features(img, cfg, out);
    hue_distribution_features(img, cfg, out);
    lightness_features(img, out);
}

}  // namespace ctrvis
