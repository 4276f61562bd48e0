#include "ctrvis/local_features.hpp"

#include <algorithm>
#include <cstdlib>

#include "ctrvis/global_features.hpp"
#include "ctrvis/harmony.hpp"

namespace ctrvis {

namespace {

// Position of each segment id within seg.segments; -1 for dropped/unknown ids.
std::vector<int> slot_of_ids(const Segmentation& seg) {
    int max_id = 0;
    for (const auto& s : seg.segments) max_id = std::max(max_id, s.id);
    for (int id : seg.dropped) max_id = std::max(max_id, id);
    std::vector<int> slot(static_cast<std::size_t>(max_id) + 1, -1);
    for (std::size_t i = 0; i < seg.segments.size(); ++i) {
        slot[static_cast<std::size_t>(seg.segments[i].id)] = static_cast<int>(i);
    }
    return slot;
}

std::vector<int> bins_at_least(const std::array<std::int64_t, 20>& h, double threshold) {
    std::vector<int> out;
    for (int k = 0; k < 20; ++k) {
        const auto c = h[static_cast<std::size_t>(k)];
        if (c > 0 && static_cast<double>(c) >= threshold) out.push_back(k);
    }
    return out;
}

}  // namespace

std::vector<std::array<std::int64_t, 20>> segment_hue_histograms(const ImageBuffer& img, const Segmentation& seg,
                                                                 double sat_val_floor) {
    const auto slot = slot_of_ids(seg);
    std::vector<std::array<std::int64_t, 20>> hists(seg.segments.size());
    for (auto& h : hists) h.fill(0);
    for (std::size_t p = 0; p < img.size(); ++p) {
        const int lab = seg.labels[p];
        if (lab == Segmentation::kDropped) continue;
        const Rgb px = img.pixels()[p];
        if (!is_chromatic(px, sat_val_floor)) continue;
        ++hists[static_cast<std::size_t>(slot[static_cast<std::size_t>(lab)])][static_cast<std::size_t>(hue_bin(px, 20))];
    }
    return hists;
}

void segment_size_features(const Segmentation& seg, FeatureVector& out) {
    const double n = static_cast<double>(seg.labels.size());
    std::size_t lo = seg.segments.front().size, hi = lo;
    for (const auto& s : seg.segments) {
        lo = std::min(lo, s.size);
        hi = std::max(hi, s.size);
    }
    out.set(20, static_cast<double>(hi) / n);
    out.set(21, static_cast<double>(hi - lo) / n, seg.segments.size() > 1);
}

void segment_hue_features(const ImageBuffer& img, const Segmentation& seg, const ThresholdConfig& cfg,
                          FeatureVector& out) {
    const auto hists = segment_hue_histograms(img, seg, cfg.sat_val_floor);
    const std::size_t big = seg.largest();
    const double image_floor = cfg.c6 * static_cast<double>(img.size());

    std::vector<double> q, contrast;
    std::vector<int> big_bins;
    for (std::size_t i = 0; i < seg.segments.size(); ++i) {
        const auto bins = bins_at_least(hists[i], cfg.c6 * static_cast<double>(seg.segments[i].size));
        q.push_back(static_cast<double>(bins.size()));
        contrast.push_back(bins.size() >= 2 ? max_bin_center_arc(bins) : 0.0);
        if (i == big) big_bins = bins;
    }
    out.set(22, static_cast<double>(bins_at_least(hists[big], image_floor).size()));
    out.set(23, q[big]);
    const auto [qmin, qmax] = std::minmax_element(q.begin(), q.end());
    out.set(24, *qmax);
    out.set(25, *qmax - *qmin);
    out.set(26, max_bin_center_arc(big_bins), big_bins.size() >= 2);
    out.set(27, population_stddev(contrast));
}

void segment_harmony_features(const ImageBuffer& img, const Segmentation& seg, const ThresholdConfig& cfg,
                              FeatureVector& out) {
    const int id = seg.segments[seg.largest()].id;
    std::vector<HsvPixel> pixels;
    for (std::size_t p = 0; p < img.size(); ++p) {
        if (seg.labels[p] == id) pixels.push_back(hsv_of(img.pixels()[p]));
    }
    const HarmonyFit fit = fit_harmony(pixels, cfg.harmony_rotation_step);
    out.set(28, fit.best);
    out.set(29, fit.best_two);
}

void segment_lightness_features(const ImageBuffer& img, const Segmentation& seg, FeatureVector& out) {
    const auto slot = slot_of_ids(seg);
    std::vector<double> sums(seg.segments.size(), 0.0);
    for (std::size_t p = 0; p < img.size(); ++p) {
        const int lab = seg.labels[p];
        if (lab == Segmentation::kDropped) continue;
        sums[static_cast<std::size_t>(slot[static_cast<std::size_t>(lab)])] += lightness_of(img.pixels()[p]);
    }
    std::vector<double> means(sums.size());
    for (std::size_t i = 0; i < sums.size(); ++i) means[i] = sums[i] / static_cast<double>(seg.segments[i].size);
    out.set(30, means[seg.largest()]);
    out.set(31, population_stddev(means));
    const auto [lo, hi] = std::minmax_element(means.begin(), means.end());
    out.set(32, *hi - *lo, means.size() > 1);
}

void local_features(const ImageBuffer& img, const Segmentation& seg, const ThresholdConfig& cfg, FeatureVector& out) {
    segment_size_features(seg, out);
    segment_hue_features(img, seg, cfg, out);
    segment_harmony_features(img, seg, cfg, out);
    segment_lightness_features(img, seg, out);
}

void mark_local_features_undefined(FeatureVector& out) {
    for (int n = 20; n <= 32; ++n) out.set(n, 0.0, false);
}

}  // namespace ctrvis
