#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "ctrvis/features.hpp"
#include "ctrvis/image.hpp"
#include "ctrvis/segmentation.hpp"

namespace ctrvis {

/// 20-bin hue histograms per retained segment, over pixels passing the
/// saturation/value floor. Indexed like Segmentation::segments.
std::vector<std::array<std::int64_t, 20>> segment_hue_histograms(const ImageBuffer& img, const Segmentation& seg,
                                                                 double sat_val_floor);

// f20..f32. Each writes its slots into `out`.
void segment_size_features(const Segmentation& seg, FeatureVector& out);
void segment_hue_features(const ImageBuffer& img, const Segmentation& seg, const ThresholdConfig& cfg,
                          FeatureVector& out);
void segment_harmony_features(const ImageBuffer& img, const Segmentation& seg, const ThresholdConfig& cfg,
                              FeatureVector& out);
void segment_lightness_features(const ImageBuffer& img, const Segmentation& seg, FeatureVector& out);

void local_features(const ImageBuffer& img, const Segmentation& seg, const ThresholdConfig& cfg, FeatureVector& out);

/// Marks f20..f32 as 0 and undefined; used when segmentation is impossible.
void mark_local_features_undefined(FeatureVector& out);

}  // namespace ctrvis
