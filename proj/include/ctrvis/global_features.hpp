#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ctrvis/features.hpp"
#include "ctrvis/image.hpp"

namespace ctrvis {

/// A maximal 8-connected run of pixels sharing one 512-bin HSV color.
struct CoherentComponent {
    std::vector<std::size_t> pixels;  // row-major pixel indices
    int color_bin = 0;
    std::size_t size() const noexcept { return pixels.size(); }
};

/// Components of size >= c4_frac * |I|, largest first; equal sizes keep
/// scanline discovery order.
std::vector<CoherentComponent> coherent_components(const ImageBuffer& img, double c4_frac);

/// Width of the central 95% of the gray histogram, after removing 2.5% of the
/// pixel mass from each tail at bin granularity.
int gray_contrast_width(const Histogram& gray);

/// Count of bins holding at least `fraction` of the tallest bin.
int dominant_bin_count(const Histogram& h, double fraction);

/// 1-based rank of `bin` when bins are ordered by count descending, ties
/// broken by the lower bin index.
int bin_rank(const Histogram& h, int bin);

/// Center of 20-bin hue bin `k`, degrees.
double hue_bin_center(int k) noexcept;

/// Largest arc (radians) between the centers of any two listed hue bins;
/// 0 when fewer than two bins are given.
double max_bin_center_arc(std::span<const int> bins) noexcept;

double population_stddev(std::span<const double> values) noexcept;
double mean_of(std::span<const double> values) noexcept;

// f1..f19. Each writes its slots into `out`.
void gray_level_features(const ImageBuffer& img, const ThresholdConfig& cfg, FeatureVector& out);
void color_distribution_features(const ImageBuffer& img, const ThresholdConfig& cfg, FeatureVector& out);
void harmony_features(std::span<const HsvPixel> hsv, const ThresholdConfig& cfg, FeatureVector& out);
void coherent_component_features(const ImageBuffer& img, const ThresholdConfig& cfg, FeatureVector& out);
void hue_distribution_features(const ImageBuffer& img, const ThresholdConfig& cfg, FeatureVector& out);
void lightness_features(const ImageBuffer& img, FeatureVector& out);

void global_features(const ImageBuffer& img, const ThresholdConfig& cfg, FeatureVector& out);

}  // namespace ctrvis
