#pragma once

#include <cstddef>
#include <vector>

#include "ctrvis/features.hpp"
#include "ctrvis/image.hpp"

namespace ctrvis {

struct SaliencyOptions {
    int working_width = 64;
    int box_size = 3;
    double blur_sigma = 2.5;
    int blur_radius = 8;
    double threshold_factor = 3.0;
};

struct SaliencyMap {
    int width = 0;
    int height = 0;
    std::vector<double> tau;     // full resolution, non-negative
    double mean_tau = 0.0;
    std::vector<char> binary;    // tau > threshold_factor * mean_tau
};

/// Grayscale bilinear resize (pixel-center aligned, clamped at the border).
std::vector<double> resize_bilinear(const std::vector<double>& src, int sw, int sh, int dw, int dh);

/// Spectral-residual map at working resolution, before upsampling.
std::vector<double> spectral_residual(const std::vector<double>& gray, int w, int h, const SaliencyOptions& opts);

SaliencyMap spectral_saliency(const ImageBuffer& img, const SaliencyOptions& opts = {});

struct SalientComponent {
    std::vector<std::size_t> pixels;  // ascending scanline order
    double cx = 0.0;                  // normalized center, (x + 0.5) / width
    double cy = 0.0;
    double mean_tau = 0.0;
};

struct SalientComponents {
    std::vector<SalientComponent> components;          // in order of first pixel
    std::vector<std::vector<std::size_t>> background;  // in order of first pixel
};

/// 8-connected components of the binary map and of its complement.
SalientComponents salient_components(const SaliencyMap& map);

/// f33..f41.
void saliency_features(const SaliencyMap& map, const SalientComponents& comps, FeatureVector& out);

}  // namespace ctrvis
