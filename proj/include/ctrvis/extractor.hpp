#pragma once

#include <string>

#include "ctrvis/detectors.hpp"
#include "ctrvis/features.hpp"
#include "ctrvis/image.hpp"
#include "ctrvis/saliency.hpp"
#include "ctrvis/segmentation.hpp"

namespace ctrvis {

struct ExtractorConfig {
    ThresholdConfig thresholds;
    NcutOptions ncut;
    SaliencyOptions saliency;
    std::string character_command;  // empty: builtin glyph counter
    std::string face_command;       // empty: builtin stub

    /// Stable text covering every value that changes extracted features.
    std::string canonical() const;
};

/// Computes all 43 features of one image. Safe to share across threads.
class FeatureExtractor {
public:
    explicit FeatureExtractor(ExtractorConfig cfg = {});

    const ExtractorConfig& config() const noexcept { return cfg_; }

    /// `path` is passed to external detectors when they are configured.
    FeatureVector extract(const ImageBuffer& img, const std::string& path = {}) const;

private:
    ExtractorConfig cfg_;
    DetectorAdapter characters_;
    DetectorAdapter faces_;
};

}  // namespace ctrvis
