#include "ctrvis/extractor.hpp"

#include <cstdio>

#include "ctrvis/error.hpp"
#include "ctrvis/global_features.hpp"
#include "ctrvis/local_features.hpp"

namespace ctrvis {

namespace {
constexpr int kFeatureVersion = 1;
}

std::string ExtractorConfig::canonical() const {
    char buf[512];
    std::snprintf(buf, sizeof(buf),
                  "v=%d;%s;ncut=%d,%d,%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g;sal=%d,%d,%.17g,%d,%.17g;chars=%s;faces=%s",
                  kFeatureVersion, thresholds.canonical().c_str(), ncut.max_segments, ncut.max_side, ncut.radius,
                  ncut.sigma_color, ncut.sigma_space, ncut.prune_below, ncut.max_ncut, ncut.stability_ratio,
                  ncut.min_segment_fraction, saliency.working_width, saliency.box_size, saliency.blur_sigma,
                  saliency.blur_radius, saliency.threshold_factor, character_command.c_str(), face_command.c_str());
    return buf;
}

FeatureExtractor::FeatureExtractor(ExtractorConfig cfg)
    : cfg_(std::move(cfg)),
      characters_(DetectorKind::Characters, cfg_.character_command),
      faces_(DetectorKind::Faces, cfg_.face_command) {
    cfg_.thresholds.validate();
}

FeatureVector FeatureExtractor::extract(const ImageBuffer& img, const std::string& path) const {
    FeatureVector out;
    global_features(img, cfg_.thresholds, out);

    bool segmentable = true;
    Segmentation seg;
    try {
        seg = segment(img, cfg_.ncut);
    } catch (const Error& e) {
        if (e.code() != ErrorCode::DegenerateImage) throw;
        segmentable = false;
    }
    if (segmentable) {
        local_features(img, seg, cfg_.thresholds, out);
    } else {
        mark_local_features_undefined(out);
    }

    const SaliencyMap map = spectral_saliency(img, cfg_.saliency);
    saliency_features(map, salient_components(map), out);

    const DetectionResult chars = count_characters(img, characters_, path);
    out.set(42, chars.count, chars.defined);
    const DetectionResult faces = count_faces(img, faces_, path);
    out.set(43, faces.count, faces.defined);
    return out;
}

}  // namespace ctrvis
