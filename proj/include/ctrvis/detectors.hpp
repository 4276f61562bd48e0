#pragma once

#include <mutex>
#include <string>

#include "ctrvis/image.hpp"

namespace ctrvis {

enum class DetectorKind { Characters, Faces };

struct DetectionResult {
    int count = 0;
    bool defined = true;
};

/// Glyph-like connected components after adaptive thresholding.
int count_glyphs(const ImageBuffer& img);

/// Counts characters or faces either with the builtin method or by running
/// `<command> <image-path>` and reading one integer from its stdout. The
/// builtin face counter is a stub: it reports 0 with defined == false.
/// Calls on one adapter are serialized.
class DetectorAdapter {
public:
    explicit DetectorAdapter(DetectorKind kind, std::string command = {});

    DetectorKind kind() const noexcept { return kind_; }
    bool external() const noexcept { return !command_.empty(); }
    const std::string& command() const noexcept { return command_; }

    /// `image_path` is handed to the external command; when empty, the image
    /// is written to a temporary PNG first.
    DetectionResult count(const ImageBuffer& img, const std::string& image_path = {}) const;

private:
    DetectionResult run_external(const ImageBuffer& img, const std::string& image_path) const;

    DetectorKind kind_;
    std::string command_;
    mutable std::mutex mutex_;
};

DetectionResult count_characters(const ImageBuffer& img, const DetectorAdapter& adapter,
                                 const std::string& image_path = {});
DetectionResult count_faces(const ImageBuffer& img, const DetectorAdapter& adapter,
                            const std::string& image_path = {});

}  // namespace ctrvis
