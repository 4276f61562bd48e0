#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace ctrvis {

struct Rgb {
    std::uint8_t r = 0;
    std::uint8_t g = 0;
    std::uint8_t b = 0;

    friend bool operator==(const Rgb&, const Rgb&) = default;
};

/// Decoded raster, row-major, 8 bits per channel. Alpha is dropped on decode.
class ImageBuffer {
public:
    ImageBuffer() = default;
    ImageBuffer(int width, int height, Rgb fill = {});
    ImageBuffer(int width, int height, std::vector<Rgb> pixels);

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    std::size_t size() const noexcept { return pixels_.size(); }
    bool empty() const noexcept { return pixels_.empty(); }

    const Rgb& at(int x, int y) const { return pixels_[index(x, y)]; }
    Rgb& at(int x, int y) { return pixels_[index(x, y)]; }
    std::size_t index(int x, int y) const noexcept {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
               static_cast<std::size_t>(x);
    }

    std::span<const Rgb> pixels() const noexcept { return pixels_; }
    std::span<Rgb> pixels() noexcept { return pixels_; }

    friend bool operator==(const ImageBuffer&, const ImageBuffer&) = default;

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<Rgb> pixels_;
};

struct HsvPixel {
    double hue = 0.0;         // degrees, [0, 360); 0 for achromatic pixels
    double saturation = 0.0;  // [0, 1]
    double value = 0.0;       // [0, 1]
};

/// Uniformly quantized histogram. For joint color histograms `channels` is 3
/// and the bin of (q0, q1, q2) is q0 * levels^2 + q1 * levels + q2.
struct Histogram {
    std::vector<std::int64_t> counts;
    int levels = 0;
    int channels = 1;

    std::int64_t total() const noexcept;
    std::int64_t max_count() const noexcept;
};

// ---------------------------------------------------------------------------
// Decoding

enum class ImageFormat { Png, Jpeg, Gif, Bmp, Unknown };

ImageFormat sniff_format(std::span<const std::uint8_t> bytes) noexcept;

/// Decodes PNG, JPEG, BMP and single-frame GIF payloads. Animated payloads
/// (APNG, multi-frame GIF) raise UnsupportedFormat; truncated or malformed
/// payloads raise CorruptPayload.
ImageBuffer decode_image(std::span<const std::uint8_t> bytes);
ImageBuffer read_image(const std::string& path);

std::vector<std::uint8_t> encode_png(const ImageBuffer& img);
void write_png(const ImageBuffer& img, const std::string& path);

// ---------------------------------------------------------------------------
// Color conversion

/// Rec.601 luma rounded to the nearest integer.
std::uint8_t gray_of(Rgb p) noexcept;
HsvPixel hsv_of(Rgb p) noexcept;
Rgb rgb_of(const HsvPixel& p) noexcept;
/// HSL lightness (max + min) / 2, normalized to [0, 1].
double lightness_of(Rgb p) noexcept;

std::vector<std::uint8_t> to_gray(const ImageBuffer& img);
std::vector<HsvPixel> to_hsv(const ImageBuffer& img);
std::vector<double> lightness(const ImageBuffer& img);

// ---------------------------------------------------------------------------
// Exact integer quantizers. They agree with floor(attribute * levels) on the
// real-valued HSV attributes but never suffer rounding at bin boundaries.

int rgb_bin(Rgb p, int levels = 8) noexcept;
int hsv_bin(Rgb p, int levels = 8) noexcept;
/// floor(hue * bins / 360); achromatic pixels land in bin 0.
int hue_bin(Rgb p, int bins) noexcept;
/// True when saturation >= floor and value >= floor, the filter applied
/// before every hue histogram. Compared in exact integer arithmetic with the
/// floor rounded to millionths.
bool is_chromatic(Rgb p, double floor = 0.2) noexcept;

Histogram quantized_histogram(std::span<const int> bin_indices, int levels, int channels = 1);
Histogram gray_histogram(const ImageBuffer& img);
Histogram rgb_histogram(const ImageBuffer& img, int levels = 8);
Histogram hsv_histogram(const ImageBuffer& img, int levels = 8);

}  // namespace ctrvis
