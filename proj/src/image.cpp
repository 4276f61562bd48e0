#include "ctrvis/image.hpp"

#include <algorithm>
#include <cmath>

#include "ctrvis/error.hpp"

namespace ctrvis {

ImageBuffer::ImageBuffer(int width, int height, Rgb fill)
    : width_(width), height_(height) {
    if (width < 1 || height < 1) {
        throw Error(ErrorCode::InvalidArgument, "image dimensions must be positive");
    }
    pixels_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
}

ImageBuffer::ImageBuffer(int width, int height, std::vector<Rgb> pixels)
    : width_(width), height_(height), pixels_(std::move(pixels)) {
    if (width < 1 || height < 1) {
        throw Error(ErrorCode::InvalidArgument, "image dimensions must be positive");
    }
    if (pixels_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
        throw Error(ErrorCode::InvalidArgument, "pixel count does not match width * height");
    }
}

std::int64_t Histogram::total() const noexcept {
    std::int64_t sum = 0;
    for (auto c : counts) sum += c;
    return sum;
}

std::int64_t Histogram::max_count() const noexcept {
    return counts.empty() ? 0 : *std::max_element(counts.begin(), counts.end());
}

namespace {

struct Chroma {
    int max;
    int min;
    int delta;
    int numerator;  // hue = 60 * numerator / delta, numerator in [0, 6 * delta)
};

Chroma chroma_of(Rgb p) noexcept {
    const int r = p.r, g = p.g, b = p.b;
    const int mx = std::max({r, g, b});
    const int mn = std::min({r, g, b});
    const int d = mx - mn;
    int num = 0;
    if (d > 0) {
        if (mx == r) {
            num = g - b;
            if (num < 0) num += 6 * d;
        } else if (mx == g) {
            num = 2 * d + (b - r);
        } else {
            num = 4 * d + (r - g);
        }
    }
    return {mx, mn, d, num};
}

}  // namespace

std::uint8_t gray_of(Rgb p) noexcept {
    const int weighted = 299 * p.r + 587 * p.g + 114 * p.b;
    return static_cast<std::uint8_t>((weighted + 500) / 1000);
}

HsvPixel hsv_of(Rgb p) noexcept {
    const Chroma c = chroma_of(p);
    HsvPixel out;
    out.value = c.max / 255.0;
    out.saturation = c.max == 0 ? 0.0 : static_cast<double>(c.delta) / c.max;
    out.hue = c.delta == 0 ? 0.0 : 60.0 * c.numerator / c.delta;
    if (out.hue >= 360.0) out.hue -= 360.0;
    return out;
}

Rgb rgb_of(const HsvPixel& p) noexcept {
    const double c = p.value * p.saturation;
    const double hp = std::fmod(p.hue, 360.0) / 60.0;
    const double x = c * (1.0 - std::fabs(std::fmod(hp, 2.0) - 1.0));
    double r = 0, g = 0, b = 0;
    switch (static_cast<int>(hp)) {
        case 0: r = c; g = x; break;
        case 1: r = x; g = c; break;
        case 2: g = c; b = x; break;
        case 3: g = x; b = c; break;
        case 4: r = x; b = c; break;
        default: r = c; b = x; break;
    }
    const double m = p.value - c;
    auto to8 = [](double v) {
        return static_cast<std::uint8_t>(std::clamp(std::lround(v * 255.0), 0L, 255L));
    };
    return {to8(r + m), to8(g + m), to8(b + m)};
}

double lightness_of(Rgb p) noexcept {
    const int mx = std::max({p.r, p.g, p.b});
    const int mn = std::min({p.r, p.g, p.b});
    return (mx + mn) / 510.0;
}

std::vector<std::uint8_t> to_gray(const ImageBuffer& img) {
    std::vector<std::uint8_t> out;
    out.reserve(img.size());
    for (const Rgb& p : img.pixels()) out.push_back(gray_of(p));
    return out;
}

std::vector<HsvPixel> to_hsv(const ImageBuffer& img) {
    std::vector<HsvPixel> out;
    out.reserve(img.size());
    for (const Rgb& p : img.pixels()) out.push_back(hsv_of(p));
    return out;
}

std::vector<double> lightness(const ImageBuffer& img) {
    std::vector<double> out;
    out.reserve(img.size());
    for (const Rgb& p : img.pixels()) out.push_back(lightness_of(p));
    return out;
}

int rgb_bin(Rgb p, int levels) noexcept {
    auto q = [levels](int v) { return v * levels / 256; };
    return (q(p.r) * levels + q(p.g)) * levels + q(p.b);
}

int hue_bin(Rgb p, int bins) noexcept {
    const Chroma c = chroma_of(p);
    if (c.delta == 0) return 0;
    return static_cast<int>((static_cast<std::int64_t>(c.numerator) * bins) / (6LL * c.delta));
}

int hsv_bin(Rgb p, int levels) noexcept {
    const Chroma c = chroma_of(p);
    const int hq = c.delta == 0 ? 0 : static_cast<int>((static_cast<std::int64_t>(c.numerator) * levels) / (6LL * c.delta));
    const int sq = c.max == 0 ? 0 : std::min(levels - 1, levels * c.delta / c.max);
    const int vq = std::min(levels - 1, levels * c.max / 255);
    return (hq * levels + sq) * levels + vq;
}

bool is_chromatic(Rgb p, double floor) noexcept {
    const Chroma c = chroma_of(p);
    const std::int64_t ppm = std::llround(floor * 1e6);
    return c.max > 0 && std::int64_t{c.delta} * 1000000 >= ppm * c.max &&
           std::int64_t{c.max} * 1000000 >= ppm * 255;
}

Histogram quantized_histogram(std::span<const int> bin_indices, int levels, int channels) {
    std::size_t bins = 1;
    for (int i = 0; i < channels; ++i) bins *= static_cast<std::size_t>(levels);
    Histogram h;
    h.levels = levels;
    h.channels = channels;
    h.counts.assign(bins, 0);
    for (int idx : bin_indices) {
        if (idx < 0 || static_cast<std::size_t>(idx) >= bins) {
            throw Error(ErrorCode::InvalidArgument, "bin index outside histogram range");
        }
        ++h.counts[static_cast<std::size_t>(idx)];
    }
    return h;
}

Histogram gray_histogram(const ImageBuffer& img) {
    Histogram h;
    h.levels = 256;
    h.counts.assign(256, 0);
    for (const Rgb& p : img.pixels()) ++h.counts[gray_of(p)];
    return h;
}

Histogram rgb_histogram(const ImageBuffer& img, int levels) {
    Histogram h;
    h.levels = levels;
    h.channels = 3;
    h.counts.assign(static_cast<std::size_t>(levels * levels * levels), 0);
    for (const Rgb& p : img.pixels()) ++h.counts[static_cast<std::size_t>(rgb_bin(p, levels))];
    return h;
}

Histogram hsv_histogram(const ImageBuffer& img, int levels) {
    Histogram h;
    h.levels = levels;
    h.channels = 3;
    h.counts.assign(static_cast<std::size_t>(levels * levels * levels), 0);
    for (const Rgb& p : img.pixels()) ++h.counts[static_cast<std::size_t>(hsv_bin(p, levels))];
    return h;
}

}  // namespace ctrvis
