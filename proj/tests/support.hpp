#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "ctrvis/image.hpp"
#include "ctrvis/rng.hpp"

namespace testing_support {

inline ctrvis::ImageBuffer solid(int w, int h, ctrvis::Rgb c) { return ctrvis::ImageBuffer(w, h, c); }

/// Left half `a`, right half `b`.
inline ctrvis::ImageBuffer halves(int w, int h, ctrvis::Rgb a, ctrvis::Rgb b) {
    ctrvis::ImageBuffer img(w, h, a);
    for (int y = 0; y < h; ++y) {
        for (int x = w / 2; x < w; ++x) img.at(x, y) = b;
    }
    return img;
}

inline ctrvis::ImageBuffer checkerboard(int w, int h, int cell, ctrvis::Rgb a, ctrvis::Rgb b) {
    ctrvis::ImageBuffer img(w, h, a);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (((x / cell) + (y / cell)) % 2) img.at(x, y) = b;
        }
    }
    return img;
}

inline ctrvis::Rgb random_color(ctrvis::Rng& gen) {
    return {static_cast<std::uint8_t>(ctrvis::uniform_index(gen, 256)),
            static_cast<std::uint8_t>(ctrvis::uniform_index(gen, 256)),
            static_cast<std::uint8_t>(ctrvis::uniform_index(gen, 256))};
}

/// Background plus a few solid rectangles and a sprinkle of single-pixel noise.
inline ctrvis::ImageBuffer random_structured(ctrvis::Rng& gen, int w, int h) {
    ctrvis::ImageBuffer img(w, h, random_color(gen));
    const int rects = 1 + static_cast<int>(ctrvis::uniform_index(gen, 4));
    for (int r = 0; r < rects; ++r) {
        const int rw = 3 + static_cast<int>(ctrvis::uniform_index(gen, static_cast<std::uint64_t>(w - 2)));
        const int rh = 3 + static_cast<int>(ctrvis::uniform_index(gen, static_cast<std::uint64_t>(h - 2)));
        const int x0 = static_cast<int>(ctrvis::uniform_index(gen, static_cast<std::uint64_t>(w)));
        const int y0 = static_cast<int>(ctrvis::uniform_index(gen, static_cast<std::uint64_t>(h)));
        const ctrvis::Rgb c = random_color(gen);
        for (int y = y0; y < std::min(h, y0 + rh); ++y) {
            for (int x = x0; x < std::min(w, x0 + rw); ++x) img.at(x, y) = c;
        }
    }
    const int noise = static_cast<int>(ctrvis::uniform_index(gen, 6));
    for (int k = 0; k < noise; ++k) {
        img.at(static_cast<int>(ctrvis::uniform_index(gen, static_cast<std::uint64_t>(w))),
               static_cast<int>(ctrvis::uniform_index(gen, static_cast<std::uint64_t>(h)))) = random_color(gen);
    }
    return img;
}

inline ctrvis::ImageBuffer random_noise(ctrvis::Rng& gen, int w, int h) {
    ctrvis::ImageBuffer img(w, h);
    for (auto& p : img.pixels()) p = random_color(gen);
    return img;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("ctrvis_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace testing_support
