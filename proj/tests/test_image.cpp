#include <gtest/gtest.h>

#include <cstring>

#include "ctrvis/error.hpp"
#include "ctrvis/image.hpp"
#include "oracle.hpp"
#include "support.hpp"

using namespace ctrvis;

namespace {

std::vector<std::uint8_t> tiny_gif(int frames) {
    std::vector<std::uint8_t> b = {'G', 'I', 'F', '8', '9', 'a', 1, 0, 1, 0, 0x80, 0, 0, 0xFF, 0, 0, 0, 0, 0};
    for (int f = 0; f < frames; ++f) {
        const std::uint8_t frame[] = {0x2C, 0, 0, 0, 0, 1, 0, 1, 0, 0, 2, 2, 0x44, 0x01, 0};
        b.insert(b.end(), std::begin(frame), std::end(frame));
    }
    b.push_back(0x3B);
    return b;
}

std::vector<std::uint8_t> bmp_2x1(Rgb left, Rgb right) {
    std::vector<std::uint8_t> b(54 + 8, 0);
    auto put32 = [&](std::size_t at, std::uint32_t v) { std::memcpy(&b[at], &v, 4); };
    auto put16 = [&](std::size_t at, std::uint16_t v) { std::memcpy(&b[at], &v, 2); };
    b[0] = 'B';
    b[1] = 'M';
    put32(2, static_cast<std::uint32_t>(b.size()));
    put32(10, 54);
    put32(14, 40);
    put32(18, 2);
    put32(22, 1);
    put16(26, 1);
    put16(28, 24);
    put32(34, 8);
    const std::uint8_t px[] = {left.b, left.g, left.r, right.b, right.g, right.r};
    std::memcpy(&b[54], px, 6);
    return b;
}

}  // namespace

TEST(Codec, PngRoundTripPreservesPixels) {
    Rng gen(3);
    const ImageBuffer img = testing_support::random_noise(gen, 13, 7);
    const auto bytes = encode_png(img);
    EXPECT_EQ(sniff_format(bytes), ImageFormat::Png);
    EXPECT_EQ(decode_image(bytes), img);
}

TEST(Codec, OnePixelRedPng) {
    const ImageBuffer red(1, 1, Rgb{255, 0, 0});
    const ImageBuffer back = decode_image(encode_png(red));
    ASSERT_EQ(back.width(), 1);
    ASSERT_EQ(back.height(), 1);
    EXPECT_EQ(back.at(0, 0), (Rgb{255, 0, 0}));
}

TEST(Codec, SingleFrameGifDecodes) {
    const ImageBuffer img = decode_image(tiny_gif(1));
    ASSERT_EQ(img.size(), 1u);
    EXPECT_EQ(img.at(0, 0), (Rgb{255, 0, 0}));
}

TEST(Codec, AnimatedGifIsRejected) {
    try {
        decode_image(tiny_gif(2));
        FAIL() << "expected an error";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::UnsupportedFormat);
    }
}

TEST(Codec, Bmp24Decodes) {
    const ImageBuffer img = decode_image(bmp_2x1({10, 20, 30}, {200, 100, 50}));
    ASSERT_EQ(img.width(), 2);
    EXPECT_EQ(img.at(0, 0), (Rgb{10, 20, 30}));
    EXPECT_EQ(img.at(1, 0), (Rgb{200, 100, 50}));
}

TEST(Codec, GarbageAndTruncation) {
    const std::vector<std::uint8_t> junk = {1, 2, 3, 4, 5};
    try {
        decode_image(junk);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::UnsupportedFormat);
    }
    auto png = encode_png(ImageBuffer(8, 8, Rgb{1, 2, 3}));
    png.resize(png.size() / 2);
    try {
        decode_image(png);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::CorruptPayload);
    }
    const std::vector<std::uint8_t> bad_jpeg = {0xFF, 0xD8, 0xFF, 0xE0, 0, 0x10, 'J', 'F'};
    try {
        decode_image(bad_jpeg);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::CorruptPayload);
    }
}

TEST(Color, GrayEndpoints) {
    EXPECT_EQ(gray_of({255, 255, 255}), 255);
    EXPECT_EQ(gray_of({0, 0, 0}), 0);
}

TEST(Color, HsvOfRedAndGray) {
    const HsvPixel red = hsv_of({255, 0, 0});
    EXPECT_EQ(red.hue, 0.0);
    EXPECT_EQ(red.saturation, 1.0);
    EXPECT_EQ(red.value, 1.0);
    const HsvPixel g = hsv_of({128, 128, 128});
    EXPECT_EQ(g.hue, 0.0);
    EXPECT_EQ(g.saturation, 0.0);
    EXPECT_NEAR(g.value, 0.502, 1e-3);
}

TEST(Color, LightnessEndpoints) {
    EXPECT_EQ(lightness_of({255, 255, 255}), 1.0);
    EXPECT_EQ(lightness_of({0, 0, 0}), 0.0);
    EXPECT_EQ(lightness_of({255, 0, 0}), 0.5);
}

TEST(Color, ConversionsMatchOracleOnEveryCube) {
    Rng gen(11);
    for (int i = 0; i < 20000; ++i) {
        const Rgb p = testing_support::random_color(gen);
        ASSERT_EQ(gray_of(p), oracle::gray(p));
        ASSERT_NEAR(hsv_of(p).hue, oracle::hue_degrees(p), 1e-9);
        ASSERT_EQ(hsv_bin(p), oracle::hsv512(p));
        ASSERT_EQ(rgb_bin(p), oracle::rgb512(p));
        ASSERT_EQ(hue_bin(p, 20), oracle::hue20(p));
        ASSERT_EQ(is_chromatic(p, 0.2), oracle::passes_floor(p, 0.2));
    }
}

TEST(Color, HsvRoundTrip) {
    Rng gen(5);
    for (int i = 0; i < 2000; ++i) {
        const Rgb p = testing_support::random_color(gen);
        EXPECT_EQ(rgb_of(hsv_of(p)), p);
    }
}

TEST(Histogram, ConstantImageHasOneBin) {
    const ImageBuffer img(6, 5, Rgb{40, 90, 200});
    for (const Histogram& h : {gray_histogram(img), rgb_histogram(img), hsv_histogram(img)}) {
        int nonzero = 0;
        for (auto c : h.counts) nonzero += c > 0;
        EXPECT_EQ(nonzero, 1);
        EXPECT_EQ(h.max_count(), 30);
        EXPECT_EQ(h.total(), 30);
    }
}

TEST(Histogram, HalvesSplitEvenly) {
    const ImageBuffer img = testing_support::halves(8, 4, {255, 0, 0}, {0, 0, 255});
    const Histogram h = rgb_histogram(img);
    std::vector<std::int64_t> nonzero;
    for (auto c : h.counts) {
        if (c) nonzero.push_back(c);
    }
    EXPECT_EQ(nonzero, (std::vector<std::int64_t>{16, 16}));
}

TEST(Histogram, OutOfRangeIndexThrows) {
    const std::vector<int> idx = {0, 8};
    EXPECT_THROW(quantized_histogram(idx, 8, 1), Error);
}
