#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "ctrvis/error.hpp"
#include "ctrvis/global_features.hpp"
#include "ctrvis/pipeline.hpp"
#include "ctrvis/synth.hpp"
#include "oracle.hpp"
#include "support.hpp"

using namespace ctrvis;

TEST(Glyphs, EveryGlyphIsOneEightConnectedShape) {
    for (char c : synth_glyph_alphabet()) {
        ImageBuffer img(9, 11, Rgb{255, 255, 255});
        draw_text(img, 2, 2, std::string(1, c), {0, 0, 0});
        // Count 8-connected dark components by flood fill.
        std::vector<char> seen(img.size(), 0);
        int comps = 0;
        for (int y = 0; y < img.height(); ++y) {
            for (int x = 0; x < img.width(); ++x) {
                if (seen[img.index(x, y)] || img.at(x, y).r != 0) continue;
                ++comps;
                std::vector<std::pair<int, int>> stack = {{x, y}};
                seen[img.index(x, y)] = 1;
                while (!stack.empty()) {
                    const auto [cx, cy] = stack.back();
                    stack.pop_back();
                    for (int dy = -1; dy <= 1; ++dy) {
                        for (int dx = -1; dx <= 1; ++dx) {
                            const int nx = cx + dx, ny = cy + dy;
                            if (nx < 0 || ny < 0 || nx >= img.width() || ny >= img.height()) continue;
                            if (seen[img.index(nx, ny)] || img.at(nx, ny).r != 0) continue;
                            seen[img.index(nx, ny)] = 1;
                            stack.push_back({nx, ny});
                        }
                    }
                }
            }
        }
        EXPECT_EQ(comps, 1) << "glyph '" << c << "'";
    }
    EXPECT_THROW(glyph_rows('~'), Error);
}

TEST(DrawText, ReturnsGlyphCountAndClips) {
    ImageBuffer img(20, 10, Rgb{});
    EXPECT_EQ(draw_text(img, 0, 0, "A B", {255, 255, 255}), 2);
    EXPECT_EQ(draw_text(img, 15, 5, "AAAA", {255, 255, 255}), 4);
    EXPECT_THROW(draw_text(img, 0, 0, "A", {}, 0), Error);
}

TEST(Synth, DeterministicAndWorkerIndependent) {
    SynthConfig cfg;
    cfg.count = 12;
    cfg.workers = 1;
    const auto a = generate_synthetic(cfg);
    cfg.workers = 3;
    const auto b = generate_synthetic(cfg);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i].image, b[i].image);
        EXPECT_EQ(a[i].ctr, b[i].ctr);
    }
    cfg.seed = 2;
    EXPECT_NE(generate_synthetic(cfg)[0].image, a[0].image);
}

TEST(Synth, ItemsAreConsistent) {
    SynthConfig cfg;
    cfg.count = 30;
    const auto items = generate_synthetic(cfg);
    double signal_mean = 0;
    for (const auto& it : items) {
        EXPECT_EQ(it.image.width(), cfg.width);
        EXPECT_EQ(it.image.height(), cfg.height);
        EXPECT_GE(it.characters, 0);
        EXPECT_LE(it.characters, cfg.max_characters);
        EXPECT_GE(it.ctr, 0.0);
        EXPECT_LE(it.ctr, cfg.ctr_scale);
        EXPECT_DOUBLE_EQ(it.ctr, static_cast<double>(it.clicks) / static_cast<double>(cfg.impressions));
        FeatureVector fv;
        gray_level_features(it.image, ThresholdConfig{}, fv);
        EXPECT_EQ(it.f1, fv.f(1));
        oracle::Features ref;
        oracle::global_features(it.image, oracle::Thresholds{}, ref);
        EXPECT_EQ(it.f10, ref.f(10));
        signal_mean += it.signal;
    }
    EXPECT_NEAR(signal_mean / items.size(), 0.0, 1e-9);
}

TEST(Synth, CorpusFilesAreIngestible) {
    SynthConfig cfg;
    cfg.count = 5;
    const auto items = generate_synthetic(cfg);
    const auto dir = testing_support::scratch_dir("synth_corpus");
    write_synthetic_corpus(items, cfg, dir.string());
    EXPECT_TRUE(std::filesystem::exists(dir / "truth.csv"));
    DatasetSpec spec;
    spec.manifest = (dir / "manifest.csv").string();
    const auto recs = ingest(spec);
    ASSERT_EQ(recs.size(), 5u);
    for (std::size_t i = 0; i < recs.size(); ++i) {
        EXPECT_EQ(recs[i].id, items[i].id);
        EXPECT_EQ(recs[i].ctr, items[i].ctr);
        EXPECT_EQ(read_image(recs[i].path), items[i].image);
    }
}

TEST(Synth, RejectsBadConfig) {
    SynthConfig cfg;
    cfg.signal_r2 = 0;
    EXPECT_THROW(generate_synthetic(cfg), Error);
    cfg = SynthConfig{};
    cfg.count = 1;
    EXPECT_THROW(generate_synthetic(cfg), Error);
    cfg = SynthConfig{};
    cfg.width = 8;
    EXPECT_THROW(generate_synthetic(cfg), Error);
}
