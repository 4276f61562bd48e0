#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "ctrvis/image.hpp"

namespace ctrvis {

/// 5x7 bitmap glyphs, one 5-bit row mask per entry (bit 4 is the left
/// column). Every glyph is a single 8-connected shape.
const std::string& synth_glyph_alphabet();
std::array<std::uint8_t, 7> glyph_rows(char c);

/// Draws `text` with its top-left corner at (x, y); each glyph cell is
/// `scale` pixels per dot with `gap` dots between glyphs. Clipped at the
/// borders. Returns the number of glyphs drawn.
int draw_text(ImageBuffer& img, int x, int y, const std::string& text, Rgb color, int scale = 1, int gap = 2);

struct SynthConfig {
    int count = 1500;
    int width = 72;
    int height = 60;
    std::uint64_t seed = 1;
    double signal_r2 = 0.5;        // share of the latent score's variance carried by the features
    double ctr_scale = 0.02;       // CTR = ctr_scale * logistic(score)
    std::int64_t impressions = 1000000;
    int max_characters = 9;
    unsigned workers = 0;
};

struct SynthItem {
    std::string id;
    ImageBuffer image;
    int characters = 0;    // glyphs drawn
    double f1 = 0.0;       // recomputed from the rendered image
    double f10 = 0.0;
    double score = 0.0;    // latent logit including noise
    double signal = 0.0;   // noiseless part of the score
    double ctr = 0.0;
    std::int64_t clicks = 0;
};

/// Renders the corpus and assigns CTRs. Output depends only on the config
/// (not on the worker count).
std::vector<SynthItem> generate_synthetic(const SynthConfig& cfg);

/// Writes images/<id>.png, manifest.csv and truth.csv under `dir`.
void write_synthetic_corpus(const std::vector<SynthItem>& items, const SynthConfig& cfg, const std::string& dir);

}  // namespace ctrvis
