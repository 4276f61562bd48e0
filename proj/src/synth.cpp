#include "ctrvis/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>

#include "ctrvis/error.hpp"
#include "ctrvis/features.hpp"
#include "ctrvis/global_features.hpp"
#include "ctrvis/parallel.hpp"
#include "ctrvis/plot.hpp"
#include "ctrvis/rng.hpp"

namespace ctrvis {

namespace {

struct Glyph {
    char c;
    std::array<std::uint8_t, 7> rows;
};

constexpr std::array<Glyph, 16> kGlyphs = {{
    {'A', {0x0E, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11}},
    {'B', {0x1E, 0x11, 0x11, 0x1E, 0x11, 0x11, 0x1E}},
    {'C', {0x0E, 0x11, 0x10, 0x10, 0x10, 0x11, 0x0E}},
    {'D', {0x1C, 0x12, 0x11, 0x11, 0x11, 0x12, 0x1C}},
    {'E', {0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x1F}},
    {'F', {0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x10}},
    {'H', {0x11, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11}},
    {'L', {0x10, 0x10, 0x10, 0x10, 0x10, 0x10, 0x1F}},
    {'N', {0x11, 0x19, 0x15, 0x13, 0x11, 0x11, 0x11}},
    {'O', {0x0E, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E}},
    {'P', {0x1E, 0x11, 0x11, 0x1E, 0x10, 0x10, 0x10}},
    {'S', {0x0F, 0x10, 0x10, 0x0E, 0x01, 0x01, 0x1E}},
    {'T', {0x1F, 0x04, 0x04, 0x04, 0x04, 0x04, 0x04}},
    {'U', {0x11, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E}},
    {'X', {0x11, 0x11, 0x0A, 0x04, 0x0A, 0x11, 0x11}},
    {'Z', {0x1F, 0x01, 0x02, 0x04, 0x08, 0x10, 0x1F}},
}};

std::uint8_t clamp_channel(double v) { return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L)); }

/// A color whose luma sits near `gray`, tinted by a random direction.
Rgb tinted(double gray, Rng& gen) {
    const double tint = 70.0 * uniform01(gen);
    double d[3];
    for (double& v : d) v = 2.0 * uniform01(gen) - 1.0;
    // Remove the luma component of the tint so the gray level stays put.
    const double luma = 0.299 * d[0] + 0.587 * d[1] + 0.114 * d[2];
    for (double& v : d) v -= luma;
    return {clamp_channel(gray + tint * d[0]), clamp_channel(gray + tint * d[1]), clamp_channel(gray + tint * d[2])};
}

void fill_rect(ImageBuffer& img, int x0, int y0, int w, int h, Rgb c) {
    for (int y = std::max(0, y0); y < std::min(img.height(), y0 + h); ++y) {
        for (int x = std::max(0, x0); x < std::min(img.width(), x0 + w); ++x) img.at(x, y) = c;
    }
}

SynthItem render_item(const SynthConfig& cfg, int index) {
    Rng gen(derive_seed(cfg.seed, static_cast<std::uint64_t>(index)));
    SynthItem item;
    char id[32];
    std::snprintf(id, sizeof(id), "syn%05d", index);
    item.id = id;

    const double contrast = uniform01(gen);
    auto gray_level = [&] { return 128.0 + 120.0 * contrast * (2.0 * uniform01(gen) - 1.0); };
    const double bg_gray = gray_level();
    ImageBuffer img(cfg.width, cfg.height, tinted(bg_gray, gen));

    const int text_band = 14;
    const int art_height = std::max(8, cfg.height - text_band);
    const int blobs = static_cast<int>(uniform_index(gen, 8));
    for (int b = 0; b < blobs; ++b) {
        const int w = 8 + static_cast<int>(uniform_index(gen, 21));
        const int h = 8 + static_cast<int>(uniform_index(gen, 17));
        const int x = static_cast<int>(uniform_index(gen, static_cast<std::uint64_t>(std::max(1, cfg.width - w))));
        const int y = static_cast<int>(uniform_index(gen, static_cast<std::uint64_t>(std::max(1, art_height - h))));
        fill_rect(img, x, y, w, h, tinted(gray_level(), gen));
    }

    const int max_fit = std::max(0, (cfg.width - 6) / 7);
    const int chars = static_cast<int>(uniform_index(gen, static_cast<std::uint64_t>(std::min(cfg.max_characters, max_fit) + 1)));
    std::string text;
    const std::string& alphabet = synth_glyph_alphabet();
    for (int k = 0; k < chars; ++k) text += alphabet[uniform_index(gen, alphabet.size())];
    const Rgb ink = bg_gray > 128.0 ? Rgb{10, 10, 10} : Rgb{245, 245, 245};
    item.characters = draw_text(img, 4, cfg.height - 11, text, ink);

    FeatureVector fv;
    ThresholdConfig th;
    gray_level_features(img, th, fv);
    coherent_component_features(img, th, fv);
    item.f1 = fv.f(1);
    item.f10 = fv.f(10);
    item.image = std::move(img);
    return item;
}

std::vector<double> zscore(const std::vector<double>& v) {
    const double m = mean_of(v);
    double sd = population_stddev(v);
    if (!(sd > 0.0)) sd = 1.0;
    std::vector<double> out;
    for (double x : v) out.push_back((x - m) / sd);
    return out;
}

}  // namespace

const std::string& synth_glyph_alphabet() {
    static const std::string s = [] {
        std::string a;
        for (const auto& g : kGlyphs) a += g.c;
        return a;
    }();
    return s;
}

std::array<std::uint8_t, 7> glyph_rows(char c) {
    for (const auto& g : kGlyphs) {
        if (g.c == c) return g.rows;
    }
    throw Error(ErrorCode::InvalidArgument, std::string("no glyph for '") + c + "'");
}

int draw_text(ImageBuffer& img, int x, int y, const std::string& text, Rgb color, int scale, int gap) {
    if (scale < 1 || gap < 0) throw Error(ErrorCode::InvalidArgument, "bad text scale or gap");
    int drawn = 0;
    int pen = x;
    for (char c : text) {
        if (c == ' ') {
            pen += (5 + gap) * scale;
            continue;
        }
        const auto rows = glyph_rows(c);
        for (int r = 0; r < 7; ++r) {
            for (int col = 0; col < 5; ++col) {
                if (!((rows[static_cast<std::size_t>(r)] >> (4 - col)) & 1)) continue;
                fill_rect(img, pen + col * scale, y + r * scale, scale, scale, color);
            }
        }
        pen += (5 + gap) * scale;
        ++drawn;
    }
    return drawn;
}

std::vector<SynthItem> generate_synthetic(const SynthConfig& cfg) {
    if (cfg.count < 2) throw Error(ErrorCode::InvalidArgument, "need at least two creatives");
    if (cfg.width < 16 || cfg.height < 24) throw Error(ErrorCode::InvalidArgument, "synthetic images too small");
    if (!(cfg.signal_r2 > 0.0 && cfg.signal_r2 <= 1.0)) throw Error(ErrorCode::InvalidArgument, "signal_r2 in (0, 1]");
    if (!(cfg.ctr_scale > 0.0 && cfg.ctr_scale <= 1.0)) throw Error(ErrorCode::InvalidArgument, "ctr_scale in (0, 1]");
    if (cfg.impressions < 1) throw Error(ErrorCode::InvalidArgument, "impressions must be positive");

    std::vector<SynthItem> items(static_cast<std::size_t>(cfg.count));
    parallel_for(items.size(), cfg.workers, [&](std::size_t i) { items[i] = render_item(cfg, static_cast<int>(i)); });

    std::vector<double> f1, f10, chars;
    for (const auto& it : items) {
        f1.push_back(it.f1);
        f10.push_back(it.f10);
        chars.push_back(it.characters);
    }
    const auto z1 = zscore(f1), z10 = zscore(f10), zc = zscore(chars);
    std::vector<double> raw;
    for (std::size_t i = 0; i < items.size(); ++i) raw.push_back(z1[i] + z10[i] - 0.8 * zc[i]);
    const auto signal = zscore(raw);

    const double noise_sd = std::sqrt((1.0 - cfg.signal_r2) / cfg.signal_r2);
    Rng noise(derive_seed(cfg.seed, 0x6e6f697365ULL));
    for (std::size_t i = 0; i < items.size(); ++i) {
        auto& it = items[i];
        it.signal = signal[i];
        it.score = signal[i] + noise_sd * standard_normal(noise);
        const double p = cfg.ctr_scale / (1.0 + std::exp(-it.score));
        it.clicks = std::llround(p * static_cast<double>(cfg.impressions));
        it.ctr = static_cast<double>(it.clicks) / static_cast<double>(cfg.impressions);
    }
    return items;
}

void write_synthetic_corpus(const std::vector<SynthItem>& items, const SynthConfig& cfg, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(fs::path(dir) / "images");
    std::string manifest = "creative_id,path,impressions,clicks,category,width,height,ctr\n";
    std::string truth = "creative_id,characters,f1,f10,signal,score,ctr\n";
    char buf[256];
    for (const auto& it : items) {
        const std::string rel = "images/" + it.id + ".png";
        write_png(it.image, (fs::path(dir) / rel).string());
        std::snprintf(buf, sizeof(buf), "%s,%s,%lld,%lld,synthetic,%d,%d,%.17g\n", it.id.c_str(), rel.c_str(),
                      static_cast<long long>(cfg.impressions), static_cast<long long>(it.clicks), it.image.width(),
                      it.image.height(), it.ctr);
        manifest += buf;
        std::snprintf(buf, sizeof(buf), "%s,%d,%.17g,%.17g,%.17g,%.17g,%.17g\n", it.id.c_str(), it.characters, it.f1,
                      it.f10, it.signal, it.score, it.ctr);
        truth += buf;
    }
    write_text_file((fs::path(dir) / "manifest.csv").string(), manifest);
    write_text_file((fs::path(dir) / "truth.csv").string(), truth);
}

}  // namespace ctrvis
