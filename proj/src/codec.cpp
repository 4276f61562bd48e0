#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>

#include <jpeglib.h>
#include <png.h>

#include "ctrvis/error.hpp"
#include "ctrvis/image.hpp"

namespace ctrvis {

namespace {

constexpr std::uint8_t kPngSig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};

std::uint32_t be32(const std::uint8_t* p) {
    return (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) | (std::uint32_t{p[2]} << 8) | p[3];
}
std::uint32_t le32(const std::uint8_t* p) {
    return std::uint32_t{p[0]} | (std::uint32_t{p[1]} << 8) | (std::uint32_t{p[2]} << 16) | (std::uint32_t{p[3]} << 24);
}
std::uint16_t le16(const std::uint8_t* p) { return static_cast<std::uint16_t>(p[0] | (p[1] << 8)); }

// ---------------------------------------------------------------------------
// PNG

bool png_is_animated(std::span<const std::uint8_t> bytes) {
    std::size_t pos = 8;
    while (pos + 8 <= bytes.size()) {
        const std::uint32_t len = be32(bytes.data() + pos);
        const char* type = reinterpret_cast<const char*>(bytes.data() + pos + 4);
        if (std::memcmp(type, "acTL", 4) == 0) return true;
        if (std::memcmp(type, "IDAT", 4) == 0) return false;
        pos += 12 + static_cast<std::size_t>(len);
    }
    return false;
}

ImageBuffer decode_png(std::span<const std::uint8_t> bytes) {
    if (png_is_animated(bytes)) {
        throw Error(ErrorCode::UnsupportedFormat, "animated PNG");
    }
    png_image image;
    std::memset(&image, 0, sizeof(image));
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
        throw Error(ErrorCode::CorruptPayload, std::string("png: ") + image.message);
    }
    image.format = PNG_FORMAT_RGBA;
    std::vector<std::uint8_t> raw(PNG_IMAGE_SIZE(image));
    if (!png_image_finish_read(&image, nullptr, raw.data(), 0, nullptr)) {
        std::string msg = image.message;
        png_image_free(&image);
        throw Error(ErrorCode::CorruptPayload, "png: " + msg);
    }
    const int w = static_cast<int>(image.width);
    const int h = static_cast<int>(image.height);
    std::vector<Rgb> px(static_cast<std::size_t>(w) * h);
    for (std::size_t i = 0; i < px.size(); ++i) {
        px[i] = {raw[4 * i], raw[4 * i + 1], raw[4 * i + 2]};
    }
    return ImageBuffer(w, h, std::move(px));
}

// ---------------------------------------------------------------------------
// JPEG

struct JpegErrorMgr {
    jpeg_error_mgr base;
    std::jmp_buf jump;
    char message[JMSG_LENGTH_MAX];
};

void jpeg_error_exit(j_common_ptr cinfo) {
    auto* err = reinterpret_cast<JpegErrorMgr*>(cinfo->err);
    (*cinfo->err->format_message)(cinfo, err->message);
    std::longjmp(err->jump, 1);
}

void jpeg_silent(j_common_ptr, int) {}

ImageBuffer decode_jpeg(std::span<const std::uint8_t> bytes) {
    jpeg_decompress_struct cinfo;
    JpegErrorMgr err;
    cinfo.err = jpeg_std_error(&err.base);
    err.base.error_exit = jpeg_error_exit;
    err.base.emit_message = jpeg_silent;
    std::vector<Rgb> px;
    int w = 0, h = 0;
    if (setjmp(err.jump)) {
        jpeg_destroy_decompress(&cinfo);
        throw Error(ErrorCode::CorruptPayload, std::string("jpeg: ") + err.message);
    }
    jpeg_create_decompress(&cinfo);
    jpeg_mem_src(&cinfo, bytes.data(), static_cast<unsigned long>(bytes.size()));
    jpeg_read_header(&cinfo, TRUE);
    cinfo.out_color_space = JCS_RGB;
    jpeg_start_decompress(&cinfo);
    w = static_cast<int>(cinfo.output_width);
    h = static_cast<int>(cinfo.output_height);
    px.resize(static_cast<std::size_t>(w) * h);
    std::vector<std::uint8_t> row(static_cast<std::size_t>(w) * 3);
    while (cinfo.output_scanline < cinfo.output_height) {
        const auto y = cinfo.output_scanline;
        JSAMPROW rows[1] = {row.data()};
        jpeg_read_scanlines(&cinfo, rows, 1);
        for (int x = 0; x < w; ++x) {
            px[static_cast<std::size_t>(y) * w + x] = {row[3 * x], row[3 * x + 1], row[3 * x + 2]};
        }
    }
    jpeg_finish_decompress(&cinfo);
    jpeg_destroy_decompress(&cinfo);
    return ImageBuffer(w, h, std::move(px));
}

// ---------------------------------------------------------------------------
// BMP: uncompressed 8/24/32-bit and BI_BITFIELDS 32-bit

ImageBuffer decode_bmp(std::span<const std::uint8_t> b) {
    if (b.size() < 54) throw Error(ErrorCode::CorruptPayload, "bmp: truncated header");
    const std::uint32_t data_offset = le32(&b[10]);
    const std::uint32_t header_size = le32(&b[14]);
    if (header_size < 40) throw Error(ErrorCode::UnsupportedFormat, "bmp: OS/2 headers not supported");
    const auto raw_w = static_cast<std::int32_t>(le32(&b[18]));
    const auto raw_h = static_cast<std::int32_t>(le32(&b[22]));
    const std::uint16_t bpp = le16(&b[28]);
    const std::uint32_t compression = le32(&b[30]);
    if (compression != 0 && !(compression == 3 && bpp == 32)) {
        throw Error(ErrorCode::UnsupportedFormat, "bmp: compressed bitmaps not supported");
    }
    if (bpp != 8 && bpp != 24 && bpp != 32) {
        throw Error(ErrorCode::UnsupportedFormat, "bmp: unsupported bit depth");
    }
    if (raw_w <= 0 || raw_h == 0) throw Error(ErrorCode::CorruptPayload, "bmp: bad dimensions");
    const int w = raw_w;
    const bool top_down = raw_h < 0;
    const int h = top_down ? -raw_h : raw_h;
    const std::size_t stride = ((static_cast<std::size_t>(w) * bpp + 31) / 32) * 4;
    if (data_offset + stride * static_cast<std::size_t>(h) > b.size()) {
        throw Error(ErrorCode::CorruptPayload, "bmp: pixel data truncated");
    }
    std::vector<Rgb> palette;
    if (bpp == 8) {
        std::uint32_t colors = le32(&b[46]);
        if (colors == 0) colors = 256;
        const std::size_t pal_at = 14 + header_size;
        if (pal_at + colors * 4 > b.size()) throw Error(ErrorCode::CorruptPayload, "bmp: palette truncated");
        for (std::uint32_t i = 0; i < colors; ++i) {
            const std::uint8_t* e = &b[pal_at + 4 * i];
            palette.push_back({e[2], e[1], e[0]});
        }
    }
    std::vector<Rgb> px(static_cast<std::size_t>(w) * h);
    for (int y = 0; y < h; ++y) {
        const int src_row = top_down ? y : h - 1 - y;
        const std::uint8_t* row = &b[data_offset + stride * static_cast<std::size_t>(src_row)];
        for (int x = 0; x < w; ++x) {
            Rgb& out = px[static_cast<std::size_t>(y) * w + x];
            if (bpp == 8) {
                const std::uint8_t idx = row[x];
                if (idx >= palette.size()) throw Error(ErrorCode::CorruptPayload, "bmp: palette index");
                out = palette[idx];
            } else {
                const std::uint8_t* p = row + static_cast<std::size_t>(x) * (bpp / 8);
                out = {p[2], p[1], p[0]};
            }
        }
    }
    return ImageBuffer(w, h, std::move(px));
}

// ---------------------------------------------------------------------------
// GIF: first (and only) frame; more than one frame means animation.

class GifReader {
public:
    explicit GifReader(std::span<const std::uint8_t> b) : b_(b) {}

    std::uint8_t u8() {
        need(1);
        return b_[pos_++];
    }
    std::uint16_t u16() {
        need(2);
        const std::uint16_t v = le16(&b_[pos_]);
        pos_ += 2;
        return v;
    }
    void skip(std::size_t n) {
        need(n);
        pos_ += n;
    }
    std::span<const std::uint8_t> take(std::size_t n) {
        need(n);
        auto s = b_.subspan(pos_, n);
        pos_ += n;
        return s;
    }
    void skip_sub_blocks() {
        for (std::uint8_t len = u8(); len != 0; len = u8()) skip(len);
    }
    std::vector<std::uint8_t> read_sub_blocks() {
        std::vector<std::uint8_t> out;
        for (std::uint8_t len = u8(); len != 0; len = u8()) {
            auto s = take(len);
            out.insert(out.end(), s.begin(), s.end());
        }
        return out;
    }

private:
    void need(std::size_t n) const {
        if (pos_ + n > b_.size()) throw Error(ErrorCode::CorruptPayload, "gif: truncated stream");
    }
    std::span<const std::uint8_t> b_;
    std::size_t pos_ = 0;
};

std::vector<std::uint8_t> lzw_decode(const std::vector<std::uint8_t>& data, int min_code_size, std::size_t expected) {
    if (min_code_size < 2 || min_code_size > 11) throw Error(ErrorCode::CorruptPayload, "gif: bad LZW code size");
    const int clear = 1 << min_code_size;
    const int eoi = clear + 1;
    std::vector<std::uint16_t> prefix(4096);
    std::vector<std::uint8_t> suffix(4096);
    std::vector<std::uint8_t> first(4096);
    std::vector<std::uint8_t> stack;
    std::vector<std::uint8_t> out;
    out.reserve(expected);
    for (int i = 0; i < clear; ++i) {
        suffix[i] = static_cast<std::uint8_t>(i);
        first[i] = static_cast<std::uint8_t>(i);
    }
    int code_size = min_code_size + 1;
    int next = eoi + 1;
    int prev = -1;
    std::uint32_t bits = 0;
    int nbits = 0;
    std::size_t pos = 0;
    auto emit = [&](int code) {
        stack.clear();
        while (code >= clear) {
            stack.push_back(suffix[code]);
            code = prefix[code];
        }
        stack.push_back(static_cast<std::uint8_t>(code));
        out.insert(out.end(), stack.rbegin(), stack.rend());
    };
    while (out.size() < expected) {
        while (nbits < code_size) {
            if (pos >= data.size()) return out;
            bits |= std::uint32_t{data[pos++]} << nbits;
            nbits += 8;
        }
        const int code = static_cast<int>(bits & ((1u << code_size) - 1));
        bits >>= code_size;
        nbits -= code_size;
        if (code == clear) {
            code_size = min_code_size + 1;
            next = eoi + 1;
            prev = -1;
            continue;
        }
        if (code == eoi) break;
        if (prev < 0) {
            if (code >= clear) throw Error(ErrorCode::CorruptPayload, "gif: bad first code");
            emit(code);
            prev = code;
            continue;
        }
        if (code < next) {
            emit(code);
            if (next < 4096) {
                prefix[next] = static_cast<std::uint16_t>(prev);
                suffix[next] = first[code];
                first[next] = first[prev];
                ++next;
            }
        } else if (code == next && next < 4096) {
            prefix[next] = static_cast<std::uint16_t>(prev);
            suffix[next] = first[prev];
            first[next] = first[prev];
            ++next;
            emit(code);
        } else {
            throw Error(ErrorCode::CorruptPayload, "gif: LZW code out of range");
        }
        prev = code;
        if (next == (1 << code_size) && code_size < 12) ++code_size;
    }
    return out;
}

ImageBuffer decode_gif(std::span<const std::uint8_t> bytes) {
    GifReader in(bytes);
    in.skip(6);
    const int screen_w = in.u16();
    const int screen_h = in.u16();
    const std::uint8_t flags = in.u8();
    const std::uint8_t bg_index = in.u8();
    in.skip(1);
    std::vector<Rgb> global;
    if (flags & 0x80) {
        const int n = 1 << ((flags & 7) + 1);
        auto t = in.take(static_cast<std::size_t>(n) * 3);
        for (int i = 0; i < n; ++i) global.push_back({t[3 * i], t[3 * i + 1], t[3 * i + 2]});
    }
    if (screen_w < 1 || screen_h < 1) throw Error(ErrorCode::CorruptPayload, "gif: bad screen size");

    std::vector<Rgb> canvas(static_cast<std::size_t>(screen_w) * screen_h,
                            bg_index < global.size() ? global[bg_index] : Rgb{});
    int frames = 0;
    for (;;) {
        const std::uint8_t tag = in.u8();
        if (tag == 0x3B) break;
        if (tag == 0x21) {
            in.u8();
            in.skip_sub_blocks();
            continue;
        }
        if (tag != 0x2C) throw Error(ErrorCode::CorruptPayload, "gif: unknown block");
        if (++frames > 1) throw Error(ErrorCode::UnsupportedFormat, "animated GIF");
        const int fx = in.u16(), fy = in.u16(), fw = in.u16(), fh = in.u16();
        const std::uint8_t iflags = in.u8();
        std::vector<Rgb> table = global;
        if (iflags & 0x80) {
            const int n = 1 << ((iflags & 7) + 1);
            auto t = in.take(static_cast<std::size_t>(n) * 3);
            table.clear();
            for (int i = 0; i < n; ++i) table.push_back({t[3 * i], t[3 * i + 1], t[3 * i + 2]});
        }
        const bool interlaced = iflags & 0x40;
        const int min_code = in.u8();
        const auto data = in.read_sub_blocks();
        const std::size_t count = static_cast<std::size_t>(fw) * fh;
        const auto indices = lzw_decode(data, min_code, count);
        if (indices.size() < count) throw Error(ErrorCode::CorruptPayload, "gif: frame data truncated");
        std::vector<int> row_order;
        if (interlaced) {
            for (int pass = 0; pass < 4; ++pass) {
                static constexpr int start[4] = {0, 4, 2, 1};
                static constexpr int step[4] = {8, 8, 4, 2};
                for (int r = start[pass]; r < fh; r += step[pass]) row_order.push_back(r);
            }
        } else {
            for (int r = 0; r < fh; ++r) row_order.push_back(r);
        }
        for (int i = 0; i < fh; ++i) {
            const int y = fy + row_order[i];
            if (y >= screen_h) continue;
            for (int x = 0; x < fw; ++x) {
                if (fx + x >= screen_w) continue;
                const std::uint8_t idx = indices[static_cast<std::size_t>(i) * fw + x];
                if (idx >= table.size()) throw Error(ErrorCode::CorruptPayload, "gif: palette index");
                canvas[static_cast<std::size_t>(y) * screen_w + fx + x] = table[idx];
            }
        }
    }
    if (frames == 0) throw Error(ErrorCode::CorruptPayload, "gif: no image data");
    return ImageBuffer(screen_w, screen_h, std::move(canvas));
}

}  // namespace

ImageFormat sniff_format(std::span<const std::uint8_t> b) noexcept {
    if (b.size() >= 8 && std::memcmp(b.data(), kPngSig, 8) == 0) return ImageFormat::Png;
    if (b.size() >= 3 && b[0] == 0xFF && b[1] == 0xD8 && b[2] == 0xFF) return ImageFormat::Jpeg;
    if (b.size() >= 6 && (std::memcmp(b.data(), "GIF87a", 6) == 0 || std::memcmp(b.data(), "GIF89a", 6) == 0)) {
        return ImageFormat::Gif;
    }
    if (b.size() >= 2 && b[0] == 'B' && b[1] == 'M') return ImageFormat::Bmp;
    return ImageFormat::Unknown;
}

ImageBuffer decode_image(std::span<const std::uint8_t> bytes) {
    switch (sniff_format(bytes)) {
        case ImageFormat::Png: return decode_png(bytes);
        case ImageFormat::Jpeg: return decode_jpeg(bytes);
        case ImageFormat::Gif: return decode_gif(bytes);
        case ImageFormat::Bmp: return decode_bmp(bytes);
        case ImageFormat::Unknown: break;
    }
    throw Error(ErrorCode::UnsupportedFormat, "unrecognized image signature");
}

ImageBuffer read_image(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return decode_image(bytes);
}

std::vector<std::uint8_t> encode_png(const ImageBuffer& img) {
    png_image image;
    std::memset(&image, 0, sizeof(image));
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(img.width());
    image.height = static_cast<png_uint_32>(img.height());
    image.format = PNG_FORMAT_RGB;
    static_assert(sizeof(Rgb) == 3);
    png_alloc_size_t size = 0;
    const void* src = img.pixels().data();
    if (!png_image_write_to_memory(&image, nullptr, &size, 0, src, 0, nullptr)) {
        throw Error(ErrorCode::IoError, std::string("png encode: ") + image.message);
    }
    std::vector<std::uint8_t> out(size);
    if (!png_image_write_to_memory(&image, out.data(), &size, 0, src, 0, nullptr)) {
        throw Error(ErrorCode::IoError, std::string("png encode: ") + image.message);
    }
    out.resize(size);
    return out;
}

void write_png(const ImageBuffer& img, const std::string& path) {
    const auto bytes = encode_png(img);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace ctrvis
