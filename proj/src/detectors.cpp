#include "ctrvis/detectors.hpp"

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdio>
#include <filesystem>
#include <memory>
#include <vector>

#include "ctrvis/error.hpp"

namespace ctrvis {

namespace {

std::string shell_quote(const std::string& s) {
    std::string out = "'";
    for (char c : s) {
        if (c == '\'') {
            out += "'\\''";
        } else {
            out += c;
        }
    }
    return out + "'";
}

class TempPng {
public:
    explicit TempPng(const ImageBuffer& img) {
        std::string tmpl = (std::filesystem::temp_directory_path() / "ctrvis-XXXXXX").string();
        std::vector<char> buf(tmpl.begin(), tmpl.end());
        buf.push_back('\0');
        const int fd = mkstemp(buf.data());
        if (fd < 0) throw Error(ErrorCode::IoError, "cannot create temporary file");
        close(fd);
        base_ = buf.data();
        path_ = base_ + ".png";
        write_png(img, path_);
    }
    ~TempPng() {
        std::error_code ec;
        std::filesystem::remove(path_, ec);
        std::filesystem::remove(base_, ec);
    }
    TempPng(const TempPng&) = delete;
    TempPng& operator=(const TempPng&) = delete;
    const std::string& path() const { return path_; }

private:
    std::string base_;
    std::string path_;
};

}  // namespace

int count_glyphs(const ImageBuffer& img) {
    const int w = img.width(), h = img.height();
    std::vector<int> gray(img.size());
    long long total = 0;
    for (std::size_t i = 0; i < img.size(); ++i) {
        gray[i] = gray_of(img.pixels()[i]);
        total += gray[i];
    }
    const bool dark_text = total >= 128LL * static_cast<long long>(img.size());

    // Integral image for the local mean.
    std::vector<long long> integral(static_cast<std::size_t>(w + 1) * (h + 1), 0);
    for (int y = 0; y < h; ++y) {
        long long row = 0;
        for (int x = 0; x < w; ++x) {
            row += gray[static_cast<std::size_t>(y) * w + x];
            integral[static_cast<std::size_t>(y + 1) * (w + 1) + x + 1] =
                integral[static_cast<std::size_t>(y) * (w + 1) + x + 1] + row;
        }
    }
    const int win = std::clamp((std::min(w, h) / 4) | 1, 15, 51);
    const int r = win / 2;
    constexpr int kMargin = 12;
    std::vector<char> fg(img.size(), 0);
    for (int y = 0; y < h; ++y) {
        const int y0 = std::max(0, y - r), y1 = std::min(h, y + r + 1);
        for (int x = 0; x < w; ++x) {
            const int x0 = std::max(0, x - r), x1 = std::min(w, x + r + 1);
            const long long sum = integral[static_cast<std::size_t>(y1) * (w + 1) + x1] -
                                  integral[static_cast<std::size_t>(y0) * (w + 1) + x1] -
                                  integral[static_cast<std::size_t>(y1) * (w + 1) + x0] +
                                  integral[static_cast<std::size_t>(y0) * (w + 1) + x0];
            const double mean = static_cast<double>(sum) / ((y1 - y0) * (x1 - x0));
            const int g = gray[static_cast<std::size_t>(y) * w + x];
            fg[static_cast<std::size_t>(y) * w + x] = dark_text ? g < mean - kMargin : g > mean + kMargin;
        }
    }

    int count = 0;
    std::vector<char> seen(img.size(), 0);
    std::vector<std::size_t> stack;
    for (std::size_t s = 0; s < img.size(); ++s) {
        if (!fg[s] || seen[s]) continue;
        seen[s] = 1;
        stack.assign(1, s);
        int minx = w, maxx = -1, miny = h, maxy = -1;
        std::size_t area = 0;
        while (!stack.empty()) {
            const std::size_t p = stack.back();
            stack.pop_back();
            ++area;
            const int x = static_cast<int>(p % w), y = static_cast<int>(p / w);
            minx = std::min(minx, x);
            maxx = std::max(maxx, x);
            miny = std::min(miny, y);
            maxy = std::max(maxy, y);
            for (int dy = -1; dy <= 1; ++dy) {
                for (int dx = -1; dx <= 1; ++dx) {
                    const int nx = x + dx, ny = y + dy;
                    if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
                    const std::size_t q = static_cast<std::size_t>(ny) * w + nx;
                    if (fg[q] && !seen[q]) {
                        seen[q] = 1;
                        stack.push_back(q);
                    }
                }
            }
        }
        const int bw = maxx - minx + 1, bh = maxy - miny + 1;
        const double aspect = static_cast<double>(bw) / bh;
        const double fill = static_cast<double>(area) / (static_cast<double>(bw) * bh);
        const bool glyph_like = bh >= 5 && bh <= std::max(8, h / 2) && bw <= std::max(8, w / 3) &&
                                aspect >= 0.15 && aspect <= 1.5 && fill >= 0.12 && fill <= 0.9;
        if (glyph_like) ++count;
    }
    return count;
}

DetectorAdapter::DetectorAdapter(DetectorKind kind, std::string command)
    : kind_(kind), command_(std::move(command)) {}

DetectionResult DetectorAdapter::count(const ImageBuffer& img, const std::string& image_path) const {
    if (external()) return run_external(img, image_path);
    if (kind_ == DetectorKind::Faces) return {0, false};
    return {count_glyphs(img), true};
}

DetectionResult DetectorAdapter::run_external(const ImageBuffer& img, const std::string& image_path) const {
    std::lock_guard lock(mutex_);
    std::unique_ptr<TempPng> tmp;
    std::string path = image_path;
    if (path.empty()) {
        tmp = std::make_unique<TempPng>(img);
        path = tmp->path();
    }
    const std::string cmd = command_ + " " + shell_quote(path);
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe) throw Error(ErrorCode::ExternalToolFailure, "cannot start detector: " + command_);
    std::string output;
    std::array<char, 256> buf{};
    while (std::fgets(buf.data(), static_cast<int>(buf.size()), pipe)) output += buf.data();
    const int status = pclose(pipe);
    if (status != 0) {
        throw Error(ErrorCode::ExternalToolFailure,
                    "detector exited with status " + std::to_string(WIFEXITED(status) ? WEXITSTATUS(status) : status));
    }
    auto first = output.find_first_not_of(" \t\r\n");
    auto last = output.find_last_not_of(" \t\r\n");
    if (first == std::string::npos) throw Error(ErrorCode::ExternalToolFailure, "detector printed nothing");
    const std::string token = output.substr(first, last - first + 1);
    if (token.size() > 9 || !std::all_of(token.begin(), token.end(), [](unsigned char c) { return std::isdigit(c); })) {
        throw Error(ErrorCode::ExternalToolFailure, "detector output is not a count: " + token);
    }
    return {std::stoi(token), true};
}

DetectionResult count_characters(const ImageBuffer& img, const DetectorAdapter& adapter,
                                 const std::string& image_path) {
    if (adapter.kind() != DetectorKind::Characters) {
        throw Error(ErrorCode::InvalidArgument, "adapter does not count characters");
    }
    return adapter.count(img, image_path);
}

DetectionResult count_faces(const ImageBuffer& img, const DetectorAdapter& adapter, const std::string& image_path) {
    if (adapter.kind() != DetectorKind::Faces) {
        throw Error(ErrorCode::InvalidArgument, "adapter does not count faces");
    }
    return adapter.count(img, image_path);
}

}  // namespace ctrvis
