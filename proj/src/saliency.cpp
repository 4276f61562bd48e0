#include "ctrvis/saliency.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <mutex>

#include <fftw3.h>

namespace ctrvis {

namespace {

// FFTW's planner is not thread-safe; execution of distinct plans is.
std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}

class Dft2d {
public:
    Dft2d(int w, int h) : n_(static_cast<std::size_t>(w) * h) {
        buf_ = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n_));
        std::lock_guard lock(fftw_planner_mutex());
        forward_ = fftw_plan_dft_2d(h, w, buf_, buf_, FFTW_FORWARD, FFTW_ESTIMATE);
        backward_ = fftw_plan_dft_2d(h, w, buf_, buf_, FFTW_BACKWARD, FFTW_ESTIMATE);
    }
    ~Dft2d() {
        {
            std::lock_guard lock(fftw_planner_mutex());
            fftw_destroy_plan(forward_);
            fftw_destroy_plan(backward_);
        }
        fftw_free(buf_);
    }
    Dft2d(const Dft2d&) = delete;
    Dft2d& operator=(const Dft2d&) = delete;

    std::complex<double> get(std::size_t i) const { return {buf_[i][0], buf_[i][1]}; }
    void put(std::size_t i, std::complex<double> v) {
        buf_[i][0] = v.real();
        buf_[i][1] = v.imag();
    }
    void forward() { fftw_execute(forward_); }
    void backward() { fftw_execute(backward_); }

private:
    std::size_t n_;
    fftw_complex* buf_ = nullptr;
    fftw_plan forward_ = nullptr;
    fftw_plan backward_ = nullptr;
};

std::vector<double> gaussian_blur(const std::vector<double>& src, int w, int h, double sigma, int radius) {
    std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
    double sum = 0.0;
    for (int k = -radius; k <= radius; ++k) {
        kernel[static_cast<std::size_t>(k + radius)] = std::exp(-(k * k) / (2.0 * sigma * sigma));
        sum += kernel[static_cast<std::size_t>(k + radius)];
    }
    for (double& v : kernel) v /= sum;
    std::vector<double> tmp(src.size()), out(src.size());
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int k = -radius; k <= radius; ++k) {
                const int xx = std::clamp(x + k, 0, w - 1);
                acc += kernel[static_cast<std::size_t>(k + radius)] * src[static_cast<std::size_t>(y) * w + xx];
            }
            tmp[static_cast<std::size_t>(y) * w + x] = acc;
        }
    }
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int k = -radius; k <= radius; ++k) {
                const int yy = std::clamp(y + k, 0, h - 1);
                acc += kernel[static_cast<std::size_t>(k + radius)] * tmp[static_cast<std::size_t>(yy) * w + x];
            }
            out[static_cast<std::size_t>(y) * w + x] = acc;
        }
    }
    return out;
}

template <typename InMask>
std::vector<std::vector<std::size_t>> components_where(int w, int h, InMask in_mask) {
    const std::size_t n = static_cast<std::size_t>(w) * h;
    std::vector<char> seen(n, 0);
    std::vector<std::vector<std::size_t>> out;
    std::vector<std::size_t> stack;
    for (std::size_t s = 0; s < n; ++s) {
        if (seen[s] || !in_mask(s)) continue;
        std::vector<std::size_t> comp;
        seen[s] = 1;
        stack.assign(1, s);
        while (!stack.empty()) {
            const std::size_t p = stack.back();
            stack.pop_back();
            comp.push_back(p);
            const int x = static_cast<int>(p % w), y = static_cast<int>(p / w);
            for (int dy = -1; dy <= 1; ++dy) {
                for (int dx = -1; dx <= 1; ++dx) {
                    const int nx = x + dx, ny = y + dy;
                    if ((dx == 0 && dy == 0) || nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
                    const std::size_t q = static_cast<std::size_t>(ny) * w + nx;
                    if (!seen[q] && in_mask(q)) {
                        seen[q] = 1;
                        stack.push_back(q);
                    }
                }
            }
        }
        std::sort(comp.begin(), comp.end());
        out.push_back(std::move(comp));
    }
    return out;
}

}  // namespace

std::vector<double> resize_bilinear(const std::vector<double>& src, int sw, int sh, int dw, int dh) {
    std::vector<double> out(static_cast<std::size_t>(dw) * dh);
    for (int y = 0; y < dh; ++y) {
        const double sy = std::clamp((y + 0.5) * sh / dh - 0.5, 0.0, static_cast<double>(sh - 1));
        const int y0 = static_cast<int>(sy);
        const int y1 = std::min(y0 + 1, sh - 1);
        const double fy = sy - y0;
        for (int x = 0; x < dw; ++x) {
            const double sx = std::clamp((x + 0.5) * sw / dw - 0.5, 0.0, static_cast<double>(sw - 1));
            const int x0 = static_cast<int>(sx);
            const int x1 = std::min(x0 + 1, sw - 1);
            const double fx = sx - x0;
            auto at = [&](int xx, int yy) { return src[static_cast<std::size_t>(yy) * sw + xx]; };
            const double top = at(x0, y0) * (1.0 - fx) + at(x1, y0) * fx;
            const double bottom = at(x0, y1) * (1.0 - fx) + at(x1, y1) * fx;
            out[static_cast<std::size_t>(y) * dw + x] = top * (1.0 - fy) + bottom * fy;
        }
    }
    return out;
}

std::vector<double> spectral_residual(const std::vector<double>& gray, int w, int h, const SaliencyOptions& opts) {
    const std::size_t n = static_cast<std::size_t>(w) * h;
    Dft2d dft(w, h);
    for (std::size_t i = 0; i < n; ++i) dft.put(i, gray[i]);
    dft.forward();

    std::vector<double> amp(n), phase(n), logamp(n);
    double peak = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto c = dft.get(i);
        amp[i] = std::abs(c);
        phase[i] = std::arg(c);
        peak = std::max(peak, amp[i]);
    }
    // Bins this far below the peak hold only rounding noise: their log
    // amplitude is floored and they stay empty in the reconstruction.
    const double floor = std::max(1e-12, 1e-10 * peak);
    for (std::size_t i = 0; i < n; ++i) logamp[i] = std::log(std::max(amp[i], floor));

    const int r = opts.box_size / 2;
    const double norm = 1.0 / (opts.box_size * opts.box_size);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const std::size_t i = static_cast<std::size_t>(y) * w + x;
            if (amp[i] < floor) {
                dft.put(i, 0.0);
                continue;
            }
            double avg = 0.0;
            for (int dy = -r; dy <= r; ++dy) {
                for (int dx = -r; dx <= r; ++dx) {
                    const int xx = ((x + dx) % w + w) % w;
                    const int yy = ((y + dy) % h + h) % h;
                    avg += logamp[static_cast<std::size_t>(yy) * w + xx];
                }
            }
            const double residual = logamp[i] - avg * norm;
            dft.put(i, std::polar(std::exp(residual), phase[i]));
        }
    }
    dft.backward();
    std::vector<double> sq(n);
    const double inv = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) sq[i] = std::norm(dft.get(i) * inv);
    return gaussian_blur(sq, w, h, opts.blur_sigma, opts.blur_radius);
}

SaliencyMap spectral_saliency(const ImageBuffer& img, const SaliencyOptions& opts) {
    const int w = img.width(), h = img.height();
    std::vector<double> gray(img.size());
    for (std::size_t i = 0; i < img.size(); ++i) gray[i] = gray_of(img.pixels()[i]);
    const int ww = opts.working_width;
    const int wh = std::max(1, static_cast<int>(std::lround(static_cast<double>(h) * ww / w)));
    const auto small = resize_bilinear(gray, w, h, ww, wh);
    const auto sr = spectral_residual(small, ww, wh, opts);

    SaliencyMap map;
    map.width = w;
    map.height = h;
    map.tau = resize_bilinear(sr, ww, wh, w, h);
    for (double& t : map.tau) t = std::max(t, 0.0);
    double sum = 0.0;
    for (double t : map.tau) sum += t;
    map.mean_tau = sum / static_cast<double>(map.tau.size());
    const double alpha = opts.threshold_factor * map.mean_tau;
    map.binary.resize(map.tau.size());
    for (std::size_t i = 0; i < map.tau.size(); ++i) map.binary[i] = map.tau[i] > alpha ? 1 : 0;
    return map;
}

SalientComponents salient_components(const SaliencyMap& map) {
    SalientComponents out;
    const int w = map.width, h = map.height;
    for (auto& pixels : components_where(w, h, [&](std::size_t p) { return map.binary[p] != 0; })) {
        SalientComponent c;
        double sx = 0.0, sy = 0.0, st = 0.0;
        for (std::size_t p : pixels) {
            sx += static_cast<double>(p % w) + 0.5;
            sy += static_cast<double>(p / w) + 0.5;
            st += map.tau[p];
        }
        const double m = static_cast<double>(pixels.size());
        c.cx = sx / m / w;
        c.cy = sy / m / h;
        c.mean_tau = st / m;
        c.pixels = std::move(pixels);
        out.components.push_back(std::move(c));
    }
    out.background = components_where(w, h, [&](std::size_t p) { return map.binary[p] == 0; });
    return out;
}

void saliency_features(const SaliencyMap& map, const SalientComponents& comps, FeatureVector& out) {
    const double n = static_cast<double>(map.tau.size());
    std::size_t salient = 0;
    for (char b : map.binary) salient += b ? 1 : 0;
    out.set(33, static_cast<double>(map.tau.size() - salient) / n);
    out.set(34, static_cast<double>(comps.components.size()));
    out.set(37, static_cast<double>(comps.background.size()));
    std::size_t big_bg = 0;
    for (const auto& b : comps.background) big_bg = std::max(big_bg, b.size());
    out.set(38, static_cast<double>(big_bg) / n);

    if (comps.components.empty()) {
        for (int f : {35, 36, 39, 40, 41}) out.set(f, 0.0, false);
        return;
    }
    std::size_t big = 0;
    for (std::size_t i = 1; i < comps.components.size(); ++i) {
        if (comps.components[i].pixels.size() > comps.components[big].pixels.size()) big = i;
    }
    const auto& main = comps.components[big];
    out.set(35, static_cast<double>(main.pixels.size()) / n);
    out.set(36, main.mean_tau);

    double pairs = 0.0, to_center = 0.0;
    for (std::size_t i = 0; i < comps.components.size(); ++i) {
        const auto& a = comps.components[i];
        to_center += std::hypot(a.cx - 0.5, a.cy - 0.5);
        for (std::size_t j = i + 1; j < comps.components.size(); ++j) {
            const auto& b = comps.components[j];
            pairs += std::hypot(a.cx - b.cx, a.cy - b.cy);
        }
    }
    double thirds = std::numeric_limits<double>::infinity();
    for (double tx : {1.0 / 3.0, 2.0 / 3.0}) {
        for (double ty : {1.0 / 3.0, 2.0 / 3.0}) thirds = std::min(thirds, std::hypot(main.cx - tx, main.cy - ty));
    }
    out.set(39, pairs);
    out.set(40, thirds);
    out.set(41, to_center);
}

}  // namespace ctrvis
