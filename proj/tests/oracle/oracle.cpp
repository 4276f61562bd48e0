#include "oracle.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <numeric>

#include <Eigen/Dense>

namespace oracle {

namespace {

constexpr double kPi = 3.14159265358979323846;

using ctrvis::ImageBuffer;
using ctrvis::Rgb;

struct Chroma {
    int hi, lo, d;
    int sixths;  // hue * d / 60, in [0, 6d)
};

Chroma chroma(Rgb p) {
    const int r = p.r, g = p.g, b = p.b;
    Chroma c{std::max(r, std::max(g, b)), std::min(r, std::min(g, b)), 0, 0};
    c.d = c.hi - c.lo;
    if (c.d == 0) return c;
    if (r == c.hi) {
        c.sixths = ((g - b) + 6 * c.d) % (6 * c.d);
    } else if (g == c.hi) {
        c.sixths = (b - r) + 2 * c.d;
    } else {
        c.sixths = (r - g) + 4 * c.d;
    }
    return c;
}

double arc(double a, double b) {
    double d = std::fabs(a - b);
    while (d >= 360.0) d -= 360.0;
    return std::min(d, 360.0 - d);
}

double mean(const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double pstd(const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    const double m = mean(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size()));
}

// Union-find labeling; returns the root-normalized label per pixel, where the
// label is the smallest pixel index in the component.
std::vector<std::size_t> label_components(int w, int h, const std::vector<int>& key) {
    const std::size_t n = static_cast<std::size_t>(w) * h;
    std::vector<std::size_t> parent(n);
    std::iota(parent.begin(), parent.end(), std::size_t{0});
    auto find = [&](std::size_t a) {
        while (parent[a] != a) a = parent[a] = parent[parent[a]];
        return a;
    };
    auto unite = [&](std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a == b) return;
        if (a < b) parent[b] = a; else parent[a] = b;
    };
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const std::size_t i = static_cast<std::size_t>(y) * w + x;
            const int nb[4][2] = {{1, 0}, {-1, 1}, {0, 1}, {1, 1}};
            for (const auto& o : nb) {
                const int nx = x + o[0], ny = y + o[1];
                if (nx < 0 || nx >= w || ny >= h) continue;
                const std::size_t j = static_cast<std::size_t>(ny) * w + nx;
                if (key[i] == key[j]) unite(i, j);
            }
        }
    }
    std::vector<std::size_t> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = find(i);
    return out;
}

double max_center_arc(const std::vector<int>& bins) {
    double best = 0.0;
    for (int a : bins) {
        for (int b : bins) best = std::max(best, arc(18.0 * a + 9.0, 18.0 * b + 9.0));
    }
    return best * kPi / 180.0;
}

void set(Features& f, int n, double v, bool defined = true) {
    f.v[static_cast<std::size_t>(n - 1)] = v;
    f.defined[static_cast<std::size_t>(n - 1)] = defined;
}

}  // namespace

int gray(Rgb p) { return static_cast<int>(std::floor((299.0 * p.r + 587.0 * p.g + 114.0 * p.b) / 1000.0 + 0.5)); }

double hue_degrees(Rgb p) {
    const Chroma c = chroma(p);
    return c.d == 0 ? 0.0 : 60.0 * c.sixths / c.d;
}

double saturation(Rgb p) {
    const Chroma c = chroma(p);
    return c.hi == 0 ? 0.0 : static_cast<double>(c.d) / c.hi;
}

double value(Rgb p) { return chroma(p).hi / 255.0; }

double lightness(Rgb p) {
    const Chroma c = chroma(p);
    return (c.hi + c.lo) / 510.0;
}

bool passes_floor(Rgb p, double floor) { return saturation(p) >= floor && value(p) >= floor; }

int hue20(Rgb p) {
    const Chroma c = chroma(p);
    return c.d == 0 ? 0 : (c.sixths * 20) / (6 * c.d);
}

int rgb512(Rgb p) { return (p.r / 32) * 64 + (p.g / 32) * 8 + p.b / 32; }

int hsv512(Rgb p) {
    const Chroma c = chroma(p);
    const int hq = c.d == 0 ? 0 : (c.sixths * 8) / (6 * c.d);
    const int sq = c.hi == 0 ? 0 : std::min(7, (8 * c.d) / c.hi);
    const int vq = std::min(7, (8 * c.hi) / 255);
    return hq * 64 + sq * 8 + vq;
}

std::array<double, 8> harmony_gammas(const std::vector<Rgb>& pixels, double step) {
    // (center, width) sectors; N has none.
    const std::vector<std::vector<std::pair<double, double>>> templates = {
        {{0, 18}}, {{0, 93.6}}, {{0, 18}, {90, 79.2}}, {{0, 18}, {180, 18}},
        {{0, 180}}, {{0, 93.6}, {180, 18}}, {{0, 93.6}, {180, 93.6}}, {}};
    std::map<double, double> weight_by_hue;
    double total = 0.0;
    for (Rgb p : pixels) {
        const double s = saturation(p);
        if (s <= 0.0) continue;
        weight_by_hue[hue_degrees(p)] += s;
        total += s;
    }
    const double n = static_cast<double>(pixels.size());
    std::array<double, 8> gamma{};
    for (std::size_t t = 0; t < templates.size(); ++t) {
        if (templates[t].empty()) {
            gamma[t] = total * kPi / n;
            continue;
        }
        if (weight_by_hue.empty()) continue;
        double best = 1e300;
        for (double alpha = 0.0; alpha < 360.0; alpha += step) {
            double sum = 0.0;
            for (const auto& [hue, wt] : weight_by_hue) {
                double d = 1e300;
                for (const auto& [c, width] : templates[t]) d = std::min(d, std::max(0.0, arc(hue, alpha + c) - width / 2));
                sum += wt * d * kPi / 180.0;
            }
            best = std::min(best, sum / n);
        }
        gamma[t] = best;
    }
    return gamma;
}

void global_features(const ImageBuffer& img, const Thresholds& t, Features& out) {
    const int w = img.width(), h = img.height();
    const std::size_t n = img.size();
    const double nd = static_cast<double>(n);
    std::vector<Rgb> px(img.pixels().begin(), img.pixels().end());

    // f1-f3
    std::vector<int> g;
    for (Rgb p : px) g.push_back(gray(p));
    std::vector<int> sorted = g;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t k = n / 40;
    set(out, 1, sorted[n - 1 - k] - sorted[k]);
    std::map<int, long> gc;
    for (int v : g) ++gc[v];
    long gmax = 0;
    for (auto& [v, c] : gc) gmax = std::max(gmax, c);
    int dom = 0;
    for (auto& [v, c] : gc) dom += c >= t.c1 * gmax ? 1 : 0;
    set(out, 2, dom);
    set(out, 3, pstd(std::vector<double>(g.begin(), g.end())));

    // f4-f7
    auto dist = [&](auto bin_of, int fcount, int fmax) {
        std::map<int, long> c;
        for (Rgb p : px) ++c[bin_of(p)];
        long mx = 0;
        for (auto& [b, v] : c) mx = std::max(mx, v);
        int d = 0;
        for (auto& [b, v] : c) d += v >= t.c2 * mx ? 1 : 0;
        set(out, fcount, d);
        set(out, fmax, mx / nd);
    };
    dist(rgb512, 4, 5);
    dist(hsv512, 6, 7);

    // f8, f9
    auto gam = harmony_gammas(px, t.harmony_step);
    std::sort(gam.begin(), gam.end());
    set(out, 8, gam[0]);
    set(out, 9, (gam[0] + gam[1]) / 2);

    // f10-f14
    std::vector<int> bins;
    for (Rgb p : px) bins.push_back(hsv512(p));
    const auto roots = label_components(w, h, bins);
    std::map<std::size_t, long> comp_size;
    for (auto r : roots) ++comp_size[r];
    struct C {
        long size;
        std::size_t first;
        int bin;
    };
    std::vector<C> kept;
    for (auto& [root, size] : comp_size) {
        if (size >= t.c4 * nd) kept.push_back({size, root, bins[root]});
    }
    std::sort(kept.begin(), kept.end(), [](const C& a, const C& b) {
        return a.size != b.size ? a.size > b.size : a.first < b.first;
    });
    std::vector<long> hist(512, 0);
    for (int b : bins) ++hist[static_cast<std::size_t>(b)];
    std::vector<int> order(512);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return hist[a] > hist[b]; });
    auto rank = [&](int bin) {
        return static_cast<double>(std::find(order.begin(), order.end(), bin) - order.begin() + 1);
    };
    set(out, 10, static_cast<double>(kept.size()));
    if (kept.empty()) {
        set(out, 11, 0, false);
        set(out, 13, 0, false);
    } else {
        set(out, 11, kept[0].size / nd);
        set(out, 13, rank(kept[0].bin));
    }
    if (kept.size() < 2) {
        set(out, 12, 0, false);
        set(out, 14, 0, false);
    } else {
        set(out, 12, kept[1].size / nd);
        set(out, 14, rank(kept[1].bin));
    }

    // f15-f17
    std::vector<long> hh(20, 0);
    std::vector<double> arcs;
    for (Rgb p : px) {
        if (!passes_floor(p, t.floor)) continue;
        ++hh[static_cast<std::size_t>(hue20(p))];
        arcs.push_back(arc(hue_degrees(p), 0.0) * kPi / 180.0);
    }
    std::vector<int> dominant;
    for (int b = 0; b < 20; ++b) {
        if (hh[static_cast<std::size_t>(b)] > 0 && hh[static_cast<std::size_t>(b)] >= t.c5 * nd) dominant.push_back(b);
    }
    set(out, 15, static_cast<double>(dominant.size()));
    set(out, 16, dominant.size() >= 2 ? max_center_arc(dominant) : 0.0, dominant.size() >= 2);
    set(out, 17, pstd(arcs), !arcs.empty());

    // f18, f19
    std::vector<double> l;
    for (Rgb p : px) l.push_back(lightness(p));
    set(out, 18, mean(l));
    set(out, 19, pstd(l));
}

Grid block_average(const ImageBuffer& img, int max_side) {
    Grid g;
    const int big = std::max(img.width(), img.height());
    g.scale = std::max(1, static_cast<int>(std::ceil(static_cast<double>(big) / max_side)));
    g.width = static_cast<int>(std::ceil(static_cast<double>(img.width()) / g.scale));
    g.height = static_cast<int>(std::ceil(static_cast<double>(img.height()) / g.scale));
    for (int gy = 0; gy < g.height; ++gy) {
        for (int gx = 0; gx < g.width; ++gx) {
            Eigen::Vector3d sum = Eigen::Vector3d::Zero();
            int count = 0;
            for (int y = gy * g.scale; y < std::min(img.height(), (gy + 1) * g.scale); ++y) {
                for (int x = gx * g.scale; x < std::min(img.width(), (gx + 1) * g.scale); ++x) {
                    const Rgb p = img.at(x, y);
                    sum += Eigen::Vector3d(p.r, p.g, p.b) / 255.0;
                    ++count;
                }
            }
            g.colors.push_back(sum / count);
        }
    }
    return g;
}

namespace {

// One two-way cut of the nodes `nodes` (ascending). Returns side per node
// (0 for the side holding nodes[0]) or empty when no admissible cut exists.
std::vector<int> dense_bipartition(const Eigen::MatrixXd& wfull, const Grid& g, const std::vector<int>& nodes,
                                   double max_ncut, double stability) {
    const int n = static_cast<int>(nodes.size());
    if (n < 2) return {};
    bool uniform = true;
    for (int i : nodes) uniform = uniform && g.colors[static_cast<std::size_t>(i)] == g.colors[static_cast<std::size_t>(nodes[0])];
    if (uniform) return {};

    Eigen::MatrixXd w(n, n);
    for (int a = 0; a < n; ++a) {
        for (int b = 0; b < n; ++b) w(a, b) = wfull(nodes[a], nodes[b]);
    }

    // Connectivity by breadth-first search.
    std::vector<int> comp(static_cast<std::size_t>(n), -1);
    int ncomp = 0;
    for (int s = 0; s < n; ++s) {
        if (comp[s] >= 0) continue;
        std::vector<int> queue = {s};
        comp[s] = ncomp;
        for (std::size_t q = 0; q < queue.size(); ++q) {
            for (int j = 0; j < n; ++j) {
                if (w(queue[q], j) > 0 && comp[j] < 0) {
                    comp[j] = ncomp;
                    queue.push_back(j);
                }
            }
        }
        ++ncomp;
    }
    std::vector<int> side(static_cast<std::size_t>(n));
    if (ncomp > 1) {
        std::vector<int> size(static_cast<std::size_t>(ncomp), 0);
        for (int c : comp) ++size[static_cast<std::size_t>(c)];
        int big = 0;
        for (int c = 1; c < ncomp; ++c) {
            if (size[c] > size[big]) big = c;
        }
        for (int i = 0; i < n; ++i) side[i] = comp[i] == big ? 1 : 0;
        if (side[0] == 1) {
            for (int& s : side) s = 1 - s;
        }
        return side;
    }

    const Eigen::VectorXd deg = w.rowwise().sum();
    Eigen::MatrixXd lap = -w;
    lap.diagonal() += deg;
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(lap, Eigen::MatrixXd(deg.asDiagonal()));
    Eigen::VectorXd y = es.eigenvectors().col(1);
    Eigen::Index arg = 0;
    y.cwiseAbs().maxCoeff(&arg);
    if (y[arg] < 0) y = -y;

    const double lo = y.minCoeff(), hi = y.maxCoeff();
    if (!(hi > lo)) return {};
    std::vector<int> hist(20, 0);
    for (int i = 0; i < n; ++i) ++hist[static_cast<std::size_t>(std::min(19, static_cast<int>((y[i] - lo) / (hi - lo) * 20.0)))];
    const double ratio = static_cast<double>(*std::min_element(hist.begin(), hist.end())) /
                         *std::max_element(hist.begin(), hist.end());
    if (ratio > stability) return {};

    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return y[a] < y[b]; });
    std::vector<char> in_a(static_cast<std::size_t>(n), 0);
    const double total = deg.sum();
    double assoc_a = 0.0, cut = 0.0, best = 1e300;
    int best_k = -1;
    for (int k = 0; k + 1 < n; ++k) {
        const int i = order[k];
        double to_a = 0.0, to_rest = 0.0;
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            if (in_a[j]) to_a += w(i, j); else to_rest += w(i, j);
        }
        cut += to_rest - to_a;
        in_a[i] = 1;
        assoc_a += deg[i];
        const double value = cut / assoc_a + cut / (total - assoc_a);
        if (value < best) {
            best = value;
            best_k = k;
        }
    }
    if (best_k < 0 || best > max_ncut) return {};
    std::fill(side.begin(), side.end(), 1);
    for (int k = 0; k <= best_k; ++k) side[order[k]] = 0;
    if (side[0] == 1) {
        for (int& s : side) s = 1 - s;
    }
    return side;
}

}  // namespace

std::vector<int> dense_ncut(const Grid& g, int radius, double sigma_color, double sigma_space, double max_ncut,
                            double stability, int max_segments) {
    const int n = g.width * g.height;
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
    for (int a = 0; a < n; ++a) {
        for (int b = 0; b < n; ++b) {
            const int dx = a % g.width - b % g.width, dy = a / g.width - b / g.width;
            const int d2 = dx * dx + dy * dy;
            if (d2 == 0 || d2 > radius * radius) continue;
            const double dc = (g.colors[static_cast<std::size_t>(a)] - g.colors[static_cast<std::size_t>(b)]).squaredNorm();
            const double v = std::exp(-dc / (sigma_color * sigma_color) - d2 / (sigma_space * sigma_space));
            if (v >= 1e-10) w(a, b) = v;
        }
    }

    std::vector<int> labels(static_cast<std::size_t>(n), 0);
    struct Seg {
        int id;
        bool done;
    };
    std::vector<Seg> segs = {{0, false}};
    int next = 1;
    while (static_cast<int>(segs.size()) < max_segments) {
        std::vector<std::pair<int, int>> by_size;  // (-size, id)
        for (const auto& s : segs) {
            if (!s.done) by_size.push_back({-static_cast<int>(std::count(labels.begin(), labels.end(), s.id)), s.id});
        }
        std::sort(by_size.begin(), by_size.end());
        bool split = false;
        for (auto [neg, id] : by_size) {
            std::vector<int> nodes;
            for (int i = 0; i < n; ++i) {
                if (labels[i] == id) nodes.push_back(i);
            }
            const auto side = dense_bipartition(w, g, nodes, max_ncut, stability);
            if (side.empty()) {
                for (auto& s : segs) {
                    if (s.id == id) s.done = true;
                }
                continue;
            }
            for (std::size_t k = 0; k < nodes.size(); ++k) {
                if (side[k] == 1) labels[static_cast<std::size_t>(nodes[k])] = next;
            }
            segs.push_back({next++, false});
            split = true;
            break;
        }
        if (!split) break;
    }
    return labels;
}

std::vector<int> upsample_labels(const ImageBuffer& img, const Grid& g, const std::vector<int>& grid_labels,
                                 double min_fraction) {
    std::vector<int> out(img.size());
    std::map<int, long> count;
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) {
            const int lab = grid_labels[static_cast<std::size_t>((y / g.scale) * g.width + x / g.scale)];
            out[static_cast<std::size_t>(y) * img.width() + x] = lab;
            ++count[lab];
        }
    }
    for (int& lab : out) {
        if (count[lab] < min_fraction * static_cast<double>(img.size())) lab = -1;
    }
    return out;
}

void local_features(const ImageBuffer& img, const std::vector<int>& labels, const Thresholds& t, Features& out) {
    const double nd = static_cast<double>(img.size());
    std::map<int, std::vector<std::size_t>> members;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] >= 0) members[labels[i]].push_back(i);
    }
    std::vector<int> ids;
    for (auto& [id, m] : members) ids.push_back(id);
    int big = ids[0];
    for (int id : ids) {
        if (members[id].size() > members[big].size()) big = id;
    }
    std::size_t smallest = members[big].size();
    for (int id : ids) smallest = std::min(smallest, members[id].size());
    set(out, 20, members[big].size() / nd);
    set(out, 21, (members[big].size() - smallest) / nd, ids.size() > 1);

    std::vector<double> q, contrast, means;
    std::vector<int> big_bins;
    int f22 = 0;
    for (int id : ids) {
        std::vector<long> hist(20, 0);
        std::vector<double> l;
        for (std::size_t i : members[id]) {
            const Rgb p = img.pixels()[i];
            l.push_back(lightness(p));
            if (passes_floor(p, t.floor)) ++hist[static_cast<std::size_t>(hue20(p))];
        }
        means.push_back(mean(l));
        const double seg_size = static_cast<double>(members[id].size());
        std::vector<int> dom;
        for (int b = 0; b < 20; ++b) {
            const long c = hist[static_cast<std::size_t>(b)];
            if (c > 0 && c >= t.c6 * seg_size) dom.push_back(b);
            if (id == big && c > 0 && c >= t.c6 * nd) ++f22;
        }
        q.push_back(static_cast<double>(dom.size()));
        contrast.push_back(dom.size() >= 2 ? max_center_arc(dom) : 0.0);
        if (id == big) big_bins = dom;
    }
    const std::size_t bi = static_cast<std::size_t>(std::find(ids.begin(), ids.end(), big) - ids.begin());
    set(out, 22, f22);
    set(out, 23, q[bi]);
    set(out, 24, *std::max_element(q.begin(), q.end()));
    set(out, 25, *std::max_element(q.begin(), q.end()) - *std::min_element(q.begin(), q.end()));
    set(out, 26, big_bins.size() >= 2 ? max_center_arc(big_bins) : 0.0, big_bins.size() >= 2);
    set(out, 27, pstd(contrast));

    std::vector<Rgb> big_px;
    for (std::size_t i : members[big]) big_px.push_back(img.pixels()[i]);
    auto gam = harmony_gammas(big_px, t.harmony_step);
    std::sort(gam.begin(), gam.end());
    set(out, 28, gam[0]);
    set(out, 29, (gam[0] + gam[1]) / 2);

    set(out, 30, means[bi]);
    set(out, 31, pstd(means));
    set(out, 32, *std::max_element(means.begin(), means.end()) - *std::min_element(means.begin(), means.end()),
        means.size() > 1);
}

namespace {

std::vector<double> bilinear(const std::vector<double>& src, int sw, int sh, int dw, int dh) {
    std::vector<double> out;
    for (int y = 0; y < dh; ++y) {
        for (int x = 0; x < dw; ++x) {
            const double fx = std::clamp((x + 0.5) * sw / dw - 0.5, 0.0, sw - 1.0);
            const double fy = std::clamp((y + 0.5) * sh / dh - 0.5, 0.0, sh - 1.0);
            const int x0 = static_cast<int>(std::floor(fx)), y0 = static_cast<int>(std::floor(fy));
            const int x1 = std::min(sw - 1, x0 + 1), y1 = std::min(sh - 1, y0 + 1);
            const double ax = fx - x0, ay = fy - y0;
            const double v = (1 - ax) * (1 - ay) * src[static_cast<std::size_t>(y0) * sw + x0] +
                             ax * (1 - ay) * src[static_cast<std::size_t>(y0) * sw + x1] +
                             (1 - ax) * ay * src[static_cast<std::size_t>(y1) * sw + x0] +
                             ax * ay * src[static_cast<std::size_t>(y1) * sw + x1];
            out.push_back(v);
        }
    }
    return out;
}

using Cx = std::complex<double>;

// Direct 2-D DFT, rows then columns. sign = -1 forward, +1 inverse (unscaled).
std::vector<Cx> dft2(const std::vector<Cx>& in, int w, int h, int sign) {
    std::vector<Cx> rows(in.size()), out(in.size());
    for (int y = 0; y < h; ++y) {
        for (int u = 0; u < w; ++u) {
            Cx acc = 0;
            for (int x = 0; x < w; ++x) {
                const double a = sign * 2.0 * kPi * ((static_cast<long>(u) * x) % w) / w;
                acc += in[static_cast<std::size_t>(y) * w + x] * Cx(std::cos(a), std::sin(a));
            }
            rows[static_cast<std::size_t>(y) * w + u] = acc;
        }
    }
    for (int u = 0; u < w; ++u) {
        for (int v = 0; v < h; ++v) {
            Cx acc = 0;
            for (int y = 0; y < h; ++y) {
                const double a = sign * 2.0 * kPi * ((static_cast<long>(v) * y) % h) / h;
                acc += rows[static_cast<std::size_t>(y) * w + u] * Cx(std::cos(a), std::sin(a));
            }
            out[static_cast<std::size_t>(v) * w + u] = acc;
        }
    }
    return out;
}

}  // namespace

std::vector<double> saliency_tau(const ImageBuffer& img) {
    const int w = img.width(), h = img.height();
    std::vector<double> g;
    for (Rgb p : img.pixels()) g.push_back(gray(p));
    const int sw = 64;
    const int sh = std::max(1, static_cast<int>(std::lround(static_cast<double>(h) * sw / w)));
    const auto small = bilinear(g, w, h, sw, sh);
    const std::size_t n = small.size();

    std::vector<Cx> f(small.begin(), small.end());
    f = dft2(f, sw, sh, -1);
    double peak = 0.0;
    for (const Cx& c : f) peak = std::max(peak, std::abs(c));
    const double floor = std::max(1e-12, 1e-10 * peak);
    std::vector<double> la(n);
    for (std::size_t i = 0; i < n; ++i) la[i] = std::log(std::max(std::abs(f[i]), floor));
    std::vector<Cx> spec(n);
    for (int y = 0; y < sh; ++y) {
        for (int x = 0; x < sw; ++x) {
            const std::size_t i = static_cast<std::size_t>(y) * sw + x;
            if (std::abs(f[i]) < floor) continue;
            double box = 0.0;
            for (int dy = -1; dy <= 1; ++dy) {
                for (int dx = -1; dx <= 1; ++dx) box += la[static_cast<std::size_t>((y + dy + sh) % sh) * sw + (x + dx + sw) % sw];
            }
            spec[i] = std::exp(la[i] - box / 9.0) * std::exp(Cx(0, std::arg(f[i])));
        }
    }
    spec = dft2(spec, sw, sh, +1);
    std::vector<double> sq(n);
    for (std::size_t i = 0; i < n; ++i) sq[i] = std::norm(spec[i] / static_cast<double>(n));

    // Direct 2-D Gaussian with clamped borders.
    const int r = 8;
    const double sigma = 2.5;
    double ksum = 0.0;
    for (int k = -r; k <= r; ++k) ksum += std::exp(-k * k / (2 * sigma * sigma));
    std::vector<double> blurred(n, 0.0);
    for (int y = 0; y < sh; ++y) {
        for (int x = 0; x < sw; ++x) {
            double acc = 0.0;
            for (int dy = -r; dy <= r; ++dy) {
                for (int dx = -r; dx <= r; ++dx) {
                    const int xx = std::clamp(x + dx, 0, sw - 1), yy = std::clamp(y + dy, 0, sh - 1);
                    acc += std::exp(-(dx * dx + dy * dy) / (2 * sigma * sigma)) * sq[static_cast<std::size_t>(yy) * sw + xx];
                }
            }
            blurred[static_cast<std::size_t>(y) * sw + x] = acc / (ksum * ksum);
        }
    }
    auto tau = bilinear(blurred, sw, sh, w, h);
    for (double& t : tau) t = std::max(0.0, t);
    return tau;
}

void saliency_features(const ImageBuffer& img, const std::vector<double>& tau, Features& out) {
    const int w = img.width(), h = img.height();
    const double nd = static_cast<double>(tau.size());
    const double alpha = 3.0 * mean(tau);
    std::vector<int> bin(tau.size());
    for (std::size_t i = 0; i < tau.size(); ++i) bin[i] = tau[i] > alpha ? 1 : 0;
    const auto roots = label_components(w, h, bin);
    std::map<std::size_t, std::vector<std::size_t>> fg, bg;
    for (std::size_t i = 0; i < roots.size(); ++i) (bin[i] ? fg : bg)[roots[i]].push_back(i);

    set(out, 33, std::count(bin.begin(), bin.end(), 0) / nd);
    set(out, 34, static_cast<double>(fg.size()));
    set(out, 37, static_cast<double>(bg.size()));
    std::size_t big_bg = 0;
    for (auto& [r, m] : bg) big_bg = std::max(big_bg, m.size());
    set(out, 38, big_bg / nd);
    if (fg.empty()) {
        for (int f : {35, 36, 39, 40, 41}) set(out, f, 0.0, false);
        return;
    }
    struct Cm {
        double x, y, t;
        std::size_t size;
    };
    std::vector<Cm> cms;
    for (auto& [r, m] : fg) {
        Cm c{0, 0, 0, m.size()};
        for (std::size_t i : m) {
            c.x += (static_cast<double>(i % w) + 0.5) / w;
            c.y += (static_cast<double>(i / w) + 0.5) / h;
            c.t += tau[i];
        }
        c.x /= m.size();
        c.y /= m.size();
        c.t /= m.size();
        cms.push_back(c);
    }
    std::size_t big = 0;
    for (std::size_t i = 0; i < cms.size(); ++i) {
        if (cms[i].size > cms[big].size) big = i;
    }
    set(out, 35, cms[big].size / nd);
    set(out, 36, cms[big].t);
    double pairs = 0.0, center = 0.0;
    for (std::size_t i = 0; i < cms.size(); ++i) {
        center += std::sqrt((cms[i].x - 0.5) * (cms[i].x - 0.5) + (cms[i].y - 0.5) * (cms[i].y - 0.5));
        for (std::size_t j = 0; j < i; ++j) {
            pairs += std::sqrt((cms[i].x - cms[j].x) * (cms[i].x - cms[j].x) + (cms[i].y - cms[j].y) * (cms[i].y - cms[j].y));
        }
    }
    double thirds = 1e300;
    for (double tx : {1.0 / 3, 2.0 / 3}) {
        for (double ty : {1.0 / 3, 2.0 / 3}) {
            thirds = std::min(thirds, std::sqrt((cms[big].x - tx) * (cms[big].x - tx) + (cms[big].y - ty) * (cms[big].y - ty)));
        }
    }
    set(out, 39, pairs);
    set(out, 40, thirds);
    set(out, 41, center);
}

int glyph_count(const ImageBuffer& img) {
    const int w = img.width(), h = img.height();
    std::vector<int> g;
    double total = 0.0;
    for (Rgb p : img.pixels()) {
        g.push_back(gray(p));
        total += g.back();
    }
    const bool dark_text = total >= 128.0 * static_cast<double>(g.size());
    const int win = std::clamp((std::min(w, h) / 4) | 1, 15, 51);
    const int r = win / 2;
    std::vector<int> fg(g.size(), 0);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            long sum = 0, count = 0;
            for (int yy = std::max(0, y - r); yy <= std::min(h - 1, y + r); ++yy) {
                for (int xx = std::max(0, x - r); xx <= std::min(w - 1, x + r); ++xx) {
                    sum += g[static_cast<std::size_t>(yy) * w + xx];
                    ++count;
                }
            }
            const double m = static_cast<double>(sum) / count;
            const int v = g[static_cast<std::size_t>(y) * w + x];
            fg[static_cast<std::size_t>(y) * w + x] = dark_text ? v < m - 12 : v > m + 12;
        }
    }
    const auto roots = label_components(w, h, fg);
    std::map<std::size_t, std::vector<std::size_t>> comps;
    for (std::size_t i = 0; i < roots.size(); ++i) {
        if (fg[i]) comps[roots[i]].push_back(i);
    }
    int count = 0;
    for (auto& [root, m] : comps) {
        int x0 = w, x1 = 0, y0 = h, y1 = 0;
        for (std::size_t i : m) {
            x0 = std::min(x0, static_cast<int>(i % w));
            x1 = std::max(x1, static_cast<int>(i % w));
            y0 = std::min(y0, static_cast<int>(i / w));
            y1 = std::max(y1, static_cast<int>(i / w));
        }
        const int bw = x1 - x0 + 1, bh = y1 - y0 + 1;
        const double aspect = static_cast<double>(bw) / bh, fill = static_cast<double>(m.size()) / (bw * bh);
        if (bh >= 5 && bh <= std::max(8, h / 2) && bw <= std::max(8, w / 3) && aspect >= 0.15 && aspect <= 1.5 &&
            fill >= 0.12 && fill <= 0.9) {
            ++count;
        }
    }
    return count;
}

std::pair<Eigen::VectorXd, double> normal_equations(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
    Eigen::MatrixXd a(x.rows(), x.cols() + 1);
    a << x, Eigen::VectorXd::Ones(x.rows());
    const Eigen::VectorXd beta = (a.transpose() * a).ldlt().solve(a.transpose() * y);
    return {beta.head(x.cols()), beta[x.cols()]};
}

double grid_classo(const Eigen::MatrixXd& a, const Eigen::VectorXd& y, double lambda, double lo, double hi) {
    const int d = static_cast<int>(a.cols());
    auto objective = [&](const Eigen::VectorXd& w) {
        const Eigen::VectorXd aw = a * w;
        const double bmin = lo - aw.minCoeff(), bmax = hi - aw.maxCoeff();
        if (bmin > bmax) return 1e300;
        const double b = std::clamp((y - aw).mean(), bmin, bmax);
        return (aw.array() + b - y.array()).square().sum() + lambda * w.lpNorm<1>();
    };
    Eigen::VectorXd center = Eigen::VectorXd::Zero(d);
    double half = 4.0;
    const int per_side = 10;
    double best = objective(center);
    for (int level = 0; level < 60; ++level) {
        Eigen::VectorXd best_w = center;
        const double step = half / per_side;
        std::vector<int> idx(static_cast<std::size_t>(d), -per_side);
        while (true) {
            Eigen::VectorXd w(d);
            for (int k = 0; k < d; ++k) w[k] = center[k] + idx[static_cast<std::size_t>(k)] * step;
            const double v = objective(w);
            if (v < best) {
                best = v;
                best_w = w;
            }
            int k = 0;
            while (k < d && ++idx[static_cast<std::size_t>(k)] > per_side) idx[static_cast<std::size_t>(k++)] = -per_side;
            if (k == d) break;
        }
        center = best_w;
        half *= 0.5;
    }
    return best;
}

double entropy(const std::vector<int>& a) {
    std::map<int, double> p;
    for (int v : a) p[v] += 1.0 / a.size();
    double h = 0.0;
    for (auto& [v, pv] : p) h -= pv * std::log(pv);
    return h;
}

double mutual_information(const std::vector<int>& a, const std::vector<int>& b) {
    std::map<int, double> pa, pb;
    std::map<std::pair<int, int>, double> pab;
    const double n = static_cast<double>(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        pa[a[i]] += 1 / n;
        pb[b[i]] += 1 / n;
        pab[{a[i], b[i]}] += 1 / n;
    }
    double mi = 0.0;
    for (auto& [k, p] : pab) mi += p * std::log(p / (pa[k.first] * pb[k.second]));
    return mi;
}

double mse_sum(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return s;
}

}  // namespace oracle
