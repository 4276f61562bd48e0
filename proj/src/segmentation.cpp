#include "ctrvis/segmentation.hpp"

#include <algorithm>
#include <array>
#include <limits>
#include <cmath>
#include <numeric>

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>
#include <spdlog/spdlog.h>

#include "ctrvis/error.hpp"

namespace ctrvis {

using SpMat = Eigen::SparseMatrix<double>;

WorkingImage downsample_for_segmentation(const ImageBuffer& img, int max_side) {
    const int w = img.width(), h = img.height();
    const int s = std::max(1, (std::max(w, h) + max_side - 1) / max_side);
    WorkingImage wi;
    wi.scale = s;
    wi.width = (w + s - 1) / s;
    wi.height = (h + s - 1) / s;
    wi.colors.assign(static_cast<std::size_t>(wi.width) * wi.height, Eigen::Vector3d::Zero());
    std::vector<int> counts(wi.colors.size(), 0);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const Rgb p = img.at(x, y);
            const std::size_t k = static_cast<std::size_t>(y / s) * wi.width + x / s;
            wi.colors[k] += Eigen::Vector3d(p.r, p.g, p.b);
            ++counts[k];
        }
    }
    for (std::size_t k = 0; k < wi.colors.size(); ++k) wi.colors[k] /= 255.0 * counts[k];
    return wi;
}

SpMat affinity_matrix(const WorkingImage& wi, const NcutOptions& opts) {
    const int w = wi.width, h = wi.height, r = opts.radius;
    const double inv_c = 1.0 / (opts.sigma_color * opts.sigma_color);
    const double inv_x = 1.0 / (opts.sigma_space * opts.sigma_space);
    std::vector<Eigen::Triplet<double>> trips;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const int i = y * w + x;
            for (int dy = -r; dy <= r; ++dy) {
                for (int dx = -r; dx <= r; ++dx) {
                    const int d2 = dx * dx + dy * dy;
                    if (d2 == 0 || d2 > r * r) continue;
                    const int nx = x + dx, ny = y + dy;
                    if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
                    const int j = ny * w + nx;
                    const double dc = (wi.colors[i] - wi.colors[j]).squaredNorm();
                    const double wt = std::exp(-dc * inv_c - d2 * inv_x);
                    if (wt >= opts.prune_below) trips.emplace_back(j, i, wt);
                }
            }
        }
    }
    SpMat m(w * h, w * h);
    m.setFromTriplets(trips.begin(), trips.end());
    return m;
}

std::size_t Segmentation::largest() const {
    if (segments.empty()) throw Error(ErrorCode::DegenerateImage, "segmentation has no retained segments");
    std::size_t best = 0;
    for (std::size_t i = 1; i < segments.size(); ++i) {
        if (segments[i].size > segments[best].size) best = i;
    }
    return best;
}

namespace {

Eigen::VectorXd degrees_of(const SpMat& w) {
    Eigen::VectorXd d = Eigen::VectorXd::Zero(w.cols());
    for (int k = 0; k < w.outerSize(); ++k) {
        for (SpMat::InnerIterator it(w, k); it; ++it) d[k] += it.value();
    }
    return d;
}

// Component id per node, numbered in order of each component's lowest node.
std::vector<int> connected_components(const SpMat& w, int& count) {
    const int n = static_cast<int>(w.cols());
    std::vector<int> comp(static_cast<std::size_t>(n), -1);
    std::vector<int> stack;
    count = 0;
    for (int s = 0; s < n; ++s) {
        if (comp[s] >= 0) continue;
        comp[s] = count;
        stack.assign(1, s);
        while (!stack.empty()) {
            const int k = stack.back();
            stack.pop_back();
            for (SpMat::InnerIterator it(w, k); it; ++it) {
                const int j = static_cast<int>(it.row());
                if (comp[j] < 0) {
                    comp[j] = count;
                    stack.push_back(j);
                }
            }
        }
        ++count;
    }
    return comp;
}

Eigen::MatrixXd orthonormalize(const Eigen::MatrixXd& v) {
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(v);
    return qr.householderQ() * Eigen::MatrixXd::Identity(v.rows(), v.cols());
}

void deflate(Eigen::MatrixXd& v, const Eigen::VectorXd& z0) {
    for (int j = 0; j < v.cols(); ++j) v.col(j) -= z0 * z0.dot(v.col(j));
}

Eigen::VectorXd fiedler_iterative(const SpMat& lap, const Eigen::VectorXd& z0, const NcutOptions& opts) {
    const int n = static_cast<int>(lap.rows());
    const int p = std::min(opts.block_size, n - 1);
    constexpr double kShift = 1e-5;
    SpMat shifted = lap;
    for (int i = 0; i < n; ++i) shifted.coeffRef(i, i) += kShift;
    Eigen::SimplicialLDLT<SpMat> solver(shifted);
    if (solver.info() != Eigen::Success) {
        throw Error(ErrorCode::NonConvergence, "factorization of the shifted Laplacian failed");
    }

    // Deterministic, non-constant start: golden-ratio low-discrepancy columns.
    const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
    Eigen::MatrixXd v(n, p);
    for (int j = 0; j < p; ++j) {
        for (int i = 0; i < n; ++i) {
            const double t = (i + 1) * phi * (j + 1) + 0.5 * std::sqrt(2.0) * j;
            v(i, j) = t - std::floor(t) - 0.5;
        }
    }
    deflate(v, z0);
    v = orthonormalize(v);

    Eigen::VectorXd best;
    for (int it = 0; it < opts.max_iterations; ++it) {
        const Eigen::MatrixXd lv = lap * v;
        const Eigen::MatrixXd hmat = v.transpose() * lv;
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (hmat + hmat.transpose()));
        const Eigen::MatrixXd ritz = v * es.eigenvectors();
        best = ritz.col(0);
        const double theta = es.eigenvalues()[0];
        const double residual = (lap * best - theta * best).norm();
        if (residual <= opts.tolerance) return best;
        v = solver.solve(ritz);
        deflate(v, z0);
        v = orthonormalize(v);
    }
    spdlog::debug("ncut eigensolver hit the iteration cap on a {}-node graph", n);
    return best;
}

}  // namespace

Eigen::VectorXd ncut_indicator(const SpMat& w, const NcutOptions& opts) {
    const int n = static_cast<int>(w.cols());
    const Eigen::VectorXd d = degrees_of(w);
    const Eigen::VectorXd dis = d.cwiseSqrt().cwiseInverse();
    Eigen::VectorXd z;
    if (n <= opts.dense_limit) {
        Eigen::MatrixXd lap = -(dis.asDiagonal() * Eigen::MatrixXd(w) * dis.asDiagonal());
        lap.diagonal().array() += 1.0;
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(lap);
        z = es.eigenvectors().col(1);
    } else {
        SpMat lap = -(dis.asDiagonal() * w * dis.asDiagonal());
        SpMat eye(n, n);
        eye.setIdentity();
        lap = SpMat(lap + eye);
        const Eigen::VectorXd z0 = d.cwiseSqrt().normalized();
        z = fiedler_iterative(lap, z0, opts);
    }
    Eigen::VectorXd y = dis.cwiseProduct(z);
    Eigen::Index arg = 0;
    y.cwiseAbs().maxCoeff(&arg);
    if (y[arg] < 0) y = -y;
    return y;
}

Bipartition normalized_bipartition(const SpMat& w, const std::vector<Eigen::Vector3d>& colors,
                                   const NcutOptions& opts) {
    const int n = static_cast<int>(w.cols());
    Bipartition out;
    if (n < 2) return out;
    if (std::all_of(colors.begin(), colors.end(), [&](const Eigen::Vector3d& c) { return c == colors[0]; })) {
        return out;
    }

    int ncomp = 0;
    const std::vector<int> comp = connected_components(w, ncomp);
    if (ncomp > 1) {
        std::vector<int> sizes(static_cast<std::size_t>(ncomp), 0);
        for (int c : comp) ++sizes[static_cast<std::size_t>(c)];
        const int big = static_cast<int>(std::max_element(sizes.begin(), sizes.end()) - sizes.begin());
        out.side.resize(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) out.side[i] = comp[i] == big ? 1 : 0;
        if (out.side[0] == 1) {
            for (int& s : out.side) s = 1 - s;
        }
        out.accepted = true;
        out.ncut = 0.0;
        return out;
    }

    const Eigen::VectorXd y = ncut_indicator(w, opts);
    const double lo = y.minCoeff(), hi = y.maxCoeff();
    if (!(hi > lo)) return out;
    std::array<int, 20> hist{};
    for (int i = 0; i < n; ++i) {
        const int b = std::min(19, static_cast<int>((y[i] - lo) / (hi - lo) * 20.0));
        ++hist[static_cast<std::size_t>(b)];
    }
    const auto [hmin, hmax] = std::minmax_element(hist.begin(), hist.end());
    if (static_cast<double>(*hmin) / *hmax > opts.stability_ratio) return out;

    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return y[a] < y[b]; });
    const Eigen::VectorXd d = degrees_of(w);
    const double vol = d.sum();
    std::vector<char> in_a(static_cast<std::size_t>(n), 0);
    double cut = 0.0, vol_a = 0.0, best = std::numeric_limits<double>::infinity();
    int best_k = -1;
    for (int k = 0; k + 1 < n; ++k) {
        const int i = order[k];
        double to_a = 0.0;
        for (SpMat::InnerIterator it(w, i); it; ++it) {
            if (in_a[it.row()]) to_a += it.value();
        }
        in_a[i] = 1;
        cut += d[i] - 2.0 * to_a;
        vol_a += d[i];
        const double value = cut / vol_a + cut / (vol - vol_a);
        if (value < best) {
            best = value;
            best_k = k;
        }
    }
    if (best_k < 0 || best > opts.max_ncut) return out;
    out.side.assign(static_cast<std::size_t>(n), 1);
    for (int k = 0; k <= best_k; ++k) out.side[order[k]] = 0;
    if (out.side[0] == 1) {
        for (int& s : out.side) s = 1 - s;
    }
    out.accepted = true;
    out.ncut = best;
    return out;
}

std::vector<int> segment_working_image(const WorkingImage& wi, const NcutOptions& opts) {
    const SpMat w = affinity_matrix(wi, opts);
    const int n = static_cast<int>(w.cols());
    std::vector<int> labels(static_cast<std::size_t>(n), 0);

    struct Seg {
        int id;
        std::vector<int> nodes;  // ascending global indices
        bool final = false;
    };
    std::vector<Seg> segs;
    segs.push_back({0, std::vector<int>(static_cast<std::size_t>(n)), false});
    std::iota(segs[0].nodes.begin(), segs[0].nodes.end(), 0);
    int next_id = 1;
    std::vector<int> local(static_cast<std::size_t>(n), -1);

    while (static_cast<int>(segs.size()) < opts.max_segments) {
        std::vector<std::size_t> order(segs.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            if (segs[a].nodes.size() != segs[b].nodes.size()) return segs[a].nodes.size() > segs[b].nodes.size();
            return segs[a].id < segs[b].id;
        });
        bool split = false;
        for (std::size_t idx : order) {
            Seg& seg = segs[idx];
            if (seg.final) continue;
            const int m = static_cast<int>(seg.nodes.size());
            for (int k = 0; k < m; ++k) local[seg.nodes[k]] = k;
            std::vector<Eigen::Triplet<double>> trips;
            std::vector<Eigen::Vector3d> colors;
            colors.reserve(seg.nodes.size());
            for (int k = 0; k < m; ++k) {
                const int g = seg.nodes[k];
                colors.push_back(wi.colors[g]);
                for (SpMat::InnerIterator it(w, g); it; ++it) {
                    if (labels[it.row()] == seg.id) trips.emplace_back(local[it.row()], k, it.value());
                }
            }
            SpMat sub(m, m);
            sub.setFromTriplets(trips.begin(), trips.end());
            const Bipartition bp = normalized_bipartition(sub, colors, opts);
            if (!bp.accepted) {
                seg.final = true;
                continue;
            }
            Seg child{next_id++, {}, false};
            std::vector<int> keep;
            for (int k = 0; k < m; ++k) {
                if (bp.side[k] == 1) {
                    child.nodes.push_back(seg.nodes[k]);
                    labels[seg.nodes[k]] = child.id;
                } else {
                    keep.push_back(seg.nodes[k]);
                }
            }
            seg.nodes = std::move(keep);
            segs.push_back(std::move(child));
            split = true;
            break;
        }
        if (!split) break;
    }
    return labels;
}

Segmentation finalize_segmentation(const ImageBuffer& img, const WorkingImage& wi,
                                   const std::vector<int>& working_labels, double min_fraction) {
    Segmentation seg;
    seg.width = img.width();
    seg.height = img.height();
    seg.labels.resize(img.size());
    const int max_id = *std::max_element(working_labels.begin(), working_labels.end());
    std::vector<std::size_t> counts(static_cast<std::size_t>(max_id) + 1, 0);
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) {
            const int lab = working_labels[static_cast<std::size_t>(y / wi.scale) * wi.width + x / wi.scale];
            seg.labels[img.index(x, y)] = lab;
            ++counts[static_cast<std::size_t>(lab)];
        }
    }
    const double floor = min_fraction * static_cast<double>(img.size());
    std::vector<char> keep(counts.size(), 0);
    for (std::size_t id = 0; id < counts.size(); ++id) {
        if (counts[id] == 0) continue;
        if (static_cast<double>(counts[id]) >= floor) {
            keep[id] = 1;
            seg.segments.push_back({static_cast<int>(id), counts[id]});
        } else {
            seg.dropped.push_back(static_cast<int>(id));
        }
    }
    for (int& lab : seg.labels) {
        if (!keep[static_cast<std::size_t>(lab)]) lab = Segmentation::kDropped;
    }
    return seg;
}

Segmentation segment(const ImageBuffer& img, const NcutOptions& opts) {
    if (std::min(img.width(), img.height()) < 8) {
        throw Error(ErrorCode::DegenerateImage, "image is too small to segment");
    }
    const WorkingImage wi = downsample_for_segmentation(img, opts.max_side);
    return finalize_segmentation(img, wi, segment_working_image(wi, opts), opts.min_segment_fraction);
}

}  // namespace ctrvis
