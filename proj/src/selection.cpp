#include "ctrvis/selection.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include <Eigen/Cholesky>

#include "ctrvis/error.hpp"
#include "ctrvis/features.hpp"
#include "ctrvis/parallel.hpp"
#include "ctrvis/rng.hpp"

namespace ctrvis {

void DiscretizationSpec::validate() const {
    if (bins < 2) throw Error(ErrorCode::InvalidArgument, "need at least two bins");
}

std::vector<int> discretize(const Eigen::Ref<const Eigen::VectorXd>& x, const DiscretizationSpec& spec) {
    spec.validate();
    if (x.size() < 2) throw Error(ErrorCode::InsufficientData, "need at least two observations");
    const double lo = x.minCoeff();
    const double hi = x.maxCoeff();
    if (!std::isfinite(lo) || !std::isfinite(hi)) throw Error(ErrorCode::InvalidArgument, "non-finite observation");
    if (!(hi > lo)) throw Error(ErrorCode::ZeroVariance, "constant variable");
    const double width = (hi - lo) / spec.bins;
    std::vector<int> codes(static_cast<std::size_t>(x.size()));
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const int b = static_cast<int>(std::floor((x[i] - lo) / width));
        codes[static_cast<std::size_t>(i)] = std::clamp(b, 0, spec.bins - 1);
    }
    return codes;
}

double linear_correlation(const Eigen::Ref<const Eigen::VectorXd>& x, const Eigen::Ref<const Eigen::VectorXd>& y) {
    if (x.size() != y.size()) throw Error(ErrorCode::LengthMismatch, "correlation inputs differ in length");
    if (x.size() < 2) throw Error(ErrorCode::InsufficientData, "need at least two observations");
    const Eigen::ArrayXd dx = x.array() - x.mean();
    const Eigen::ArrayXd dy = y.array() - y.mean();
    const double sxx = dx.square().sum();
    const double syy = dy.square().sum();
    if (!(sxx > 0.0) || !(syy > 0.0)) throw Error(ErrorCode::ZeroVariance, "constant variable");
    return std::clamp((dx * dy).sum() / std::sqrt(sxx * syy), -1.0, 1.0);
}

namespace {

double sorted_sum(std::vector<double>& terms) {
    std::sort(terms.begin(), terms.end());
    double s = 0.0;
    for (double t : terms) s += t;
    return s;
}

}  // namespace

double entropy_of_codes(const std::vector<int>& a, int bins) {
    if (a.empty()) throw Error(ErrorCode::InsufficientData, "empty sample");
    std::vector<std::int64_t> counts(static_cast<std::size_t>(bins), 0);
    for (int v : a) ++counts[static_cast<std::size_t>(v)];
    const double n = static_cast<double>(a.size());
    std::vector<double> terms;
    for (auto c : counts) {
        if (c == 0) continue;
        const double p = static_cast<double>(c) / n;
        terms.push_back(-p * std::log(p));
    }
    return sorted_sum(terms);
}

double mutual_information_of_codes(const std::vector<int>& a, const std::vector<int>& b, int bins) {
    if (a.size() != b.size()) throw Error(ErrorCode::LengthMismatch, "inputs differ in length");
    if (a.empty()) throw Error(ErrorCode::InsufficientData, "empty sample");
    const auto nb = static_cast<std::size_t>(bins);
    std::vector<std::int64_t> joint(nb * nb, 0), ca(nb, 0), cb(nb, 0);
    for (std::size_t i = 0; i < a.size(); ++i) {
        const auto u = static_cast<std::size_t>(a[i]);
        const auto v = static_cast<std::size_t>(b[i]);
        ++joint[u * nb + v];
        ++ca[u];
        ++cb[v];
    }
    const auto n = static_cast<std::int64_t>(a.size());
    std::vector<double> terms;
    for (std::size_t u = 0; u < nb; ++u) {
        for (std::size_t v = 0; v < nb; ++v) {
            const std::int64_t c = joint[u * nb + v];
            if (c == 0) continue;
            // Integer products keep the ratio identical when the arguments swap.
            const double ratio = static_cast<double>(c * n) / static_cast<double>(ca[u] * cb[v]);
            terms.push_back(static_cast<double>(c) / static_cast<double>(n) * std::log(ratio));
        }
    }
    return std::max(0.0, sorted_sum(terms));
}

double entropy(const Eigen::Ref<const Eigen::VectorXd>& x, const DiscretizationSpec& spec) {
    return entropy_of_codes(discretize(x, spec), spec.bins);
}

double mutual_information(const Eigen::Ref<const Eigen::VectorXd>& x, const Eigen::Ref<const Eigen::VectorXd>& y,
                          const DiscretizationSpec& spec) {
    if (x.size() != y.size()) throw Error(ErrorCode::LengthMismatch, "inputs differ in length");
    return mutual_information_of_codes(discretize(x, spec), discretize(y, spec), spec.bins);
}

namespace {

double nmi_of_codes(const std::vector<int>& a, double ha, const std::vector<int>& b, double hb, int bins) {
    if (!(ha > 0.0) || !(hb > 0.0)) throw Error(ErrorCode::ZeroEntropy, "variable has zero entropy");
    return mutual_information_of_codes(a, b, bins) / std::sqrt(ha * hb);
}

}  // namespace

double nmi(const Eigen::Ref<const Eigen::VectorXd>& x, const Eigen::Ref<const Eigen::VectorXd>& y,
           const DiscretizationSpec& spec) {
    if (x.size() != y.size()) throw Error(ErrorCode::LengthMismatch, "inputs differ in length");
    const auto a = discretize(x, spec);
    const auto b = discretize(y, spec);
    return nmi_of_codes(a, entropy_of_codes(a, spec.bins), b, entropy_of_codes(b, spec.bins), spec.bins);
}

NmiMatrix nmi_matrix(const Eigen::MatrixXd& x, const DiscretizationSpec& spec, unsigned workers) {
    spec.validate();
    const auto d = static_cast<std::size_t>(x.cols());
    NmiMatrix out;
    out.values = Eigen::MatrixXd::Identity(x.cols(), x.cols());
    out.constant.assign(d, false);
    std::vector<std::vector<int>> codes(d);
    std::vector<double> h(d, 0.0);
    for (std::size_t j = 0; j < d; ++j) {
        try {
            codes[j] = discretize(x.col(static_cast<Eigen::Index>(j)), spec);
            h[j] = entropy_of_codes(codes[j], spec.bins);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::ZeroVariance) throw;
            out.constant[j] = true;
        }
    }
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = i + 1; j < d; ++j) {
            if (!out.constant[i] && !out.constant[j]) pairs.emplace_back(i, j);
        }
    }
    std::vector<double> vals(pairs.size(), 0.0);
    parallel_for(pairs.size(), workers, [&](std::size_t p) {
        const auto [i, j] = pairs[p];
        vals[p] = nmi_of_codes(codes[i], h[i], codes[j], h[j], spec.bins);
    });
    for (std::size_t p = 0; p < pairs.size(); ++p) {
        const auto i = static_cast<Eigen::Index>(pairs[p].first);
        const auto j = static_cast<Eigen::Index>(pairs[p].second);
        out.values(i, j) = vals[p];
        out.values(j, i) = vals[p];
    }
    return out;
}

ClusterAssignment cluster_by_similarity(const Eigen::MatrixXd& similarity, double threshold,
                                        const std::vector<bool>& excluded) {
    const auto d = static_cast<int>(similarity.rows());
    if (similarity.cols() != d) throw Error(ErrorCode::DimensionMismatch, "similarity matrix must be square");
    if (d < 2) throw Error(ErrorCode::InsufficientData, "need at least two features");
    if (!excluded.empty() && excluded.size() != static_cast<std::size_t>(d)) {
        throw Error(ErrorCode::LengthMismatch, "exclusion mask size");
    }
    ClusterAssignment out;
    out.threshold = threshold;
    out.excluded = excluded.empty() ? std::vector<bool>(static_cast<std::size_t>(d), false) : excluded;

    std::vector<std::vector<int>> active;
    for (int j = 0; j < d; ++j) active.push_back({j});
    auto linkage = [&](const std::vector<int>& a, const std::vector<int>& b) {
        double s = 0.0;
        for (int i : a) {
            for (int j : b) s += similarity(i, j);
        }
        return s / static_cast<double>(a.size() * b.size());
    };
    while (true) {
        double best = -std::numeric_limits<double>::infinity();
        std::size_t bi = 0, bj = 0;
        // `active` stays sorted by smallest member, so the first strict maximum
        // found is also the lowest-index pair among ties.
        for (std::size_t i = 0; i < active.size(); ++i) {
            if (out.excluded[static_cast<std::size_t>(active[i].front())]) continue;
            for (std::size_t j = i + 1; j < active.size(); ++j) {
                if (out.excluded[static_cast<std::size_t>(active[j].front())]) continue;
                const double s = linkage(active[i], active[j]);
                if (s > best) {
                    best = s;
                    bi = i;
                    bj = j;
                }
            }
        }
        if (!(best >= threshold)) break;
        out.merges.push_back({active[bi].front(), active[bj].front(), best});
        active[bi].insert(active[bi].end(), active[bj].begin(), active[bj].end());
        std::sort(active[bi].begin(), active[bi].end());
        active.erase(active.begin() + static_cast<std::ptrdiff_t>(bj));
    }
    out.members = std::move(active);
    out.cluster_of.assign(static_cast<std::size_t>(d), -1);
    for (std::size_t c = 0; c < out.members.size(); ++c) {
        for (int j : out.members[c]) out.cluster_of[static_cast<std::size_t>(j)] = static_cast<int>(c);
    }
    return out;
}

ClusterAssignment cluster_features(const Eigen::MatrixXd& x, const DiscretizationSpec& spec, double threshold,
                                   unsigned workers) {
    const NmiMatrix m = nmi_matrix(x, spec, workers);
    return cluster_by_similarity(m.values, threshold, m.constant);
}

double ridge_cv_score(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const std::vector<int>& columns,
                      const std::vector<int>& fold_of, int folds, double ridge) {
    const Eigen::Index n = x.rows();
    const auto p = static_cast<Eigen::Index>(columns.size());
    double sse = 0.0;
    for (int f = 0; f < folds; ++f) {
        std::vector<Eigen::Index> tr, te;
        for (Eigen::Index i = 0; i < n; ++i) (fold_of[static_cast<std::size_t>(i)] == f ? te : tr).push_back(i);
        if (te.empty() || tr.size() < 2) continue;
        const auto m = static_cast<Eigen::Index>(tr.size());
        Eigen::MatrixXd z(m, p);
        Eigen::VectorXd yt(m);
        for (Eigen::Index r = 0; r < m; ++r) {
            yt[r] = y[tr[static_cast<std::size_t>(r)]];
            for (Eigen::Index c = 0; c < p; ++c) z(r, c) = x(tr[static_cast<std::size_t>(r)], columns[static_cast<std::size_t>(c)]);
        }
        const Eigen::RowVectorXd mu = z.colwise().mean();
        z.rowwise() -= mu;
        Eigen::RowVectorXd sd = (z.colwise().squaredNorm() / static_cast<double>(m)).cwiseSqrt();
        for (Eigen::Index c = 0; c < p; ++c) {
            if (!(sd[c] > 1e-12)) sd[c] = 1.0;
        }
        z.array().rowwise() /= sd.array();
        const double ym = yt.mean();
        Eigen::MatrixXd g = z.transpose() * z;
        g.diagonal().array() += ridge * static_cast<double>(m);
        const Eigen::VectorXd w = g.ldlt().solve(z.transpose() * (yt.array() - ym).matrix());
        for (Eigen::Index t : te) {
            double pred = ym;
            for (Eigen::Index c = 0; c < p; ++c) {
                pred += (x(t, columns[static_cast<std::size_t>(c)]) - mu[c]) / sd[c] * w[c];
            }
            const double e = y[t] - pred;
            sse += e * e;
        }
    }
    const double sst = (y.array() - y.mean()).square().sum();
    if (!(sst > 0.0)) throw Error(ErrorCode::ZeroVariance, "constant target");
    return 1.0 - sse / sst;
}

namespace {

struct Candidate {
    int feature = -1;
    double score = -std::numeric_limits<double>::infinity();
};

Candidate best_addition(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const std::vector<int>& selected,
                        const std::vector<bool>& available, const std::vector<int>& fold_of, const FfsConfig& cfg) {
    Candidate best;
    std::vector<int> cols = selected;
    cols.push_back(-1);
    for (std::size_t j = 0; j < available.size(); ++j) {
        if (!available[j]) continue;
        cols.back() = static_cast<int>(j);
        const double s = ridge_cv_score(x, y, cols, fold_of, cfg.folds, cfg.ridge);
        if (s > best.score) best = {static_cast<int>(j), s};
    }
    return best;
}

}  // namespace

FfsResult forward_select(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const ClusterAssignment& clusters,
                         int k, const FfsConfig& cfg, std::uint64_t seed) {
    if (x.rows() != y.size()) throw Error(ErrorCode::LengthMismatch, "feature rows and targets differ");
    if (clusters.cluster_of.size() != static_cast<std::size_t>(x.cols())) {
        throw Error(ErrorCode::DimensionMismatch, "cluster assignment does not match the feature count");
    }
    if (k < 0 || static_cast<std::size_t>(k) > clusters.count()) {
        throw Error(ErrorCode::InvalidArgument, "k exceeds the number of clusters");
    }
    if (cfg.folds < 2 || x.rows() < cfg.folds) throw Error(ErrorCode::InsufficientData, "too few rows for the folds");
    const auto d = static_cast<std::size_t>(x.cols());
    const auto fold_of = fold_assignment(static_cast<std::size_t>(x.rows()), cfg.folds, seed);

    std::vector<bool> usable(d);
    for (std::size_t j = 0; j < d; ++j) {
        usable[j] = clusters.excluded.empty() || !clusters.excluded[j];
    }

    FfsResult out;
    std::vector<bool> available = usable;
    std::vector<int> selected;
    for (int step = 0; step < k; ++step) {
        const Candidate c = best_addition(x, y, selected, available, fold_of, cfg);
        if (c.feature < 0) break;
        const int cl = clusters.cluster_of[static_cast<std::size_t>(c.feature)];
        out.steps.push_back({cl, c.feature, c.score});
        selected.push_back(c.feature);
        for (int j : clusters.members[static_cast<std::size_t>(cl)]) available[static_cast<std::size_t>(j)] = false;
    }

    if (cfg.null_permutations > 0 && !out.steps.empty()) {
        Rng gen(derive_seed(seed, 0x6e756c6cULL));
        double band = -std::numeric_limits<double>::infinity();
        Eigen::VectorXd shuffled = y;
        for (int r = 0; r < cfg.null_permutations; ++r) {
            shuffle(std::span<double>(shuffled.data(), static_cast<std::size_t>(shuffled.size())), gen);
            band = std::max(band, best_addition(x, shuffled, {}, usable, fold_of, cfg).score);
        }
        out.null_band = band;
        out.informative = out.steps.front().cv_score > band;
    }
    return out;
}

SelectionReport select_features(const DesignMatrix& dm, const SelectionConfig& cfg) {
    dm.validate();
    cfg.spec.validate();
    const Eigen::Index d = dm.features.cols();
    SelectionReport rep;
    rep.seed = cfg.seed;
    for (Eigen::Index j = 0; j < d; ++j) {
        rep.names.push_back(static_cast<std::size_t>(j) < dm.names.size() ? dm.names[static_cast<std::size_t>(j)]
                                                                          : feature_name(static_cast<int>(j) + 1));
    }
    const auto ycodes = discretize(dm.targets, cfg.spec);
    const double hy = entropy_of_codes(ycodes, cfg.spec.bins);
    for (Eigen::Index j = 0; j < d; ++j) {
        try {
            const auto codes = discretize(dm.features.col(j), cfg.spec);
            rep.lc.push_back(linear_correlation(dm.features.col(j), dm.targets));
            rep.mi.push_back(mutual_information_of_codes(codes, ycodes, cfg.spec.bins));
            rep.nmi_target.push_back(
                nmi_of_codes(codes, entropy_of_codes(codes, cfg.spec.bins), ycodes, hy, cfg.spec.bins));
            rep.defined.push_back(true);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::ZeroVariance) throw;
            rep.lc.push_back(0.0);
            rep.mi.push_back(0.0);
            rep.nmi_target.push_back(0.0);
            rep.defined.push_back(false);
        }
    }
    rep.clusters = cluster_features(dm.features, cfg.spec, cfg.threshold, cfg.workers);
    const int k = std::min(cfg.top_k, static_cast<int>(rep.clusters.count()));
    rep.ffs = forward_select(dm.features, dm.targets, rep.clusters, k, cfg.ffs, cfg.seed);
    return rep;
}

namespace {

std::string description_for(const std::string& name) {
    if (name.size() > 1 && name[0] == 'f') {
        try {
            return std::string(feature_description(std::stoi(name.substr(1))));
        } catch (const std::exception&) {
            return {};
        }
    }
    return {};
}

}  // namespace

std::string SelectionReport::to_table() const {
    std::string out;
    char buf[512];
    std::snprintf(buf, sizeof(buf), "%-6s %-44s %9s %9s %9s %7s\n", "ID", "description", "LC", "MI", "NMI",
                  "cluster");
    out += buf;
    for (std::size_t j = 0; j < names.size(); ++j) {
        const std::string desc = description_for(names[j]).substr(0, 44);
        if (defined[j]) {
            std::snprintf(buf, sizeof(buf), "%-6s %-44s %9.4f %9.4f %9.4f %7s\n", names[j].c_str(), desc.c_str(),
                          lc[j], mi[j], nmi_target[j],
                          ("S" + std::to_string(clusters.cluster_of[j] + 1)).c_str());
        } else {
            std::snprintf(buf, sizeof(buf), "%-6s %-44s %9s %9s %9s %7s\n", names[j].c_str(), desc.c_str(), "const",
                          "const", "const", ("S" + std::to_string(clusters.cluster_of[j] + 1)).c_str());
        }
        out += buf;
    }
    std::snprintf(buf, sizeof(buf), "\nclusters: %zu (threshold %.3g)\n", clusters.count(), clusters.threshold);
    out += buf;
    for (std::size_t c = 0; c < clusters.count(); ++c) {
        out += "S" + std::to_string(c + 1) + ":";
        for (int j : clusters.members[c]) out += " " + names[static_cast<std::size_t>(j)];
        out += "\n";
    }
    out += "\nforward selection (cluster, representative, CV R^2)\n";
    for (std::size_t s = 0; s < ffs.steps.size(); ++s) {
        const auto& st = ffs.steps[s];
        std::snprintf(buf, sizeof(buf), "%2zu. S%-3d %-6s %.6f\n", s + 1, st.cluster + 1,
                      names[static_cast<std::size_t>(st.feature)].c_str(), st.cv_score);
        out += buf;
    }
    std::snprintf(buf, sizeof(buf), "null band (max shuffled first-step R^2): %.6f%s\n", ffs.null_band,
                  ffs.informative ? "" : "  [selection not informative]");
    out += buf;
    std::snprintf(buf, sizeof(buf), "seed: %llu\n", static_cast<unsigned long long>(seed));
    out += buf;
    if (!fingerprint.empty()) out += "feature config fingerprint: " + fingerprint + "\n";
    return out;
}

std::string SelectionReport::to_csv() const {
    std::string out = "feature,description,lc,mi,nmi,defined,cluster\n";
    char buf[256];
    for (std::size_t j = 0; j < names.size(); ++j) {
        std::snprintf(buf, sizeof(buf), ",%.17g,%.17g,%.17g,%d,S%d\n", lc[j], mi[j], nmi_target[j],
                      defined[j] ? 1 : 0, clusters.cluster_of[j] + 1);
        out += names[j] + ",\"" + description_for(names[j]) + "\"" + buf;
    }
    return out;
}

}  // namespace ctrvis
