#include "ctrvis/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numeric>

#include "ctrvis/error.hpp"
#include "ctrvis/parallel.hpp"
#include "ctrvis/plot.hpp"
#include "ctrvis/rng.hpp"

namespace ctrvis {

double mse(const Eigen::VectorXd& y_true, const Eigen::VectorXd& y_pred) {
    if (y_true.size() != y_pred.size()) throw Error(ErrorCode::LengthMismatch, "mse inputs differ in length");
    if (y_true.size() == 0) throw Error(ErrorCode::InsufficientData, "mse of empty vectors");
    double s = 0.0;
    for (Eigen::Index i = 0; i < y_true.size(); ++i) {
        const double d = y_true[i] - y_pred[i];
        s += d * d;
    }
    return s / static_cast<double>(y_true.size());
}

std::vector<double> delta_grid() {
    std::vector<double> out;
    for (int i = 1; i <= 25; ++i) out.push_back(0.02 * i);
    return out;
}

std::vector<std::size_t> order_by_target(const Eigen::VectorXd& y) {
    std::vector<std::size_t> idx(static_cast<std::size_t>(y.size()));
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        return y[static_cast<Eigen::Index>(a)] < y[static_cast<Eigen::Index>(b)];
    });
    return idx;
}

namespace {

std::size_t extreme_count(std::size_t n, double delta) {
    if (!(delta > 0.0) || delta > 0.5) throw Error(ErrorCode::InvalidArgument, "delta must lie in (0, 0.5]");
    // The small epsilon keeps products such as 0.1 * 50 from flooring to 4.
    const auto k = static_cast<std::size_t>(std::floor(delta * static_cast<double>(n) + 1e-9));
    if (k < 1) throw Error(ErrorCode::InsufficientData, "delta * n is below one row");
    return k;
}

}  // namespace

double rank_preservation(const Eigen::VectorXd& y_true, const Eigen::VectorXd& y_pred, double delta) {
    if (y_true.size() != y_pred.size()) throw Error(ErrorCode::LengthMismatch, "rank inputs differ in length");
    const auto n = static_cast<std::size_t>(y_true.size());
    const std::size_t k = extreme_count(n, delta);
    const auto order = order_by_target(y_true);
    double credit = 0.0;
    for (std::size_t a = 0; a < k; ++a) {
        const double low = y_pred[static_cast<Eigen::Index>(order[a])];
        for (std::size_t b = n - k; b < n; ++b) {
            const double high = y_pred[static_cast<Eigen::Index>(order[b])];
            if (low < high) {
                credit += 1.0;
            } else if (low == high) {
                credit += 0.5;
            }
        }
    }
    return credit / (static_cast<double>(k) * static_cast<double>(k));
}

std::uint64_t SplitPlan::run_seed(int run) const { return derive_seed(master_seed, static_cast<std::uint64_t>(run)); }

Split SplitPlan::split(std::size_t n, int run) const {
    Rng gen(run_seed(run));
    const auto perm = permutation(n, gen);
    const auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(n)));
    Split s;
    s.train.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_train));
    s.test.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_train), perm.end());
    std::sort(s.train.begin(), s.train.end());
    std::sort(s.test.begin(), s.test.end());
    return s;
}

void SplitPlan::validate() const {
    if (runs < 1) throw Error(ErrorCode::InvalidArgument, "need at least one run");
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw Error(ErrorCode::InvalidArgument, "train fraction must lie in (0, 1)");
    }
}

const ModelEval& EvalReport::model(ModelKind kind) const {
    for (const auto& m : models) {
        if (m.kind == kind) return m;
    }
    throw Error(ErrorCode::InvalidArgument, "model not evaluated: " + to_string(kind));
}

bool EvalReport::any_nonconvergence() const {
    if (class_nonconverged_runs > 0) return true;
    return std::any_of(models.begin(), models.end(), [](const ModelEval& m) { return m.nonconverged_runs > 0; });
}

TunedParams tune_hyperparameters(const DesignMatrix& train, const EvalConfig& cfg, std::uint64_t seed) {
    TrainConfig tc = cfg.train;
    tc.seed = seed;
    TunedParams t;
    const auto has = [&](ModelKind k) { return std::find(cfg.models.begin(), cfg.models.end(), k) != cfg.models.end(); };
    if (has(ModelKind::CLasso)) t.lambda = select_lambda(train, tc);
    if (has(ModelKind::SVR)) t.svr = select_svr_params(train, tc);
    if (cfg.classification) {
        const auto order = order_by_target(train.targets);
        const auto m = static_cast<std::size_t>(std::floor(cfg.class_fraction * static_cast<double>(order.size())));
        if (m < 1) throw Error(ErrorCode::InsufficientData, "classification band is empty");
        std::vector<std::size_t> rows;
        std::vector<int> labels;
        for (std::size_t i = 0; i < m; ++i) {
            rows.push_back(order[i]);
            labels.push_back(-1);
        }
        for (std::size_t i = order.size() - m; i < order.size(); ++i) {
            rows.push_back(order[i]);
            labels.push_back(1);
        }
        t.svc = select_svc_params(train.subset(rows).features, labels, tc);
    }
    return t;
}

ModelArtifact fit_model(ModelKind kind, const DesignMatrix& train, const TrainConfig& cfg, const TunedParams& tuned,
                        std::uint64_t seed) {
    switch (kind) {
        case ModelKind::LR: return fit_linear(train);
        case ModelKind::CLasso: return fit_classo_fixed(train, cfg, tuned.lambda);
        case ModelKind::SVR: return fit_svr_fixed(train, cfg, tuned.svr);
        case ModelKind::Random: return fit_random(train, seed);
        case ModelKind::ConstantMean: return fit_constant_mean(train);
    }
    throw Error(ErrorCode::InvalidArgument, "unknown model kind");
}

std::vector<double> extreme_classification_run(const DesignMatrix& train, const DesignMatrix& test,
                                               const std::vector<double>& deltas, double class_fraction,
                                               const TrainConfig& cfg, const SvcParams& params, bool* converged) {
    const auto order = order_by_target(train.targets);
    const auto m = static_cast<std::size_t>(std::floor(class_fraction * static_cast<double>(order.size())));
    if (m < 1) throw Error(ErrorCode::InsufficientData, "classification band is empty");
    std::vector<std::size_t> rows;
    std::vector<int> labels;
    for (std::size_t i = 0; i < m; ++i) {
        rows.push_back(order[i]);
        labels.push_back(-1);
    }
    for (std::size_t i = order.size() - m; i < order.size(); ++i) {
        rows.push_back(order[i]);
        labels.push_back(1);
    }
    const SvcModel model = fit_svc_fixed(train.subset(rows).features, labels, cfg, params);
    if (converged) *converged = model.converged;

    const auto test_order = order_by_target(test.targets);
    const std::vector<int> predicted = model.classify(test.features);
    const std::size_t n = test_order.size();
    std::vector<double> acc;
    for (double delta : deltas) {
        const std::size_t k = extreme_count(n, delta);
        std::size_t correct = 0;
        for (std::size_t i = 0; i < k; ++i) {
            if (predicted[test_order[i]] == -1) ++correct;
            if (predicted[test_order[n - 1 - i]] == 1) ++correct;
        }
        acc.push_back(static_cast<double>(correct) / (2.0 * static_cast<double>(k)));
    }
    return acc;
}

EvalReport evaluate(const DesignMatrix& dm, const EvalConfig& cfg) {
    dm.validate();
    cfg.plan.validate();
    cfg.train.validate();
    const auto n = static_cast<std::size_t>(dm.targets.size());
    EvalReport rep;
    rep.master_seed = cfg.plan.master_seed;
    rep.runs = cfg.plan.runs;
    rep.train_fraction = cfg.plan.train_fraction;
    rep.rows = n;
    rep.deltas = delta_grid();

    const Split first = cfg.plan.split(n, 0);
    if (first.test.empty() || first.train.empty()) throw Error(ErrorCode::InsufficientData, "split leaves a side empty");
    extreme_count(first.test.size(), rep.deltas.front());
    const DesignMatrix first_train = dm.subset(first.train);
    rep.train_target_mean = first_train.targets.mean();
    rep.tuned = tune_hyperparameters(first_train, cfg, derive_seed(cfg.plan.run_seed(0), 7));

    std::vector<ModelKind> kinds = {ModelKind::Random};
    for (ModelKind k : cfg.models) {
        if (k != ModelKind::Random) kinds.push_back(k);
    }
    const std::size_t runs = static_cast<std::size_t>(cfg.plan.runs);
    struct RunResult {
        std::vector<double> mse;
        std::vector<std::vector<double>> rank;
        std::vector<bool> converged;
        std::vector<double> accuracy;
        bool class_converged = true;
    };
    std::vector<RunResult> results(runs);

    parallel_for(runs, cfg.workers, [&](std::size_t r) {
        const int run = static_cast<int>(r);
        const Split split = cfg.plan.split(n, run);
        const DesignMatrix train = dm.subset(split.train);
        const DesignMatrix test = dm.subset(split.test);
        const std::uint64_t seed = cfg.plan.run_seed(run);
        const TunedParams tuned = cfg.tune_every_run && run > 0 ? tune_hyperparameters(train, cfg, derive_seed(seed, 7))
                                                                : rep.tuned;
        TrainConfig tc = cfg.train;
        tc.seed = derive_seed(seed, 3);
        RunResult& out = results[r];
        for (ModelKind kind : kinds) {
            const ModelArtifact model = fit_model(kind, train, tc, tuned, derive_seed(seed, 1));
            const Eigen::VectorXd pred = predict(model, test.features);
            out.mse.push_back(mse(test.targets, pred));
            std::vector<double> ranks;
            for (double delta : rep.deltas) ranks.push_back(rank_preservation(test.targets, pred, delta));
            out.rank.push_back(std::move(ranks));
            out.converged.push_back(model.converged);
        }
        if (cfg.classification) {
            out.accuracy = extreme_classification_run(train, test, rep.deltas, cfg.class_fraction, tc, tuned.svc,
                                                      &out.class_converged);
        }
    });

    for (std::size_t m = 0; m < kinds.size(); ++m) {
        ModelEval ev;
        ev.kind = kinds[m];
        ev.rank_curve.assign(rep.deltas.size(), 0.0);
        for (std::size_t r = 0; r < runs; ++r) {
            const double model_mse = results[r].mse[m];
            const double random_mse = results[r].mse[0];
            ev.mse_per_run.push_back(model_mse);
            const bool guarded = model_mse < kRatioGuard;
            ev.ratio_per_run.push_back(guarded ? kRatioSentinel : random_mse / model_mse);
            ev.ratio_flag_per_run.push_back(guarded);
            ev.flagged_ratios += guarded ? 1 : 0;
            ev.rank_per_run.push_back(results[r].rank[m]);
            if (!results[r].converged[m]) ++ev.nonconverged_runs;
            ev.mean_mse += model_mse;
            ev.mse_ratio += ev.ratio_per_run.back();
            for (std::size_t d = 0; d < rep.deltas.size(); ++d) ev.rank_curve[d] += results[r].rank[m][d];
        }
        ev.mean_mse /= static_cast<double>(runs);
        ev.mse_ratio /= static_cast<double>(runs);
        for (double& v : ev.rank_curve) v /= static_cast<double>(runs);
        rep.models.push_back(std::move(ev));
    }
    if (cfg.classification) {
        rep.class_curve.assign(rep.deltas.size(), 0.0);
        for (std::size_t r = 0; r < runs; ++r) {
            rep.class_per_run.push_back(results[r].accuracy);
            if (!results[r].class_converged) ++rep.class_nonconverged_runs;
            for (std::size_t d = 0; d < rep.deltas.size(); ++d) rep.class_curve[d] += results[r].accuracy[d];
        }
        for (double& v : rep.class_curve) v /= static_cast<double>(runs);
    }
    return rep;
}

std::string EvalReport::to_text() const {
    std::string out;
    char buf[256];
    std::snprintf(buf, sizeof(buf), "rows: %zu\nruns: %d\ntrain fraction: %.4f\nmaster seed: %llu\n", rows, runs,
                  train_fraction, static_cast<unsigned long long>(master_seed));
    out += buf;
    if (!fingerprint.empty()) out += "feature config fingerprint: " + fingerprint + "\n";
    std::snprintf(buf, sizeof(buf), "tuned (run 0): lambda=%.6g svr C=%.6g eps=%.6g gamma=%.6g svc C=%.6g gamma=%.6g\n",
                  tuned.lambda, tuned.svr.c, tuned.svr.epsilon, tuned.svr.gamma, tuned.svc.c, tuned.svc.gamma);
    out += buf;
    std::snprintf(buf, sizeof(buf), "training CTR mean (run 0): %.6g\n\n", train_target_mean);
    out += buf;
    out += "model      mean MSE        MSE ratio vs Random  flagged  nonconverged\n";
    for (const auto& m : models) {
        std::snprintf(buf, sizeof(buf), "%-10s %-15.6e %-20.6f %-8d %d\n", to_string(m.kind).c_str(), m.mean_mse,
                      m.mse_ratio, m.flagged_ratios, m.nonconverged_runs);
        out += buf;
    }
    out += "\nrank preservation\ndelta ";
    for (const auto& m : models) {
        std::snprintf(buf, sizeof(buf), " %-9s", to_string(m.kind).c_str());
        out += buf;
    }
    if (!class_curve.empty()) out += " classification";
    out += "\n";
    for (std::size_t d = 0; d < deltas.size(); ++d) {
        std::snprintf(buf, sizeof(buf), "%.2f  ", deltas[d]);
        out += buf;
        for (const auto& m : models) {
            std::snprintf(buf, sizeof(buf), " %-9.4f", m.rank_curve[d]);
            out += buf;
        }
        if (!class_curve.empty()) {
            std::snprintf(buf, sizeof(buf), " %.4f", class_curve[d]);
            out += buf;
        }
        out += "\n";
    }
    if (class_nonconverged_runs > 0) {
        std::snprintf(buf, sizeof(buf), "\nclassifier nonconverged runs: %d\n", class_nonconverged_runs);
        out += buf;
    }
    return out;
}

void write_eval_outputs(const EvalReport& report, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    const fs::path base(dir);
    write_text_file((base / "report.txt").string(), report.to_text());

    char buf[128];
    std::string ratios = "model,mean_mse,mse_ratio,flagged_runs,nonconverged_runs\n";
    for (const auto& m : report.models) {
        std::snprintf(buf, sizeof(buf), "%s,%.17g,%.17g,%d,%d\n", to_string(m.kind).c_str(), m.mean_mse, m.mse_ratio,
                      m.flagged_ratios, m.nonconverged_runs);
        ratios += buf;
    }
    write_text_file((base / "mse_ratio.csv").string(), ratios);

    std::string per_run = "run";
    for (const auto& m : report.models) per_run += ",mse_" + to_string(m.kind);
    per_run += "\n";
    for (int r = 0; r < report.runs; ++r) {
        per_run += std::to_string(r);
        for (const auto& m : report.models) {
            std::snprintf(buf, sizeof(buf), ",%.17g", m.mse_per_run[static_cast<std::size_t>(r)]);
            per_run += buf;
        }
        per_run += "\n";
    }
    write_text_file((base / "mse_per_run.csv").string(), per_run);

    std::vector<PlotSeries> rank_series;
    std::string rank_csv = "delta";
    for (const auto& m : report.models) rank_csv += "," + to_string(m.kind);
    rank_csv += "\n";
    for (std::size_t d = 0; d < report.deltas.size(); ++d) {
        std::snprintf(buf, sizeof(buf), "%.17g", report.deltas[d]);
        rank_csv += buf;
        for (const auto& m : report.models) {
            std::snprintf(buf, sizeof(buf), ",%.17g", m.rank_curve[d]);
            rank_csv += buf;
        }
        rank_csv += "\n";
    }
    for (const auto& m : report.models) rank_series.push_back({to_string(m.kind), report.deltas, m.rank_curve});
    write_text_file((base / "rank_curve.csv").string(), rank_csv);
    PlotAxes rank_axes{"Rank preservation", "delta", "correctly ranked pairs", 0.0, 0.52, 0.0, 1.0};
    write_text_file((base / "rank_curve.svg").string(), svg_line_plot(rank_axes, rank_series));

    if (!report.class_curve.empty()) {
        write_text_file((base / "classification_curve.csv").string(),
                        xy_csv("delta", "accuracy", report.deltas, report.class_curve));
        PlotAxes class_axes{"Extreme CTR classification", "delta", "accuracy", 0.0, 0.52, 0.0, 1.0};
        write_text_file((base / "classification_curve.svg").string(),
                        svg_line_plot(class_axes, {{"SVM", report.deltas, report.class_curve}}));
    }
}

}  // namespace ctrvis
