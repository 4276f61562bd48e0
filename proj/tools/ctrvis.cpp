#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "ctrvis/error.hpp"
#include "ctrvis/evaluation.hpp"
#include "ctrvis/extractor.hpp"
#include "ctrvis/learning.hpp"
#include "ctrvis/pipeline.hpp"
#include "ctrvis/plot.hpp"
#include "ctrvis/selection.hpp"
#include "ctrvis/synth.hpp"

namespace fs = std::filesystem;
using namespace ctrvis;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitConvergence = 3;

struct TrainFlags {
    TrainConfig cfg;
    std::vector<double> explicit_bounds;
    bool no_bounds = false;

    void add(CLI::App* app) {
        app->add_option("--lambda-grid", cfg.lambda_grid, "C-Lasso lambda grid")->delimiter(',');
        app->add_option("--svr-c", cfg.svr_c, "SVR / SVM C grid")->delimiter(',');
        app->add_option("--svr-epsilon", cfg.svr_epsilon, "SVR epsilon grid (standardized target units)")
            ->delimiter(',');
        app->add_option("--rbf-gamma", cfg.rbf_gamma, "RBF width grid")->delimiter(',');
        app->add_option("--folds", cfg.folds, "cross-validation folds");
        app->add_option("--tolerance", cfg.tolerance, "C-Lasso solver tolerance");
        app->add_option("--max-iterations", cfg.max_iterations, "C-Lasso iteration cap");
        app->add_option("--svm-tolerance", cfg.svm_tolerance, "SMO KKT gap");
        app->add_option("--svm-max-iterations", cfg.svm_max_iterations, "SMO iteration cap");
        app->add_option("--bounds", explicit_bounds, "explicit y_min,y_max instead of the training range")
            ->delimiter(',')
            ->expected(2);
        app->add_flag("--no-bounds", no_bounds, "drop the prediction bounds (plain Lasso)");
    }

    TrainConfig resolve(std::uint64_t seed) const {
        TrainConfig out = cfg;
        out.seed = seed;
        if (explicit_bounds.size() == 2) {
            out.bounds_from_data = false;
            out.y_min = explicit_bounds[0];
            out.y_max = explicit_bounds[1];
        }
        out.enforce_bounds = !no_bounds;
        out.validate();
        return out;
    }
};

struct ExtractFlags {
    ExtractorConfig cfg;

    void add(CLI::App* app) {
        auto& t = cfg.thresholds;
        app->add_option("--c1", t.c1, "gray dominant-bin threshold");
        app->add_option("--c2", t.c2, "color dominant-bin threshold");
        app->add_option("--c4", t.c4_frac, "coherent component minimum size (fraction of the image)");
        app->add_option("--c5", t.c5, "dominant hue threshold (fraction of the image)");
        app->add_option("--c6", t.c6, "segment dominant hue threshold");
        app->add_option("--sat-val-floor", t.sat_val_floor, "hue histograms ignore pixels below this S or V");
        app->add_option("--rotation-step", t.harmony_rotation_step, "harmony template rotation step (degrees)");
        auto& n = cfg.ncut;
        app->add_option("--segments", n.max_segments, "maximum segments");
        app->add_option("--segment-side", n.max_side, "segmentation working resolution");
        app->add_option("--segment-radius", n.radius, "affinity neighborhood radius");
        app->add_option("--sigma-color", n.sigma_color, "affinity color scale");
        app->add_option("--sigma-space", n.sigma_space, "affinity spatial scale");
        app->add_option("--max-ncut", n.max_ncut, "reject cuts above this value");
        app->add_option("--min-segment", n.min_segment_fraction, "drop segments below this share");
        auto& s = cfg.saliency;
        app->add_option("--saliency-width", s.working_width, "spectral residual working width");
        app->add_option("--saliency-sigma", s.blur_sigma, "saliency smoothing sigma");
        app->add_option("--saliency-factor", s.threshold_factor, "salient if above this multiple of the mean");
        app->add_option("--char-cmd", cfg.character_command, "external character counter command");
        app->add_option("--face-cmd", cfg.face_command, "external face counter command");
    }
};

FeatureMatrix load_matrices(const std::vector<std::string>& paths) {
    std::vector<FeatureMatrix> parts;
    for (const auto& p : paths) parts.push_back(read_feature_matrix(p));
    return combine_feature_matrices(parts);
}

std::vector<ModelKind> parse_models(const std::vector<std::string>& names) {
    std::vector<ModelKind> out;
    for (const auto& n : names) out.push_back(model_kind_from_string(n));
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Visual features and CTR models for display ad creatives"};
    app.require_subcommand(1);
    std::string log_level = "info";
    app.add_option("--log-level", log_level, "trace, debug, info, warn, error or off");
    unsigned workers = 0;
    app.add_option("--workers", workers, "worker threads (0: all cores)");
    std::uint64_t seed = 1;
    app.add_option("--seed", seed, "master seed");

    // synth
    auto* synth = app.add_subcommand("synth", "generate a synthetic creative corpus");
    SynthConfig synth_cfg;
    std::string synth_out = "synthetic";
    synth->add_option("--count", synth_cfg.count, "creatives");
    synth->add_option("--width", synth_cfg.width, "image width");
    synth->add_option("--height", synth_cfg.height, "image height");
    synth->add_option("--signal-r2", synth_cfg.signal_r2, "share of score variance explained by the features");
    synth->add_option("--ctr-scale", synth_cfg.ctr_scale, "CTR = scale * logistic(score)");
    synth->add_option("--impressions", synth_cfg.impressions, "impressions per creative");
    synth->add_option("--max-characters", synth_cfg.max_characters, "longest caption");
    synth->add_option("--out", synth_out, "output directory");

    // extract
    auto* extract = app.add_subcommand("extract", "extract features for a manifest");
    DatasetSpec dataset;
    ExtractFlags extract_flags;
    std::string features_out = "features.csv";
    extract->add_option("--manifest", dataset.manifest, "manifest CSV")->required();
    extract->add_option("--width", dataset.width, "keep only this width (0: any)");
    extract->add_option("--height", dataset.height, "keep only this height (0: any)");
    extract->add_option("--min-impressions", dataset.min_impressions, "minimum impressions");
    extract->add_option("--category", dataset.category, "keep only this category");
    extract->add_option("--out", features_out, "feature matrix CSV");
    extract_flags.add(extract);

    // train
    auto* train = app.add_subcommand("train", "fit one model on feature matrices");
    std::vector<std::string> feature_files;
    std::string model_name = "CLasso";
    std::string model_out = "model.json";
    TrainFlags train_flags;
    train->add_option("--features", feature_files, "feature matrix CSV files")->required();
    train->add_option("--model", model_name, "LR, CLasso, SVR, Random or CM");
    double fixed_lambda = -1.0;
    train->add_option("--lambda", fixed_lambda, "C-Lasso lambda (default: cross-validated)");
    train->add_option("--out", model_out, "model artifact");
    train_flags.add(train);

    // evaluate / report share protocol flags
    EvalConfig eval_cfg;
    std::vector<std::string> model_names = {"LR", "CLasso", "SVR", "CM"};
    std::string out_dir = "run";
    auto add_eval = [&](CLI::App* sub) {
        sub->add_option("--features", feature_files, "feature matrix CSV files")->required();
        sub->add_option("--runs", eval_cfg.plan.runs, "random splits");
        sub->add_option("--train-fraction", eval_cfg.plan.train_fraction, "training share per split");
        sub->add_option("--models", model_names, "models besides Random")->delimiter(',');
        sub->add_flag("--tune-every-run", eval_cfg.tune_every_run, "cross-validate on every split");
        sub->add_option("--class-fraction", eval_cfg.class_fraction, "top/bottom training share for the classifier");
        sub->add_flag("--no-classification{false}", eval_cfg.classification, "skip the extreme-CTR classifier");
        sub->add_option("--out", out_dir, "output directory");
        train_flags.add(sub);
    };
    auto* evaluate_cmd = app.add_subcommand("evaluate", "repeated-split evaluation of all models");
    add_eval(evaluate_cmd);

    SelectionConfig sel_cfg;
    auto add_select = [&](CLI::App* sub) {
        sub->add_option("--bins", sel_cfg.spec.bins, "discretization bins");
        sub->add_option("--threshold", sel_cfg.threshold, "average-NMI merge threshold");
        sub->add_option("--top-k", sel_cfg.top_k, "clusters to select");
        sub->add_option("--ffs-folds", sel_cfg.ffs.folds, "forward selection CV folds");
        sub->add_option("--ridge", sel_cfg.ffs.ridge, "forward selection ridge penalty");
        sub->add_option("--null-permutations", sel_cfg.ffs.null_permutations, "shuffled-target runs for the null band");
    };
    auto* select = app.add_subcommand("select", "correlation, NMI clustering and forward selection");
    select->add_option("--features", feature_files, "feature matrix CSV files")->required();
    select->add_option("--out", out_dir, "output directory");
    add_select(select);

    auto* report = app.add_subcommand("report", "full protocol: evaluation, selection, models and plots");
    add_eval(report);
    add_select(report);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    spdlog::set_level(spdlog::level::from_str(log_level));

    try {
        if (synth->parsed()) {
            synth_cfg.seed = seed;
            synth_cfg.workers = workers;
            const auto items = generate_synthetic(synth_cfg);
            write_synthetic_corpus(items, synth_cfg, synth_out);
            spdlog::info("wrote {} creatives to {}", items.size(), synth_out);
            return kExitOk;
        }
        if (extract->parsed()) {
            std::vector<IngestSkip> skipped;
            const auto records = ingest(dataset, &skipped);
            const FeatureExtractor extractor(extract_flags.cfg);
            const FeatureMatrix fm = extract_all(records, extractor, workers);
            const fs::path parent = fs::path(features_out).parent_path();
            if (!parent.empty()) fs::create_directories(parent);
            write_feature_matrix(fm, features_out);
            spdlog::info("{} rows ({} failed, {} skipped at ingest) -> {}", fm.rows.size(),
                         fm.rows.size() - fm.ok_rows(), skipped.size(), features_out);
            return kExitOk;
        }
        if (train->parsed()) {
            const FeatureMatrix fm = load_matrices(feature_files);
            const DesignMatrix dm = fm.design();
            const TrainConfig tc = train_flags.resolve(seed);
            ModelArtifact m;
            switch (model_kind_from_string(model_name)) {
                case ModelKind::LR: m = fit_linear(dm); break;
                case ModelKind::CLasso:
                    m = fixed_lambda >= 0.0 ? fit_classo_fixed(dm, tc, fixed_lambda) : fit_classo(dm, tc);
                    break;
                case ModelKind::SVR: m = fit_svr(dm, tc); break;
                case ModelKind::Random: m = fit_random(dm, seed); break;
                case ModelKind::ConstantMean: m = fit_constant_mean(dm); break;
            }
            m.fingerprint = fm.fingerprint;
            save_model(m, model_out);
            spdlog::info("{} model on {} rows -> {}", to_string(m.kind), dm.targets.size(), model_out);
            if (!m.converged) {
                spdlog::warn("solver stopped at its iteration cap");
                return kExitConvergence;
            }
            return kExitOk;
        }
        if (evaluate_cmd->parsed() || report->parsed()) {
            const FeatureMatrix fm = load_matrices(feature_files);
            eval_cfg.plan.master_seed = seed;
            eval_cfg.train = train_flags.resolve(seed);
            eval_cfg.models = parse_models(model_names);
            eval_cfg.workers = workers;
            bool nonconverged = false;
            if (report->parsed()) {
                ExperimentConfig ec;
                ec.eval = eval_cfg;
                ec.selection = sel_cfg;
                ec.selection.seed = seed;
                ec.selection.workers = workers;
                const ExperimentResult res = run_experiment(fm, ec, out_dir);
                nonconverged = res.eval.any_nonconvergence();
                for (const auto& m : res.models) nonconverged = nonconverged || !m.converged;
                std::fputs(res.eval.to_text().c_str(), stdout);
                std::fputs("\n", stdout);
                std::fputs(res.selection.to_table().c_str(), stdout);
            } else {
                EvalReport rep = evaluate(fm.design(), eval_cfg);
                rep.fingerprint = fm.fingerprint;
                write_eval_outputs(rep, out_dir);
                nonconverged = rep.any_nonconvergence();
                std::fputs(rep.to_text().c_str(), stdout);
            }
            if (nonconverged) {
                spdlog::warn("some fits stopped at their iteration cap");
                return kExitConvergence;
            }
            return kExitOk;
        }
        if (select->parsed()) {
            const FeatureMatrix fm = load_matrices(feature_files);
            sel_cfg.seed = seed;
            sel_cfg.workers = workers;
            SelectionReport rep = select_features(fm.design(), sel_cfg);
            rep.fingerprint = fm.fingerprint;
            fs::create_directories(out_dir);
            write_text_file((fs::path(out_dir) / "selection.txt").string(), rep.to_table());
            write_text_file((fs::path(out_dir) / "features.csv").string(), rep.to_csv());
            std::fputs(rep.to_table().c_str(), stdout);
            return kExitOk;
        }
    } catch (const Error& e) {
        spdlog::error("{}", e.what());
        return e.code() == ErrorCode::NonConvergence ? kExitConvergence : kExitData;
    } catch (const std::exception& e) {
        spdlog::error("{}", e.what());
        return kExitData;
    }
    return kExitUsage;
}
