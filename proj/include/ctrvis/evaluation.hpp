#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "ctrvis/learning.hpp"

namespace ctrvis {

double mse(const Eigen::VectorXd& y_true, const Eigen::VectorXd& y_pred);

/// 0.02, 0.04, ..., 0.50.
std::vector<double> delta_grid();

/// Rows sorted by target ascending, ties by row index.
std::vector<std::size_t> order_by_target(const Eigen::VectorXd& y);

/// Fraction of (low, high) pairs among the k = floor(delta * n) lowest and
/// highest rows by y_true whose predictions are ordered correctly; ties in
/// the predictions count one half.
double rank_preservation(const Eigen::VectorXd& y_true, const Eigen::VectorXd& y_pred, double delta);

/// Ratio guard: denominators below this give kRatioSentinel, flagged.
inline constexpr double kRatioGuard = 1e-12;
inline constexpr double kRatioSentinel = 1e12;

struct Split {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

struct SplitPlan {
    int runs = 200;
    double train_fraction = 0.8;
    std::uint64_t master_seed = 1;

    std::uint64_t run_seed(int run) const;
    /// round(train_fraction * n) rows for training, the rest for testing.
    Split split(std::size_t n, int run) const;
    void validate() const;
};

struct EvalConfig {
    SplitPlan plan;
    TrainConfig train;
    std::vector<ModelKind> models = {ModelKind::LR, ModelKind::CLasso, ModelKind::SVR, ModelKind::ConstantMean};
    bool tune_every_run = false;   // otherwise tune once on run 0's training rows
    double class_fraction = 0.3;   // top and bottom share of training rows for the classifier
    bool classification = true;
    unsigned workers = 0;
};

struct ModelEval {
    ModelKind kind = ModelKind::Random;
    std::vector<double> mse_per_run;
    std::vector<double> ratio_per_run;       // MSE(Random) / MSE(model)
    std::vector<bool> ratio_flag_per_run;    // denominator guarded
    std::vector<std::vector<double>> rank_per_run;  // [run][delta]
    double mean_mse = 0.0;
    double mse_ratio = 0.0;
    int flagged_ratios = 0;
    std::vector<double> rank_curve;          // mean over runs, per delta
    int nonconverged_runs = 0;
};

struct TunedParams {
    double lambda = 0.0;
    SvrParams svr;
    SvcParams svc;
};

struct EvalReport {
    std::uint64_t master_seed = 0;
    int runs = 0;
    double train_fraction = 0.8;
    std::size_t rows = 0;
    std::vector<double> deltas;
    std::vector<ModelEval> models;  // Random first, then the configured models
    std::vector<std::vector<double>> class_per_run;  // [run][delta]
    std::vector<double> class_curve;
    int class_nonconverged_runs = 0;
    TunedParams tuned;               // run 0's values
    double train_target_mean = 0.0; // run 0, metadata
    std::string fingerprint;         // feature extraction config, when known

    const ModelEval& model(ModelKind kind) const;
    bool any_nonconvergence() const;
    std::string to_text() const;
};

TunedParams tune_hyperparameters(const DesignMatrix& train, const EvalConfig& cfg, std::uint64_t seed);

/// Fits `kind` on `train` with the given tuned values (Random uses `seed`).
ModelArtifact fit_model(ModelKind kind, const DesignMatrix& train, const TrainConfig& cfg, const TunedParams& tuned,
                        std::uint64_t seed);

/// Accuracy per delta for one split: classifier on the top/bottom
/// class_fraction of training rows, tested on the k highest/lowest test rows.
std::vector<double> extreme_classification_run(const DesignMatrix& train, const DesignMatrix& test,
                                               const std::vector<double>& deltas, double class_fraction,
                                               const TrainConfig& cfg, const SvcParams& params, bool* converged);

/// The full repeated-split protocol.
EvalReport evaluate(const DesignMatrix& dm, const EvalConfig& cfg);

/// report.txt, CSVs and SVG plots under `dir`.
void write_eval_outputs(const EvalReport& report, const std::string& dir);

}  // namespace ctrvis
