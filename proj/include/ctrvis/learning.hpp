#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace ctrvis {

enum class ModelKind { LR, CLasso, SVR, Random, ConstantMean };

std::string to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& s);

/// Per-column z-scoring; zero-variance columns keep scale 1.
struct Standardizer {
    Eigen::VectorXd mean;
    Eigen::VectorXd scale;
    std::vector<bool> constant;  // column had zero variance in training

    static Standardizer fit(const Eigen::MatrixXd& x);
    Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const;
};

struct DesignMatrix {
    Eigen::MatrixXd features;  // n x d, raw
    Eigen::VectorXd targets;   // n
    std::vector<std::string> names;

    /// Throws on non-finite entries, size mismatch or targets outside [0, 1].
    void validate() const;
    DesignMatrix subset(const std::vector<std::size_t>& rows) const;
};

/// log-spaced grid, `count` values from lo to hi inclusive.
std::vector<double> log_grid(double lo, double hi, int count);

struct TrainConfig {
    std::vector<double> lambda_grid = log_grid(1e-4, 1.0, 7);
    std::vector<double> svr_c = {0.1, 1.0, 10.0, 100.0};
    std::vector<double> svr_epsilon = {1e-3, 1e-2};  // in standardized target units
    std::vector<double> rbf_gamma = {0.0625, 0.125, 0.25, 0.5, 1.0, 2.0, 4.0};
    int folds = 5;
    double tolerance = 1e-8;
    int max_iterations = 20000;      // C-Lasso ADMM
    double svm_tolerance = 1e-3;     // SMO KKT gap
    int svm_max_iterations = 10000000;
    bool bounds_from_data = true;
    double y_min = 0.0;
    double y_max = 1.0;
    bool enforce_bounds = true;      // false gives the plain Lasso
    std::uint64_t seed = 1;

    void validate() const;
};

struct ModelArtifact {
    ModelKind kind = ModelKind::ConstantMean;
    Standardizer standardizer;
    // LR / CLasso, in standardized feature space
    Eigen::VectorXd weights;
    double intercept = 0.0;
    double lambda = 0.0;
    double y_min = 0.0;
    double y_max = 1.0;
    bool clip = false;
    // SVR
    Eigen::MatrixXd support;    // standardized training rows with nonzero coefficients
    Eigen::VectorXd dual_coef;
    double svr_bias = 0.0;
    double c = 0.0;
    double epsilon = 0.0;
    double gamma = 0.0;
    double target_mean = 0.0;   // SVR fits (y - target_mean) / target_scale
    double target_scale = 1.0;
    // baselines
    double constant = 0.0;
    std::vector<double> train_targets;
    std::uint64_t seed = 0;
    // diagnostics
    bool converged = true;
    bool rank_deficient = false;
    int iterations = 0;
    std::string fingerprint;    // extraction config of the training features

    /// Weights and intercept mapped back to raw feature units.
    Eigen::VectorXd raw_weights() const;
    double raw_intercept() const;
};

/// Predictions for raw feature rows. Random draws one target per row from
/// a generator seeded with `model.seed`, in row order.
Eigen::VectorXd predict(const ModelArtifact& model, const Eigen::MatrixXd& x);
/// Same for already standardized rows (Random and CM ignore the features).
Eigen::VectorXd predict_standardized(const ModelArtifact& model, const Eigen::MatrixXd& z);

ModelArtifact fit_linear(const DesignMatrix& dm);

struct ClassoOptions {
    double lambda = 0.0;
    double y_min = 0.0;
    double y_max = 1.0;
    bool enforce_bounds = true;
    double tolerance = 1e-8;
    int max_iterations = 20000;
    bool polish = true;
};

struct ClassoSolution {
    Eigen::VectorXd weights;
    double intercept = 0.0;
    double objective = 0.0;
    std::vector<double> trace;  // best feasible objective after each iteration
    int iterations = 0;
    bool converged = true;
};

/// ||Aw + b - y||^2 + lambda ||w||_1 with y_min <= Aw + b <= y_max on every
/// row (when enforced). A is used as given.
ClassoSolution solve_classo(const Eigen::MatrixXd& a, const Eigen::VectorXd& y, const ClassoOptions& opts);
double classo_objective(const Eigen::MatrixXd& a, const Eigen::VectorXd& y, const Eigen::VectorXd& w, double b,
                        double lambda);

/// C-Lasso with lambda fixed.
ModelArtifact fit_classo_fixed(const DesignMatrix& dm, const TrainConfig& cfg, double lambda);
/// C-Lasso with lambda chosen by k-fold cross-validation over cfg.lambda_grid.
ModelArtifact fit_classo(const DesignMatrix& dm, const TrainConfig& cfg);
double select_lambda(const DesignMatrix& dm, const TrainConfig& cfg);

struct SvrParams {
    double c = 1.0;
    double epsilon = 1e-2;
    double gamma = 1.0;
};

ModelArtifact fit_svr_fixed(const DesignMatrix& dm, const TrainConfig& cfg, const SvrParams& params);
ModelArtifact fit_svr(const DesignMatrix& dm, const TrainConfig& cfg);
SvrParams select_svr_params(const DesignMatrix& dm, const TrainConfig& cfg);

ModelArtifact fit_random(const DesignMatrix& dm, std::uint64_t seed);
ModelArtifact fit_constant_mean(const DesignMatrix& dm);

/// Fold id per row: a seeded shuffle dealt round-robin into k folds.
std::vector<int> fold_assignment(std::size_t n, int folds, std::uint64_t seed);

struct SvcParams {
    double c = 1.0;
    double gamma = 1.0;
};

/// RBF C-SVC on standardized features, labels +1 / -1.
struct SvcModel {
    Standardizer standardizer;
    Eigen::MatrixXd support;
    Eigen::VectorXd dual_coef;
    double bias = 0.0;
    double gamma = 1.0;
    double c = 1.0;
    bool converged = true;

    std::vector<int> classify(const Eigen::MatrixXd& x) const;
    Eigen::VectorXd decision(const Eigen::MatrixXd& x) const;
};

SvcModel fit_svc_fixed(const Eigen::MatrixXd& x, const std::vector<int>& labels, const TrainConfig& cfg,
                       const SvcParams& params);
SvcParams select_svc_params(const Eigen::MatrixXd& x, const std::vector<int>& labels, const TrainConfig& cfg);

/// Versioned JSON container.
std::string serialize_model(const ModelArtifact& model);
ModelArtifact deserialize_model(const std::string& text);
void save_model(const ModelArtifact& model, const std::string& path);
ModelArtifact load_model(const std::string& path);

}  // namespace ctrvis
