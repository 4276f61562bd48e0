#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "ctrvis/learning.hpp"

namespace ctrvis {

/// Equal-width bins between the observed min and max of each variable.
struct DiscretizationSpec {
    int bins = 50;
    void validate() const;
};

/// Bin index per observation. Throws ZeroVariance for a constant variable.
std::vector<int> discretize(const Eigen::Ref<const Eigen::VectorXd>& x, const DiscretizationSpec& spec);

/// Pearson correlation. Throws ZeroVariance if either side is constant.
double linear_correlation(const Eigen::Ref<const Eigen::VectorXd>& x, const Eigen::Ref<const Eigen::VectorXd>& y);

/// Plug-in estimates in nats from bin codes. Terms are summed in sorted
/// order so swapping the arguments gives bit-identical results.
double entropy_of_codes(const std::vector<int>& a, int bins);
double mutual_information_of_codes(const std::vector<int>& a, const std::vector<int>& b, int bins);

double entropy(const Eigen::Ref<const Eigen::VectorXd>& x, const DiscretizationSpec& spec);
double mutual_information(const Eigen::Ref<const Eigen::VectorXd>& x, const Eigen::Ref<const Eigen::VectorXd>& y,
                          const DiscretizationSpec& spec);
/// I(X;Y) / sqrt(H(X) H(Y)). Throws ZeroEntropy if either entropy is zero.
double nmi(const Eigen::Ref<const Eigen::VectorXd>& x, const Eigen::Ref<const Eigen::VectorXd>& y,
           const DiscretizationSpec& spec);

struct NmiMatrix {
    Eigen::MatrixXd values;       // d x d, diagonal 1; rows of constant columns are 0 off the diagonal
    std::vector<bool> constant;   // column had zero variance
};

/// Pairwise NMI between the columns of `x`, pairs spread over `workers` threads.
NmiMatrix nmi_matrix(const Eigen::MatrixXd& x, const DiscretizationSpec& spec, unsigned workers = 0);

struct ClusterMerge {
    int left = 0;        // smallest member of each merged cluster
    int right = 0;
    double similarity = 0.0;
};

struct ClusterAssignment {
    std::vector<int> cluster_of;               // cluster id per column
    std::vector<std::vector<int>> members;     // ascending columns; ids ordered by smallest member
    std::vector<bool> excluded;                // constant columns, kept as singletons
    double threshold = 0.2;
    std::vector<ClusterMerge> merges;

    std::size_t count() const { return members.size(); }
};

/// Average-linkage agglomeration on a similarity matrix: merge the pair with
/// the highest mean pairwise similarity while it is at least `threshold`.
/// Ties go to the pair whose smallest members come first.
ClusterAssignment cluster_by_similarity(const Eigen::MatrixXd& similarity, double threshold,
                                        const std::vector<bool>& excluded = {});
ClusterAssignment cluster_features(const Eigen::MatrixXd& x, const DiscretizationSpec& spec, double threshold = 0.2,
                                   unsigned workers = 0);

struct FfsConfig {
    int folds = 5;
    double ridge = 1e-6;          // on standardized columns, scaled by the training row count
    int null_permutations = 20;   // shuffled-target runs for the null band; 0 disables
};

/// Cross-validated R^2 of a ridge fit on `columns`.
double ridge_cv_score(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const std::vector<int>& columns,
                      const std::vector<int>& fold_of, int folds, double ridge);

struct FfsStep {
    int cluster = 0;
    int feature = 0;     // column index
    double cv_score = 0.0;
};

struct FfsResult {
    std::vector<FfsStep> steps;
    double null_band = 0.0;      // largest first-step score over shuffled targets
    bool informative = true;     // first-step score above the null band
};

/// Greedy forward selection; picking a feature retires its whole cluster.
FfsResult forward_select(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const ClusterAssignment& clusters,
                         int k, const FfsConfig& cfg, std::uint64_t seed);

struct SelectionConfig {
    DiscretizationSpec spec;
    double threshold = 0.2;
    int top_k = 10;              // capped at the number of clusters
    FfsConfig ffs;
    std::uint64_t seed = 1;
    unsigned workers = 0;
};

struct SelectionReport {
    std::vector<std::string> names;
    std::vector<double> lc;           // vs target; 0 and flagged for constant columns
    std::vector<double> mi;           // nats
    std::vector<double> nmi_target;
    std::vector<bool> defined;
    ClusterAssignment clusters;
    FfsResult ffs;
    std::uint64_t seed = 0;
    std::string fingerprint;

    /// Per-feature table plus the ordered cluster list.
    std::string to_table() const;
    std::string to_csv() const;
};

SelectionReport select_features(const DesignMatrix& dm, const SelectionConfig& cfg);

}  // namespace ctrvis
