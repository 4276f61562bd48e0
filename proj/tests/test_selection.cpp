#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "ctrvis/error.hpp"
#include "ctrvis/selection.hpp"
#include "oracle.hpp"

using namespace ctrvis;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> v) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) out(i++) = x;
    return out;
}

Eigen::VectorXd noise(int n, std::mt19937_64& gen) {
    std::normal_distribution<double> z(0.0, 1.0);
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v(i) = z(gen);
    return v;
}

}  // namespace

TEST(Correlation, Examples) {
    const Eigen::VectorXd x = vec({1, 2, 3, 4});
    EXPECT_NEAR(linear_correlation(x, 2 * x), 1.0, 1e-15);
    EXPECT_NEAR(linear_correlation(x, -x), -1.0, 1e-15);
    EXPECT_NEAR(linear_correlation(vec({1, -1, 1, -1}), vec({1, 1, -1, -1})), 0.0, 1e-15);
    try {
        linear_correlation(x, vec({3, 3, 3, 3}));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::ZeroVariance);
    }
}

TEST(Discretize, EqualWidthBins) {
    DiscretizationSpec spec;
    spec.bins = 4;
    const auto codes = discretize(vec({0, 1, 2, 3, 4, 2.5}), spec);
    EXPECT_EQ(codes, (std::vector<int>{0, 1, 2, 3, 3, 2}));
    EXPECT_THROW(discretize(vec({1, 1}), spec), Error);
}

TEST(MutualInformation, FairCoin) {
    DiscretizationSpec spec;
    spec.bins = 2;
    const Eigen::VectorXd x = vec({0, 1, 0, 1, 0, 1, 0, 1});
    EXPECT_NEAR(mutual_information(x, x, spec), std::numbers::ln2, 1e-12);
    EXPECT_NEAR(entropy(x, spec), std::numbers::ln2, 1e-12);
    EXPECT_NEAR(nmi(x, 1 - x.array(), spec), 1.0, 1e-12);
    EXPECT_NEAR(mutual_information(x, vec({0, 0, 1, 1, 0, 0, 1, 1}), spec), 0.0, 1e-12);
}

TEST(MutualInformation, SymmetricAndMatchesOracle) {
    std::mt19937_64 gen(3);
    const DiscretizationSpec spec;
    for (int t = 0; t < 20; ++t) {
        const Eigen::VectorXd x = noise(200, gen);
        const Eigen::VectorXd y = x + noise(200, gen);
        EXPECT_EQ(mutual_information(x, y, spec), mutual_information(y, x, spec));
        EXPECT_EQ(nmi(x, y, spec), nmi(y, x, spec));
        const auto a = discretize(x, spec), b = discretize(y, spec);
        EXPECT_NEAR(mutual_information(x, y, spec), oracle::mutual_information(a, b), 1e-12);
        EXPECT_NEAR(entropy(x, spec), oracle::entropy(a), 1e-12);
        const double v = nmi(x, y, spec);
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, 1.0 + 1e-12);
    }
}

TEST(NmiMatrix, DiagonalAndConstantColumns) {
    std::mt19937_64 gen(4);
    Eigen::MatrixXd x(100, 3);
    x.col(0) = noise(100, gen);
    x.col(1).setConstant(2.0);
    x.col(2) = noise(100, gen);
    const NmiMatrix m = nmi_matrix(x, DiscretizationSpec{});
    EXPECT_TRUE(m.constant[1]);
    for (int i = 0; i < 3; ++i) EXPECT_EQ(m.values(i, i), 1.0);
    EXPECT_EQ(m.values(0, 1), 0.0);
    EXPECT_EQ(m.values, m.values.transpose());
    EXPECT_EQ(nmi_matrix(x, DiscretizationSpec{}, 3).values, m.values);
}

TEST(Clustering, HandExample) {
    Eigen::MatrixXd s(4, 4);
    s << 1, 0.9, 0.1, 0.1,  //
        0.9, 1, 0.3, 0.1,   //
        0.1, 0.3, 1, 0.25,  //
        0.1, 0.1, 0.25, 1;
    const ClusterAssignment c = cluster_by_similarity(s, 0.2);
    // {0,1} first, then {2,3}; {0,1} vs {2,3} mean is 0.15 < 0.2.
    ASSERT_EQ(c.count(), 2u);
    EXPECT_EQ(c.members[0], (std::vector<int>{0, 1}));
    EXPECT_EQ(c.members[1], (std::vector<int>{2, 3}));
    ASSERT_EQ(c.merges.size(), 2u);
    EXPECT_DOUBLE_EQ(c.merges[0].similarity, 0.9);
    EXPECT_DOUBLE_EQ(c.merges[1].similarity, 0.25);
}

TEST(Clustering, ThresholdAboveOneGivesSingletons) {
    std::mt19937_64 gen(5);
    Eigen::MatrixXd x(80, 5);
    for (int j = 0; j < 5; ++j) x.col(j) = noise(80, gen);
    x.col(3) = x.col(0);
    const ClusterAssignment c = cluster_features(x, DiscretizationSpec{}, 1.01);
    EXPECT_EQ(c.count(), 5u);
}

TEST(Clustering, DuplicatesShareACluster) {
    std::mt19937_64 gen(6);
    Eigen::MatrixXd x(150, 6);
    for (int j = 0; j < 6; ++j) x.col(j) = noise(150, gen);
    x.col(4) = 3 * x.col(1).array() + 2;
    x.col(5).setConstant(1.0);
    const ClusterAssignment c = cluster_features(x, DiscretizationSpec{}, 0.2);
    EXPECT_EQ(c.cluster_of[1], c.cluster_of[4]);
    EXPECT_TRUE(c.excluded[5]);
    // Partition: every column exactly once.
    std::vector<int> seen(6, 0);
    for (const auto& m : c.members) {
        for (int col : m) ++seen[static_cast<std::size_t>(col)];
    }
    for (int n : seen) EXPECT_EQ(n, 1);
}

TEST(ForwardSelection, PicksTheDrivingFeature) {
    std::mt19937_64 gen(7);
    const int n = 300;
    Eigen::MatrixXd x(n, 4);
    for (int j = 0; j < 4; ++j) x.col(j) = noise(n, gen);
    const Eigen::VectorXd y = 2.0 * x.col(2) + 0.5 * x.col(0) + 0.3 * noise(n, gen);
    const ClusterAssignment c = cluster_by_similarity(Eigen::MatrixXd::Identity(4, 4), 0.5);
    const FfsResult r = forward_select(x, y, c, 3, FfsConfig{}, 1);
    ASSERT_EQ(r.steps.size(), 3u);
    EXPECT_EQ(r.steps[0].feature, 2);
    EXPECT_EQ(r.steps[1].feature, 0);
    EXPECT_GT(r.steps[1].cv_score, r.steps[0].cv_score);
    EXPECT_TRUE(r.informative);
    EXPECT_LT(r.null_band, r.steps[0].cv_score);
}

TEST(ForwardSelection, ClusterIsRetiredOncePicked) {
    std::mt19937_64 gen(8);
    const int n = 200;
    Eigen::MatrixXd x(n, 3);
    x.col(0) = noise(n, gen);
    x.col(1) = x.col(0) + 0.01 * noise(n, gen);
    x.col(2) = noise(n, gen);
    const Eigen::VectorXd y = x.col(0) + x.col(1) + 0.2 * x.col(2) + 0.1 * noise(n, gen);
    Eigen::MatrixXd s = Eigen::MatrixXd::Identity(3, 3);
    s(0, 1) = s(1, 0) = 0.9;
    const ClusterAssignment c = cluster_by_similarity(s, 0.5);
    const FfsResult r = forward_select(x, y, c, 2, FfsConfig{}, 1);
    ASSERT_EQ(r.steps.size(), 2u);
    EXPECT_NE(r.steps[0].cluster, r.steps[1].cluster);
    EXPECT_EQ(r.steps[1].feature, 2);
}

TEST(SelectFeatures, ReportShapeAndDeterminism) {
    std::mt19937_64 gen(9);
    DesignMatrix dm;
    dm.features.resize(120, 4);
    for (int j = 0; j < 4; ++j) dm.features.col(j) = noise(120, gen);
    dm.features.col(3).setConstant(0.0);
    dm.targets = (0.5 + 0.05 * dm.features.col(1).array()).cwiseMax(0.0).cwiseMin(1.0);
    dm.names = {"f1", "f2", "f3", "f4"};
    SelectionConfig cfg;
    cfg.workers = 1;
    const SelectionReport a = select_features(dm, cfg);
    EXPECT_EQ(a.lc.size(), 4u);
    EXPECT_FALSE(a.defined[3]);
    EXPECT_EQ(a.ffs.steps.front().feature, 1);
    EXPECT_EQ(a.to_table(), select_features(dm, cfg).to_table());
    EXPECT_FALSE(a.to_csv().empty());
}
