#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "ctrvis/error.hpp"
#include "ctrvis/evaluation.hpp"
#include "oracle.hpp"
#include "support.hpp"

using namespace ctrvis;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> v) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) out(i++) = x;
    return out;
}

DesignMatrix small_problem(int n, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> z(0.0, 1.0);
    DesignMatrix dm;
    dm.features.resize(n, 3);
    dm.targets.resize(n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < 3; ++j) dm.features(i, j) = z(gen);
        dm.targets(i) = std::clamp(0.5 + 0.1 * dm.features(i, 0) - 0.05 * dm.features(i, 2) + 0.02 * z(gen), 0.0, 1.0);
    }
    dm.names = {"a", "b", "c"};
    return dm;
}

EvalConfig quick_config(int runs) {
    EvalConfig cfg;
    cfg.plan.runs = runs;
    cfg.train.lambda_grid = {1e-3, 1e-1};
    cfg.train.svr_c = {1.0};
    cfg.train.svr_epsilon = {1e-2};
    cfg.train.rbf_gamma = {0.25};
    cfg.train.folds = 3;
    cfg.workers = 1;
    return cfg;
}

}  // namespace

TEST(Mse, Examples) {
    EXPECT_EQ(mse(vec({1, 2, 3}), vec({1, 2, 3})), 0.0);
    EXPECT_DOUBLE_EQ(mse(vec({0, 0}), vec({1, 3})), 5.0);
    EXPECT_THROW(mse(vec({1}), vec({1, 2})), Error);
}

TEST(Mse, MatchesOracle) {
    std::mt19937_64 gen(1);
    std::uniform_real_distribution<double> u(0, 1);
    for (int t = 0; t < 20; ++t) {
        Eigen::VectorXd a(17), b(17);
        for (int i = 0; i < 17; ++i) {
            a(i) = u(gen);
            b(i) = u(gen);
        }
        const std::vector<double> av(a.data(), a.data() + 17), bv(b.data(), b.data() + 17);
        EXPECT_NEAR(mse(a, b), oracle::mse_sum(av, bv) / 17.0, 1e-15);
    }
}

TEST(DeltaGrid, TwentyFiveSteps) {
    const auto g = delta_grid();
    ASSERT_EQ(g.size(), 25u);
    EXPECT_DOUBLE_EQ(g.front(), 0.02);
    EXPECT_DOUBLE_EQ(g.back(), 0.5);
}

TEST(Rank, PerfectReversedAndConstant) {
    const Eigen::VectorXd y = vec({0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0});
    EXPECT_EQ(rank_preservation(y, y, 0.2), 1.0);
    EXPECT_EQ(rank_preservation(y, -y, 0.2), 0.0);
    EXPECT_EQ(rank_preservation(y, Eigen::VectorXd::Constant(10, 0.3), 0.5), 0.5);
}

TEST(Rank, CountsPairsBetweenExtremes) {
    // n = 10, delta = 0.2 -> k = 2 lowest {0, 1}, 2 highest {8, 9}.
    const Eigen::VectorXd y = vec({0, 1, 2, 3, 4, 5, 6, 7, 8, 9});
    Eigen::VectorXd p = y;
    p(0) = 8.5;  // beats row 8 but not row 9
    EXPECT_DOUBLE_EQ(rank_preservation(y, p, 0.2), 3.0 / 4.0);
    p(0) = 8.0;  // tie with row 8 counts one half
    EXPECT_DOUBLE_EQ(rank_preservation(y, p, 0.2), 3.5 / 4.0);
}

TEST(Rank, InvariantUnderMonotoneMaps) {
    std::mt19937_64 gen(2);
    std::uniform_real_distribution<double> u(0, 1);
    for (int t = 0; t < 20; ++t) {
        Eigen::VectorXd y(50), p(50);
        for (int i = 0; i < 50; ++i) {
            y(i) = u(gen);
            p(i) = u(gen);
        }
        const Eigen::VectorXd q = p.array().exp() * 3.0 + 1.0;
        for (double d : delta_grid()) EXPECT_EQ(rank_preservation(y, p, d), rank_preservation(y, q, d));
    }
}

TEST(Rank, EmptyExtremesThrow) { EXPECT_THROW(rank_preservation(vec({1, 2, 3}), vec({1, 2, 3}), 0.2), Error); }

TEST(SplitPlan, SizesAndDeterminism) {
    SplitPlan plan;
    const Split s = plan.split(101, 3);
    EXPECT_EQ(s.train.size(), 81u);
    EXPECT_EQ(s.test.size(), 20u);
    std::vector<std::size_t> all = s.train;
    all.insert(all.end(), s.test.begin(), s.test.end());
    std::sort(all.begin(), all.end());
    for (std::size_t i = 0; i < all.size(); ++i) EXPECT_EQ(all[i], i);
    EXPECT_EQ(plan.split(101, 3).train, s.train);
    EXPECT_NE(plan.split(101, 4).train, s.train);
    plan.train_fraction = 1.0;
    EXPECT_THROW(plan.validate(), Error);
}

TEST(Evaluate, Deterministic) {
    const DesignMatrix dm = small_problem(250, 3);
    const EvalConfig cfg = quick_config(3);
    const EvalReport a = evaluate(dm, cfg), b = evaluate(dm, cfg);
    EXPECT_EQ(a.to_text(), b.to_text());
    for (std::size_t m = 0; m < a.models.size(); ++m) EXPECT_EQ(a.models[m].mse_per_run, b.models[m].mse_per_run);
}

TEST(Evaluate, WorkerCountDoesNotChangeResults) {
    const DesignMatrix dm = small_problem(250, 4);
    EvalConfig cfg = quick_config(4);
    const EvalReport a = evaluate(dm, cfg);
    cfg.workers = 3;
    const EvalReport b = evaluate(dm, cfg);
    EXPECT_EQ(a.to_text(), b.to_text());
}

TEST(Evaluate, ReportShape) {
    const DesignMatrix dm = small_problem(250, 5);
    const EvalReport r = evaluate(dm, quick_config(2));
    ASSERT_EQ(r.models.size(), 5u);
    EXPECT_EQ(r.models[0].kind, ModelKind::Random);
    EXPECT_EQ(r.deltas.size(), 25u);
    EXPECT_EQ(r.class_curve.size(), 25u);
    for (const auto& m : r.models) {
        EXPECT_EQ(m.mse_per_run.size(), 2u);
        EXPECT_EQ(m.rank_curve.size(), 25u);
        for (double v : m.rank_curve) {
            EXPECT_GE(v, 0.0);
            EXPECT_LE(v, 1.0);
        }
    }
    EXPECT_DOUBLE_EQ(r.model(ModelKind::Random).mse_ratio, 1.0);
    EXPECT_GT(r.model(ModelKind::LR).mse_ratio, 1.5);
    EXPECT_DOUBLE_EQ(r.model(ModelKind::ConstantMean).rank_curve[5], 0.5);
    const std::string dir = testing_support::scratch_dir("eval_out").string();
    write_eval_outputs(r, dir);
    EXPECT_TRUE(std::filesystem::exists(dir + "/report.txt"));
}

TEST(Evaluate, RatioGuardFlagsPerfectFits) {
    // Targets exactly linear: LR reaches zero test error.
    DesignMatrix dm = small_problem(250, 6);
    dm.targets = (0.5 + 0.01 * dm.features.col(0).array()).matrix();
    EvalConfig cfg = quick_config(2);
    cfg.models = {ModelKind::LR};
    cfg.classification = false;
    const EvalReport r = evaluate(dm, cfg);
    const ModelEval& lr = r.model(ModelKind::LR);
    EXPECT_EQ(lr.flagged_ratios, 2);
    EXPECT_EQ(lr.ratio_per_run[0], kRatioSentinel);
}

TEST(Evaluate, TooFewRowsThrow) {
    const DesignMatrix dm = small_problem(6, 7);
    EXPECT_THROW(evaluate(dm, quick_config(1)), Error);
}
