#include "ctrvis/learning.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include <Eigen/Dense>
#include "json.hpp"
#include <spdlog/spdlog.h>

#include "ctrvis/error.hpp"
#include "ctrvis/rng.hpp"
#include "ctrvis/svm.hpp"

namespace ctrvis {

namespace {

constexpr int kModelFormatVersion = 1;

double mse_of(const Eigen::VectorXd& a, const Eigen::VectorXd& b) { return (a - b).squaredNorm() / a.size(); }

Eigen::MatrixXd rows_of(const Eigen::MatrixXd& x, const std::vector<std::size_t>& rows) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), x.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(rows[i]));
    return out;
}

Eigen::VectorXd entries_of(const Eigen::VectorXd& v, const std::vector<std::size_t>& rows) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) out[static_cast<Eigen::Index>(i)] = v[static_cast<Eigen::Index>(rows[i])];
    return out;
}

struct FoldSplit {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

std::vector<FoldSplit> make_folds(std::size_t n, int folds, std::uint64_t seed) {
    const auto ids = fold_assignment(n, folds, seed);
    std::vector<FoldSplit> out(static_cast<std::size_t>(folds));
    for (std::size_t i = 0; i < n; ++i) {
        for (int f = 0; f < folds; ++f) {
            (ids[i] == f ? out[static_cast<std::size_t>(f)].test : out[static_cast<std::size_t>(f)].train).push_back(i);
        }
    }
    return out;
}

std::pair<double, double> bounds_for(const Eigen::VectorXd& y, const TrainConfig& cfg) {
    if (cfg.bounds_from_data) return {y.minCoeff(), y.maxCoeff()};
    return {cfg.y_min, cfg.y_max};
}

Eigen::MatrixXd cross_sqdist(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    Eigen::MatrixXd d(a.rows(), b.rows());
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        for (Eigen::Index j = 0; j < b.rows(); ++j) d(i, j) = (a.row(i) - b.row(j)).squaredNorm();
    }
    return d;
}

}  // namespace

std::string to_string(ModelKind kind) {
    switch (kind) {
        case ModelKind::LR: return "LR";
        case ModelKind::CLasso: return "CLasso";
        case ModelKind::SVR: return "SVR";
        case ModelKind::Random: return "Random";
        case ModelKind::ConstantMean: return "CM";
    }
    return "?";
}

ModelKind model_kind_from_string(const std::string& s) {
    for (ModelKind k : {ModelKind::LR, ModelKind::CLasso, ModelKind::SVR, ModelKind::Random, ModelKind::ConstantMean}) {
        if (to_string(k) == s) return k;
    }
    throw Error(ErrorCode::InvalidArgument, "unknown model kind: " + s);
}

std::vector<double> log_grid(double lo, double hi, int count) {
    if (count == 1) return {lo};
    std::vector<double> out;
    const double a = std::log10(lo), b = std::log10(hi);
    for (int i = 0; i < count; ++i) out.push_back(std::pow(10.0, a + (b - a) * i / (count - 1)));
    out.front() = lo;
    out.back() = hi;
    return out;
}

Standardizer Standardizer::fit(const Eigen::MatrixXd& x) {
    Standardizer s;
    const auto n = static_cast<double>(x.rows());
    s.mean = x.colwise().mean().transpose();
    s.scale.resize(x.cols());
    s.constant.assign(static_cast<std::size_t>(x.cols()), false);
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        const double sd = std::sqrt((x.col(j).array() - s.mean[j]).square().sum() / n);
        if (!(sd > 1e-12 * std::max(1.0, std::abs(s.mean[j])))) {
            s.scale[j] = 1.0;
            s.constant[static_cast<std::size_t>(j)] = true;
        } else {
            s.scale[j] = sd;
        }
    }
    return s;
}

Eigen::MatrixXd Standardizer::apply(const Eigen::MatrixXd& x) const {
    if (x.cols() != mean.size()) throw Error(ErrorCode::DimensionMismatch, "feature count differs from training");
    Eigen::MatrixXd z = (x.rowwise() - mean.transpose()).array().rowwise() / scale.transpose().array();
    for (Eigen::Index j = 0; j < z.cols(); ++j) {
        if (constant[static_cast<std::size_t>(j)]) z.col(j).setZero();
    }
    return z;
}

void DesignMatrix::validate() const {
    if (features.rows() != targets.size()) throw Error(ErrorCode::LengthMismatch, "feature rows and targets differ");
    if (!features.allFinite() || !targets.allFinite()) {
        throw Error(ErrorCode::InvalidArgument, "design matrix has non-finite entries");
    }
    if (targets.size() > 0 && (targets.minCoeff() < 0.0 || targets.maxCoeff() > 1.0)) {
        throw Error(ErrorCode::InvalidArgument, "targets must lie in [0, 1]");
    }
    if (!names.empty() && static_cast<Eigen::Index>(names.size()) != features.cols()) {
        throw Error(ErrorCode::DimensionMismatch, "feature names do not match columns");
    }
}

DesignMatrix DesignMatrix::subset(const std::vector<std::size_t>& rows) const {
    return {rows_of(features, rows), entries_of(targets, rows), names};
}

void TrainConfig::validate() const {
    if (lambda_grid.empty() || svr_c.empty() || svr_epsilon.empty() || rbf_gamma.empty()) {
        throw Error(ErrorCode::InvalidArgument, "hyperparameter grids must be non-empty");
    }
    if (!(tolerance > 0.0) || !(svm_tolerance > 0.0)) throw Error(ErrorCode::InvalidArgument, "tolerance must be > 0");
    if (folds < 2) throw Error(ErrorCode::InvalidArgument, "need at least 2 folds");
    if (!bounds_from_data && y_min > y_max) throw Error(ErrorCode::InvalidArgument, "y_min exceeds y_max");
}

std::vector<int> fold_assignment(std::size_t n, int folds, std::uint64_t seed) {
    Rng gen(seed);
    const auto perm = permutation(n, gen);
    std::vector<int> ids(n);
    for (std::size_t k = 0; k < n; ++k) ids[perm[k]] = static_cast<int>(k % static_cast<std::size_t>(folds));
    return ids;
}

Eigen::VectorXd ModelArtifact::raw_weights() const {
    if (weights.size() == 0) return {};
    return weights.cwiseQuotient(standardizer.scale);
}

double ModelArtifact::raw_intercept() const {
    if (weights.size() == 0) return intercept;
    return intercept - raw_weights().dot(standardizer.mean);
}

Eigen::VectorXd predict_standardized(const ModelArtifact& model, const Eigen::MatrixXd& z) {
    const Eigen::Index n = z.rows();
    switch (model.kind) {
        case ModelKind::LR:
        case ModelKind::CLasso: {
            if (z.cols() != model.weights.size()) throw Error(ErrorCode::DimensionMismatch, "feature count");
            Eigen::VectorXd p = (z * model.weights).array() + model.intercept;
            if (model.clip) p = p.cwiseMax(model.y_min).cwiseMin(model.y_max);
            return p;
        }
        case ModelKind::SVR: {
            if (z.cols() != model.support.cols()) throw Error(ErrorCode::DimensionMismatch, "feature count");
            Eigen::VectorXd p(n);
            const Eigen::MatrixXd k = rbf_gram(cross_sqdist(z, model.support), model.gamma, z.cols());
            const Eigen::VectorXd f = (k * model.dual_coef).array() + model.svr_bias;
            p = (f.array() * model.target_scale + model.target_mean).matrix();
            return p;
        }
        case ModelKind::Random: {
            Rng gen(model.seed);
            Eigen::VectorXd p(n);
            const auto m = static_cast<std::uint64_t>(model.train_targets.size());
            for (Eigen::Index i = 0; i < n; ++i) p[i] = model.train_targets[uniform_index(gen, m)];
            return p;
        }
        case ModelKind::ConstantMean:
            return Eigen::VectorXd::Constant(n, model.constant);
    }
    return {};
}

Eigen::VectorXd predict(const ModelArtifact& model, const Eigen::MatrixXd& x) {
    if (!x.allFinite()) throw Error(ErrorCode::InvalidArgument, "non-finite feature values");
    if (model.kind == ModelKind::Random || model.kind == ModelKind::ConstantMean) {
        return predict_standardized(model, x);
    }
    return predict_standardized(model, model.standardizer.apply(x));
}

ModelArtifact fit_linear(const DesignMatrix& dm) {
    dm.validate();
    const Eigen::Index n = dm.features.rows(), d = dm.features.cols();
    if (n <= d) throw Error(ErrorCode::InsufficientData, "least squares needs more rows than features");
    ModelArtifact m;
    m.kind = ModelKind::LR;
    m.standardizer = Standardizer::fit(dm.features);
    const Eigen::MatrixXd z = m.standardizer.apply(dm.features);

    std::vector<Eigen::Index> active;
    for (Eigen::Index j = 0; j < d; ++j) {
        if (!m.standardizer.constant[static_cast<std::size_t>(j)]) active.push_back(j);
    }
    const auto k = static_cast<Eigen::Index>(active.size());
    Eigen::MatrixXd a(n, k + 1);
    for (Eigen::Index j = 0; j < k; ++j) a.col(j) = z.col(active[static_cast<std::size_t>(j)]);
    a.col(k).setOnes();

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
    Eigen::VectorXd theta;
    if (qr.rank() < k + 1) {
        m.rank_deficient = true;
        spdlog::debug("collinear features: least squares solved with ridge jitter");
        Eigen::MatrixXd aug = Eigen::MatrixXd::Zero(n + k, k + 1);
        aug.topRows(n) = a;
        aug.bottomLeftCorner(k, k).diagonal().setConstant(std::sqrt(1e-10));
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + k);
        rhs.head(n) = dm.targets;
        theta = aug.colPivHouseholderQr().solve(rhs);
    } else {
        theta = qr.solve(dm.targets);
    }
    m.weights = Eigen::VectorXd::Zero(d);
    for (Eigen::Index j = 0; j < k; ++j) m.weights[active[static_cast<std::size_t>(j)]] = theta[j];
    m.intercept = theta[k];
    return m;
}

double classo_objective(const Eigen::MatrixXd& a, const Eigen::VectorXd& y, const Eigen::VectorXd& w, double b,
                        double lambda) {
    return ((a * w).array() + b - y.array()).matrix().squaredNorm() + lambda * w.lpNorm<1>();
}

namespace {

ClassoSolution solve_classo_scaled(const Eigen::MatrixXd& a, const Eigen::VectorXd& y, const ClassoOptions& opts) {
    const Eigen::Index n = a.rows(), d = a.cols();
    const double inf = std::numeric_limits<double>::infinity();
    const double lo = opts.enforce_bounds ? opts.y_min : -inf;
    const double hi = opts.enforce_bounds ? opts.y_max : inf;
    if (lo > hi) throw Error(ErrorCode::InvalidArgument, "empty prediction bounds");
    const double lambda = opts.lambda;

    Eigen::MatrixXd m(n, d + 1);
    m.leftCols(d) = a;
    m.col(d).setOnes();
    const Eigen::MatrixXd g = m.transpose() * m;
    const Eigen::VectorXd h = m.transpose() * y;

    // Anchor: constant prediction, always feasible.
    Eigen::VectorXd anchor = Eigen::VectorXd::Zero(d + 1);
    anchor[d] = std::clamp(y.mean(), lo, hi);

    auto objective = [&](const Eigen::VectorXd& th) {
        return ((m * th) - y).squaredNorm() + lambda * th.head(d).lpNorm<1>();
    };

    ClassoSolution sol;
    Eigen::VectorXd best = anchor;
    double best_obj = objective(anchor);

    // Pull a candidate back toward the anchor until every prediction is in bounds.
    auto consider = [&](const Eigen::VectorXd& cand) {
        const Eigen::VectorXd p = m * cand;
        const double pa = anchor[d];
        double t = 1.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            if (p[i] > hi) t = std::min(t, (hi - pa) / (p[i] - pa));
            if (p[i] < lo) t = std::min(t, (lo - pa) / (p[i] - pa));
        }
        t = std::max(0.0, t);
        const Eigen::VectorXd th = anchor + t * (cand - anchor);
        const double f = objective(th);
        if (f < best_obj) {
            best_obj = f;
            best = th;
        }
    };

    double rho = std::max(1e-8, g.trace() / static_cast<double>(d + 1));
    auto factor = [&](double r) {
        Eigen::MatrixXd k = (2.0 + r) * g;
        k.diagonal().head(d).array() += r;
        return Eigen::LLT<Eigen::MatrixXd>(k);
    };
    Eigen::LLT<Eigen::MatrixXd> llt = factor(rho);

    const double tol = opts.tolerance;
    const double kkt_scale = 2.0 * (m.transpose() * y).cwiseAbs().maxCoeff() + lambda + 1e-300;
    // Active-set refinement started from an ADMM iterate: solve exactly with
    // the support of `w` free (signs fixed) and the bound rows of `zz` held as
    // equalities, then repair the worst KKT violation and repeat. `certified`
    // is set only when every KKT condition holds at the returned point.
    auto polish_at = [&](const Eigen::VectorXd& w, const Eigen::VectorXd& zz, Eigen::VectorXd& th, bool& certified) {
        certified = false;
        std::vector<Eigen::Index> support;
        std::vector<double> sign;
        for (Eigen::Index j = 0; j < d; ++j) {
            if (w[j] != 0.0 && a.col(j).squaredNorm() > 0.0) {
                support.push_back(j);
                sign.push_back(w[j] > 0 ? 1.0 : -1.0);
            }
        }
        std::vector<Eigen::Index> active;
        std::vector<double> bound;
        if (opts.enforce_bounds) {
            for (Eigen::Index i = 0; i < n; ++i) {
                if (zz[i] == lo || zz[i] == hi) {
                    active.push_back(i);
                    bound.push_back(zz[i]);
                }
            }
        }
        const double ktol = std::max(tol, 1e-12) * kkt_scale;
        const double ftol = std::max(tol, 1e-12) * std::max(1.0, std::max(std::abs(lo), std::abs(hi)));
        const int max_steps = 3 * static_cast<int>(d + 1) + 10;
        bool have = false;
        for (int step = 0; step < max_steps; ++step) {
            const auto k = static_cast<Eigen::Index>(support.size()) + 1;
            const auto e = static_cast<Eigen::Index>(active.size());
            if (e > k) return have;
            Eigen::MatrixXd ms(n, k);
            for (Eigen::Index j = 0; j + 1 < k; ++j) ms.col(j) = a.col(support[static_cast<std::size_t>(j)]);
            ms.col(k - 1).setOnes();
            Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(k + e, k + e);
            kkt.topLeftCorner(k, k) = 2.0 * ms.transpose() * ms;
            Eigen::VectorXd rhs(k + e);
            rhs.head(k) = 2.0 * ms.transpose() * y;
            for (Eigen::Index j = 0; j + 1 < k; ++j) rhs[j] -= lambda * sign[static_cast<std::size_t>(j)];
            for (Eigen::Index r = 0; r < e; ++r) {
                const Eigen::Index row = active[static_cast<std::size_t>(r)];
                kkt.block(k + r, 0, 1, k) = ms.row(row);
                kkt.block(0, k + r, k, 1) = ms.row(row).transpose();
                rhs[k + r] = bound[static_cast<std::size_t>(r)];
            }
            const Eigen::VectorXd solved = kkt.completeOrthogonalDecomposition().solve(rhs);
            if (!solved.allFinite()) return have;
            th = Eigen::VectorXd::Zero(d + 1);
            for (Eigen::Index j = 0; j + 1 < k; ++j) th[support[static_cast<std::size_t>(j)]] = solved[j];
            th[d] = solved[k - 1];
            have = true;

            // 1. a coefficient crossed zero: drop it
            Eigen::Index worst = -1;
            double worst_v = 0.0;
            for (Eigen::Index j = 0; j + 1 < k; ++j) {
                const double t = -solved[j] * sign[static_cast<std::size_t>(j)];
                if (t >= 0.0 && (worst < 0 || t > worst_v)) {
                    worst = j;
                    worst_v = t;
                }
            }
            if (worst >= 0) {
                support.erase(support.begin() + worst);
                sign.erase(sign.begin() + worst);
                continue;
            }
            // 2. a bound multiplier pulls the wrong way: release the row
            Eigen::VectorXd mult = Eigen::VectorXd::Zero(n);
            worst = -1;
            worst_v = ktol;
            for (Eigen::Index r = 0; r < e; ++r) {
                const double nu = solved[k + r];
                const double wrong = bound[static_cast<std::size_t>(r)] == hi && lo != hi ? -nu
                                     : bound[static_cast<std::size_t>(r)] == lo && lo != hi ? nu
                                                                                             : 0.0;
                if (wrong > worst_v) {
                    worst = r;
                    worst_v = wrong;
                }
                mult[active[static_cast<std::size_t>(r)]] = nu;
            }
            if (worst >= 0) {
                active.erase(active.begin() + worst);
                bound.erase(bound.begin() + worst);
                continue;
            }
            // 3. a prediction leaves the box: pin the worst row to its bound
            const Eigen::VectorXd p = m * th;
            worst = -1;
            worst_v = ftol;
            for (Eigen::Index i = 0; i < n; ++i) {
                const double out = std::max(p[i] - hi, lo - p[i]);
                if (out > worst_v) {
                    worst = i;
                    worst_v = out;
                }
            }
            if (worst >= 0) {
                active.push_back(worst);
                bound.push_back(p[worst] > hi ? hi : lo);
                continue;
            }
            // 4. the subgradient bound fails off the support: free the worst feature
            const Eigen::VectorXd grad = 2.0 * (m.transpose() * (p - y)) + m.transpose() * mult;
            std::vector<bool> on(static_cast<std::size_t>(d), false);
            for (auto j : support) on[static_cast<std::size_t>(j)] = true;
            worst = -1;
            worst_v = ktol;
            for (Eigen::Index j = 0; j < d; ++j) {
                if (on[static_cast<std::size_t>(j)] || a.col(j).squaredNorm() == 0.0) continue;
                const double excess = std::abs(grad[j]) - lambda;
                if (excess > worst_v) {
                    worst = j;
                    worst_v = excess;
                }
            }
            if (worst >= 0) {
                support.push_back(worst);
                sign.push_back(grad[worst] > 0 ? -1.0 : 1.0);
                continue;
            }
            certified = true;
            return true;
        }
        return have;
    };
    const double slack = 1e-12 * std::max(1.0, std::max(std::abs(lo), std::abs(hi)));
    // Accepts a polished point if it is feasible and improves the incumbent.
    auto accept_polished = [&](const Eigen::VectorXd& th) {
        const Eigen::VectorXd p = m * th;
        const bool feasible = !opts.enforce_bounds || (p.minCoeff() >= lo - slack && p.maxCoeff() <= hi + slack);
        if (!feasible) return false;
        const double f = objective(th);
        if (f < best_obj) {
            best_obj = f;
            best = th;
        }
        return true;
    };
    constexpr int kCertifyEvery = 10;

    Eigen::VectorXd theta = anchor;
    Eigen::VectorXd v = Eigen::VectorXd::Zero(d), u1 = Eigen::VectorXd::Zero(d);
    Eigen::VectorXd z = m * theta, u2 = Eigen::VectorXd::Zero(n);
    sol.converged = false;
    int it = 0;
    for (; it < opts.max_iterations; ++it) {
        Eigen::VectorXd rhs = 2.0 * h + rho * (m.transpose() * (z - u2));
        rhs.head(d) += rho * (v - u1);
        theta = llt.solve(rhs);
        const Eigen::VectorXd w = theta.head(d);
        const Eigen::VectorXd p = m * theta;
        const Eigen::VectorXd v_old = v, z_old = z;
        const Eigen::VectorXd wv = w + u1;
        const double kappa = lambda / rho;
        v = wv.unaryExpr([kappa](double s) { return s > kappa ? s - kappa : (s < -kappa ? s + kappa : 0.0); });
        z = (p + u2).cwiseMax(lo).cwiseMin(hi);
        u1 += w - v;
        u2 += p - z;

        Eigen::VectorXd cand = theta;
        cand.head(d) = v;
        consider(cand);

        bool certified = false;
        if (opts.polish && (it + 1) % kCertifyEvery == 0) {
            Eigen::VectorXd th;
            if (polish_at(v, z, th, certified) && certified) certified = accept_polished(th);
        }
        sol.trace.push_back(best_obj);
        if (certified) {
            sol.converged = true;
            ++it;
            break;
        }

        const double r_norm = std::sqrt((w - v).squaredNorm() + (p - z).squaredNorm());
        Eigen::VectorXd dual = m.transpose() * (z - z_old);
        dual.head(d) += v - v_old;
        const double s_norm = rho * dual.norm();
        const double eps_pri = std::sqrt(static_cast<double>(d + n)) * tol +
                               tol * std::max(std::sqrt(w.squaredNorm() + p.squaredNorm()),
                                              std::sqrt(v.squaredNorm() + z.squaredNorm()));
        Eigen::VectorXd ut = m.transpose() * u2;
        ut.head(d) += u1;
        const double eps_dual = std::sqrt(static_cast<double>(d + 1)) * tol + tol * rho * ut.norm();
        if (r_norm <= eps_pri && s_norm <= eps_dual) {
            sol.converged = true;
            ++it;
            break;
        }
        if (r_norm > 10.0 * s_norm) {
            rho *= 2.0;
            u1 /= 2.0;
            u2 /= 2.0;
            llt = factor(rho);
        } else if (s_norm > 10.0 * r_norm) {
            rho /= 2.0;
            u1 *= 2.0;
            u2 *= 2.0;
            llt = factor(rho);
        }
    }
    sol.iterations = it;

    if (opts.polish) {
        Eigen::VectorXd th;
        bool certified = false;
        if (polish_at(v, z, th, certified)) accept_polished(th);
        sol.trace.push_back(best_obj);
    }

    sol.weights = best.head(d);
    sol.intercept = best[d];
    sol.objective = best_obj;
    return sol;
}

}  // namespace

ClassoSolution solve_classo(const Eigen::MatrixXd& a, const Eigen::VectorXd& y, const ClassoOptions& opts) {
    if (y.size() != a.rows()) throw Error(ErrorCode::LengthMismatch, "targets and rows differ");
    if (a.rows() == 0) throw Error(ErrorCode::InsufficientData, "no training rows");
    // Solve with unit-spread targets so the stopping thresholds do not depend
    // on the CTR scale; lambda scales with the targets, the objective with
    // their square.
    double ys = std::sqrt((y.array() - y.mean()).square().mean());
    if (!(ys > 0.0)) ys = std::max(1.0, y.cwiseAbs().maxCoeff());
    ClassoOptions scaled = opts;
    scaled.lambda = opts.lambda / ys;
    scaled.y_min = opts.y_min / ys;
    scaled.y_max = opts.y_max / ys;
    ClassoSolution sol = solve_classo_scaled(a, y / ys, scaled);
    sol.weights *= ys;
    sol.intercept *= ys;
    sol.objective *= ys * ys;
    for (double& t : sol.trace) t *= ys * ys;
    if (!sol.converged) spdlog::debug("C-Lasso stopped at the iteration cap (lambda {})", opts.lambda);
    return sol;
}

ModelArtifact fit_classo_fixed(const DesignMatrix& dm, const TrainConfig& cfg, double lambda) {
    dm.validate();
    ModelArtifact m;
    m.kind = ModelKind::CLasso;
    m.standardizer = Standardizer::fit(dm.features);
    const auto [lo, hi] = bounds_for(dm.targets, cfg);
    ClassoOptions opts;
    opts.lambda = lambda;
    opts.y_min = lo;
    opts.y_max = hi;
    opts.enforce_bounds = cfg.enforce_bounds;
    opts.tolerance = cfg.tolerance;
    opts.max_iterations = cfg.max_iterations;
    const ClassoSolution sol = solve_classo(m.standardizer.apply(dm.features), dm.targets, opts);
    m.weights = sol.weights;
    m.intercept = sol.intercept;
    m.lambda = lambda;
    m.y_min = lo;
    m.y_max = hi;
    m.clip = cfg.enforce_bounds;
    m.converged = sol.converged;
    m.iterations = sol.iterations;
    return m;
}

double select_lambda(const DesignMatrix& dm, const TrainConfig& cfg) {
    cfg.validate();
    const auto folds = make_folds(static_cast<std::size_t>(dm.targets.size()), cfg.folds, cfg.seed);
    std::vector<double> err(cfg.lambda_grid.size(), 0.0);
    for (const auto& fold : folds) {
        const DesignMatrix train = dm.subset(fold.train);
        const DesignMatrix test = dm.subset(fold.test);
        for (std::size_t l = 0; l < cfg.lambda_grid.size(); ++l) {
            const ModelArtifact m = fit_classo_fixed(train, cfg, cfg.lambda_grid[l]);
            err[l] += mse_of(predict(m, test.features), test.targets);
        }
    }
    return cfg.lambda_grid[static_cast<std::size_t>(std::min_element(err.begin(), err.end()) - err.begin())];
}

ModelArtifact fit_classo(const DesignMatrix& dm, const TrainConfig& cfg) {
    return fit_classo_fixed(dm, cfg, select_lambda(dm, cfg));
}

ModelArtifact fit_svr_fixed(const DesignMatrix& dm, const TrainConfig& cfg, const SvrParams& params) {
    dm.validate();
    if (dm.targets.size() < 10) throw Error(ErrorCode::InsufficientData, "SVR needs at least 10 rows");
    ModelArtifact m;
    m.kind = ModelKind::SVR;
    m.standardizer = Standardizer::fit(dm.features);
    const Eigen::MatrixXd z = m.standardizer.apply(dm.features);
    m.target_mean = dm.targets.mean();
    const double sd = std::sqrt((dm.targets.array() - m.target_mean).square().mean());
    m.target_scale = sd > 0.0 ? sd : 1.0;
    const Eigen::VectorXd yt = (dm.targets.array() - m.target_mean) / m.target_scale;
    const Eigen::MatrixXd gram = rbf_gram(squared_distances(z), params.gamma, z.cols());
    const SvrFit fit = train_svr(gram, yt, params.c, params.epsilon, cfg.svm_tolerance, cfg.svm_max_iterations);

    std::vector<std::size_t> sv;
    for (std::size_t i = 0; i < fit.coef.size(); ++i) {
        if (fit.coef[i] != 0.0) sv.push_back(i);
    }
    m.support = rows_of(z, sv);
    m.dual_coef.resize(static_cast<Eigen::Index>(sv.size()));
    for (std::size_t i = 0; i < sv.size(); ++i) m.dual_coef[static_cast<Eigen::Index>(i)] = fit.coef[sv[i]];
    if (sv.empty()) m.support.resize(0, z.cols());
    m.svr_bias = fit.bias;
    m.c = params.c;
    m.epsilon = params.epsilon;
    m.gamma = params.gamma;
    m.converged = fit.converged;
    m.iterations = fit.iterations;
    return m;
}

SvrParams select_svr_params(const DesignMatrix& dm, const TrainConfig& cfg) {
    cfg.validate();
    const auto folds = make_folds(static_cast<std::size_t>(dm.targets.size()), cfg.folds, cfg.seed);
    const std::size_t ng = cfg.rbf_gamma.size(), nc = cfg.svr_c.size(), ne = cfg.svr_epsilon.size();
    std::vector<double> err(ng * nc * ne, 0.0);
    for (const auto& fold : folds) {
        const DesignMatrix train = dm.subset(fold.train);
        const DesignMatrix test = dm.subset(fold.test);
        const Standardizer st = Standardizer::fit(train.features);
        const Eigen::MatrixXd ztr = st.apply(train.features), zte = st.apply(test.features);
        const double mean = train.targets.mean();
        double sd = std::sqrt((train.targets.array() - mean).square().mean());
        if (!(sd > 0.0)) sd = 1.0;
        const Eigen::VectorXd yt = (train.targets.array() - mean) / sd;
        const Eigen::MatrixXd dtr = squared_distances(ztr), dte = cross_sqdist(zte, ztr);
        for (std::size_t gi = 0; gi < ng; ++gi) {
            const Eigen::MatrixXd gram = rbf_gram(dtr, cfg.rbf_gamma[gi], ztr.cols());
            const Eigen::MatrixXd cross = rbf_gram(dte, cfg.rbf_gamma[gi], ztr.cols());
            for (std::size_t ci = 0; ci < nc; ++ci) {
                for (std::size_t ei = 0; ei < ne; ++ei) {
                    const SvrFit fit = train_svr(gram, yt, cfg.svr_c[ci], cfg.svr_epsilon[ei], cfg.svm_tolerance,
                                                 cfg.svm_max_iterations);
                    const Eigen::Map<const Eigen::VectorXd> coef(fit.coef.data(), static_cast<Eigen::Index>(fit.coef.size()));
                    const Eigen::VectorXd pred = ((cross * coef).array() + fit.bias) * sd + mean;
                    err[(ci * ne + ei) * ng + gi] += mse_of(pred, test.targets);
                }
            }
        }
    }
    const std::size_t best = static_cast<std::size_t>(std::min_element(err.begin(), err.end()) - err.begin());
    SvrParams p;
    p.gamma = cfg.rbf_gamma[best % ng];
    p.epsilon = cfg.svr_epsilon[(best / ng) % ne];
    p.c = cfg.svr_c[best / (ng * ne)];
    return p;
}

ModelArtifact fit_svr(const DesignMatrix& dm, const TrainConfig& cfg) {
    return fit_svr_fixed(dm, cfg, select_svr_params(dm, cfg));
}

ModelArtifact fit_random(const DesignMatrix& dm, std::uint64_t seed) {
    if (dm.targets.size() < 1) throw Error(ErrorCode::InsufficientData, "no training targets");
    ModelArtifact m;
    m.kind = ModelKind::Random;
    m.train_targets.assign(dm.targets.data(), dm.targets.data() + dm.targets.size());
    m.seed = seed;
    return m;
}

ModelArtifact fit_constant_mean(const DesignMatrix& dm) {
    if (dm.targets.size() < 1) throw Error(ErrorCode::InsufficientData, "no training targets");
    ModelArtifact m;
    m.kind = ModelKind::ConstantMean;
    m.constant = dm.targets.mean();
    return m;
}

Eigen::VectorXd SvcModel::decision(const Eigen::MatrixXd& x) const {
    const Eigen::MatrixXd z = standardizer.apply(x);
    if (support.rows() == 0) return Eigen::VectorXd::Constant(x.rows(), bias);
    return (rbf_gram(cross_sqdist(z, support), gamma, z.cols()) * dual_coef).array() + bias;
}

std::vector<int> SvcModel::classify(const Eigen::MatrixXd& x) const {
    const Eigen::VectorXd f = decision(x);
    std::vector<int> out(static_cast<std::size_t>(f.size()));
    for (Eigen::Index i = 0; i < f.size(); ++i) out[static_cast<std::size_t>(i)] = f[i] >= 0.0 ? 1 : -1;
    return out;
}

SvcModel fit_svc_fixed(const Eigen::MatrixXd& x, const std::vector<int>& labels, const TrainConfig& cfg,
                       const SvcParams& params) {
    if (static_cast<Eigen::Index>(labels.size()) != x.rows()) throw Error(ErrorCode::LengthMismatch, "labels");
    SvcModel m;
    m.standardizer = Standardizer::fit(x);
    const Eigen::MatrixXd z = m.standardizer.apply(x);
    const SvcFit fit = train_svc(rbf_gram(squared_distances(z), params.gamma, z.cols()), labels, params.c,
                                 cfg.svm_tolerance, cfg.svm_max_iterations);
    std::vector<std::size_t> sv;
    for (std::size_t i = 0; i < fit.coef.size(); ++i) {
        if (fit.coef[i] != 0.0) sv.push_back(i);
    }
    m.support = rows_of(z, sv);
    if (sv.empty()) m.support.resize(0, z.cols());
    m.dual_coef.resize(static_cast<Eigen::Index>(sv.size()));
    for (std::size_t i = 0; i < sv.size(); ++i) m.dual_coef[static_cast<Eigen::Index>(i)] = fit.coef[sv[i]];
    m.bias = fit.bias;
    m.gamma = params.gamma;
    m.c = params.c;
    m.converged = fit.converged;
    return m;
}

SvcParams select_svc_params(const Eigen::MatrixXd& x, const std::vector<int>& labels, const TrainConfig& cfg) {
    cfg.validate();
    const auto folds = make_folds(labels.size(), cfg.folds, cfg.seed);
    const std::size_t ng = cfg.rbf_gamma.size(), nc = cfg.svr_c.size();
    std::vector<double> correct(ng * nc, 0.0);
    for (const auto& fold : folds) {
        const Eigen::MatrixXd xtr = rows_of(x, fold.train), xte = rows_of(x, fold.test);
        std::vector<int> ltr, lte;
        for (auto i : fold.train) ltr.push_back(labels[i]);
        for (auto i : fold.test) lte.push_back(labels[i]);
        if (std::all_of(ltr.begin(), ltr.end(), [&](int l) { return l == ltr[0]; })) continue;
        const Standardizer st = Standardizer::fit(xtr);
        const Eigen::MatrixXd ztr = st.apply(xtr), zte = st.apply(xte);
        const Eigen::MatrixXd dtr = squared_distances(ztr), dte = cross_sqdist(zte, ztr);
        for (std::size_t gi = 0; gi < ng; ++gi) {
            const Eigen::MatrixXd gram = rbf_gram(dtr, cfg.rbf_gamma[gi], ztr.cols());
            const Eigen::MatrixXd cross = rbf_gram(dte, cfg.rbf_gamma[gi], ztr.cols());
            for (std::size_t ci = 0; ci < nc; ++ci) {
                const SvcFit fit = train_svc(gram, ltr, cfg.svr_c[ci], cfg.svm_tolerance, cfg.svm_max_iterations);
                const Eigen::Map<const Eigen::VectorXd> coef(fit.coef.data(), static_cast<Eigen::Index>(fit.coef.size()));
                const Eigen::VectorXd f = (cross * coef).array() + fit.bias;
                for (Eigen::Index i = 0; i < f.size(); ++i) {
                    if ((f[i] >= 0.0 ? 1 : -1) == lte[static_cast<std::size_t>(i)]) correct[ci * ng + gi] += 1.0;
                }
            }
        }
    }
    const std::size_t best = static_cast<std::size_t>(std::max_element(correct.begin(), correct.end()) - correct.begin());
    return {cfg.svr_c[best / ng], cfg.rbf_gamma[best % ng]};
}

namespace {

nlohmann::json vec_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Eigen::VectorXd json_vec(const nlohmann::json& j) {
    const auto v = j.get<std::vector<double>>();
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

std::string serialize_model(const ModelArtifact& m) {
    nlohmann::json j;
    j["format"] = "ctrvis-model";
    j["version"] = kModelFormatVersion;
    j["kind"] = to_string(m.kind);
    j["standardizer"] = {{"mean", vec_json(m.standardizer.mean)},
                         {"scale", vec_json(m.standardizer.scale)},
                         {"constant", m.standardizer.constant}};
    j["weights"] = vec_json(m.weights);
    j["intercept"] = m.intercept;
    j["lambda"] = m.lambda;
    j["y_min"] = m.y_min;
    j["y_max"] = m.y_max;
    j["clip"] = m.clip;
    nlohmann::json support = nlohmann::json::array();
    for (Eigen::Index i = 0; i < m.support.rows(); ++i) support.push_back(vec_json(m.support.row(i).transpose()));
    j["svr"] = {{"support", support},      {"dual_coef", vec_json(m.dual_coef)}, {"bias", m.svr_bias},
                {"c", m.c},                {"epsilon", m.epsilon},                {"gamma", m.gamma},
                {"target_mean", m.target_mean}, {"target_scale", m.target_scale}, {"dim", m.support.cols()}};
    j["constant"] = m.constant;
    j["train_targets"] = m.train_targets;
    j["seed"] = m.seed;
    j["converged"] = m.converged;
    j["rank_deficient"] = m.rank_deficient;
    j["iterations"] = m.iterations;
    j["fingerprint"] = m.fingerprint;
    return j.dump(1);
}

ModelArtifact deserialize_model(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::CorruptPayload, std::string("model file is not valid JSON: ") + e.what());
    }
    if (j.value("format", "") != "ctrvis-model") throw Error(ErrorCode::CorruptPayload, "not a model file");
    if (j.value("version", 0) != kModelFormatVersion) {
        throw Error(ErrorCode::UnsupportedFormat, "unsupported model format version");
    }
    try {
        ModelArtifact m;
        m.kind = model_kind_from_string(j.at("kind").get<std::string>());
        m.standardizer.mean = json_vec(j.at("standardizer").at("mean"));
        m.standardizer.scale = json_vec(j.at("standardizer").at("scale"));
        m.standardizer.constant = j.at("standardizer").at("constant").get<std::vector<bool>>();
        m.weights = json_vec(j.at("weights"));
        m.intercept = j.at("intercept").get<double>();
        m.lambda = j.at("lambda").get<double>();
        m.y_min = j.at("y_min").get<double>();
        m.y_max = j.at("y_max").get<double>();
        m.clip = j.at("clip").get<bool>();
        const auto& svr = j.at("svr");
        const auto& rows = svr.at("support");
        const auto dim = svr.at("dim").get<Eigen::Index>();
        m.support.resize(static_cast<Eigen::Index>(rows.size()), dim);
        for (std::size_t i = 0; i < rows.size(); ++i) m.support.row(static_cast<Eigen::Index>(i)) = json_vec(rows[i]).transpose();
        m.dual_coef = json_vec(svr.at("dual_coef"));
        m.svr_bias = svr.at("bias").get<double>();
        m.c = svr.at("c").get<double>();
        m.epsilon = svr.at("epsilon").get<double>();
        m.gamma = svr.at("gamma").get<double>();
        m.target_mean = svr.at("target_mean").get<double>();
        m.target_scale = svr.at("target_scale").get<double>();
        m.constant = j.at("constant").get<double>();
        m.train_targets = j.at("train_targets").get<std::vector<double>>();
        m.seed = j.at("seed").get<std::uint64_t>();
        m.converged = j.at("converged").get<bool>();
        m.rank_deficient = j.at("rank_deficient").get<bool>();
        m.iterations = j.at("iterations").get<int>();
        m.fingerprint = j.value("fingerprint", "");
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::CorruptPayload, std::string("malformed model file: ") + e.what());
    }
}

void save_model(const ModelArtifact& model, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
    out << serialize_model(model) << '\n';
}

ModelArtifact load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot read " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return deserialize_model(ss.str());
}

}  // namespace ctrvis
