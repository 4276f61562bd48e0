#include "ctrvis/svm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ctrvis/error.hpp"

namespace ctrvis {

double rbf_kernel(const Eigen::Ref<const Eigen::VectorXd>& a, const Eigen::Ref<const Eigen::VectorXd>& b,
                  double gamma) {
    const double dim = static_cast<double>(std::max<Eigen::Index>(1, a.size()));
    return std::exp(-gamma * (a - b).squaredNorm() / dim);
}

Eigen::MatrixXd squared_distances(const Eigen::MatrixXd& x) {
    const Eigen::Index n = x.rows();
    Eigen::MatrixXd d(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        d(j, j) = 0.0;
        for (Eigen::Index i = j + 1; i < n; ++i) {
            const double v = (x.row(i) - x.row(j)).squaredNorm();
            d(i, j) = v;
            d(j, i) = v;
        }
    }
    return d;
}

Eigen::MatrixXd rbf_gram(const Eigen::MatrixXd& sqdist, double gamma, Eigen::Index dim) {
    const double scale = -gamma / static_cast<double>(std::max<Eigen::Index>(1, dim));
    return (sqdist.array() * scale).exp().matrix();
}

SmoResult solve_smo(const SmoProblem& prob, const std::function<double(int, int)>& kernel, double eps,
                    int max_iterations) {
    const int l = static_cast<int>(prob.p.size());
    constexpr double kTau = 1e-12;
    const double c = prob.c;
    std::vector<double> alpha = prob.alpha0.empty() ? std::vector<double>(static_cast<std::size_t>(l), 0.0)
                                                    : prob.alpha0;
    auto q = [&](int i, int j) {
        return static_cast<double>(prob.sign[i] * prob.sign[j]) * kernel(prob.kernel_index[i], prob.kernel_index[j]);
    };
    std::vector<double> qd(static_cast<std::size_t>(l));
    for (int i = 0; i < l; ++i) qd[i] = q(i, i);

    std::vector<double> grad(prob.p);
    for (int i = 0; i < l; ++i) {
        if (alpha[i] == 0.0) continue;
        for (int j = 0; j < l; ++j) grad[j] += alpha[i] * q(i, j);
    }
    auto upper = [&](int t) { return alpha[t] >= c; };
    auto lower = [&](int t) { return alpha[t] <= 0.0; };

    std::vector<double> qi(static_cast<std::size_t>(l)), qj(static_cast<std::size_t>(l));
    SmoResult res;
    res.converged = false;
    int iter = 0;
    for (; iter < max_iterations; ++iter) {
        double gmax = -std::numeric_limits<double>::infinity();
        int i = -1;
        for (int t = 0; t < l; ++t) {
            if (prob.sign[t] == 1) {
                if (!upper(t) && -grad[t] >= gmax) {
                    gmax = -grad[t];
                    i = t;
                }
            } else if (!lower(t) && grad[t] >= gmax) {
                gmax = grad[t];
                i = t;
            }
        }
        double gmax2 = -std::numeric_limits<double>::infinity();
        int j = -1;
        double best_obj = std::numeric_limits<double>::infinity();
        if (i >= 0) {
            for (int t = 0; t < l; ++t) qi[t] = q(i, t);
        }
        for (int t = 0; t < l; ++t) {
            if (prob.sign[t] == 1) {
                if (lower(t)) continue;
                const double diff = gmax + grad[t];
                gmax2 = std::max(gmax2, grad[t]);
                if (diff > 0 && i >= 0) {
                    double quad = qd[i] + qd[t] - 2.0 * prob.sign[i] * qi[t];
                    if (quad <= 0) quad = kTau;
                    const double obj = -(diff * diff) / quad;
                    if (obj <= best_obj) {
                        best_obj = obj;
                        j = t;
                    }
                }
            } else {
                if (upper(t)) continue;
                const double diff = gmax - grad[t];
                gmax2 = std::max(gmax2, -grad[t]);
                if (diff > 0 && i >= 0) {
                    double quad = qd[i] + qd[t] + 2.0 * prob.sign[i] * qi[t];
                    if (quad <= 0) quad = kTau;
                    const double obj = -(diff * diff) / quad;
                    if (obj <= best_obj) {
                        best_obj = obj;
                        j = t;
                    }
                }
            }
        }
        res.kkt_gap = gmax + gmax2;
        if (i < 0 || j < 0 || gmax + gmax2 < eps) {
            res.converged = true;
            break;
        }
        for (int t = 0; t < l; ++t) qj[t] = q(j, t);

        const double old_i = alpha[i], old_j = alpha[j];
        if (prob.sign[i] != prob.sign[j]) {
            double quad = qd[i] + qd[j] + 2.0 * qi[j];
            if (quad <= 0) quad = kTau;
            const double delta = (-grad[i] - grad[j]) / quad;
            const double diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if (diff > 0) {
                if (alpha[j] < 0) {
                    alpha[j] = 0;
                    alpha[i] = diff;
                }
            } else if (alpha[i] < 0) {
                alpha[i] = 0;
                alpha[j] = -diff;
            }
            if (diff > 0) {
                if (alpha[i] > c) {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if (alpha[j] > c) {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            double quad = qd[i] + qd[j] - 2.0 * qi[j];
            if (quad <= 0) quad = kTau;
            const double delta = (grad[i] - grad[j]) / quad;
            const double sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if (sum > c) {
                if (alpha[i] > c) {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if (alpha[j] < 0) {
                alpha[j] = 0;
                alpha[i] = sum;
            }
            if (sum > c) {
                if (alpha[j] > c) {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if (alpha[i] < 0) {
                alpha[i] = 0;
                alpha[j] = sum;
            }
        }
        const double di = alpha[i] - old_i, dj = alpha[j] - old_j;
        for (int t = 0; t < l; ++t) grad[t] += qi[t] * di + qj[t] * dj;
    }
    res.iterations = iter;

    double ub = std::numeric_limits<double>::infinity(), lb = -ub, sum_free = 0.0;
    int nr_free = 0;
    for (int t = 0; t < l; ++t) {
        const double yg = prob.sign[t] * grad[t];
        if (upper(t)) {
            if (prob.sign[t] == -1) ub = std::min(ub, yg); else lb = std::max(lb, yg);
        } else if (lower(t)) {
            if (prob.sign[t] == 1) ub = std::min(ub, yg); else lb = std::max(lb, yg);
        } else {
            ++nr_free;
            sum_free += yg;
        }
    }
    res.rho = nr_free > 0 ? sum_free / nr_free : (ub + lb) / 2.0;
    res.alpha = std::move(alpha);
    return res;
}

SvrFit train_svr(const Eigen::MatrixXd& gram, const Eigen::VectorXd& y, double c, double epsilon, double eps,
                 int max_iterations) {
    const int n = static_cast<int>(y.size());
    if (gram.rows() != n || gram.cols() != n) throw Error(ErrorCode::DimensionMismatch, "gram matrix size");
    SmoProblem prob;
    prob.c = c;
    prob.p.resize(2 * static_cast<std::size_t>(n));
    prob.sign.resize(prob.p.size());
    prob.kernel_index.resize(prob.p.size());
    for (int i = 0; i < n; ++i) {
        prob.p[i] = epsilon - y[i];
        prob.sign[i] = 1;
        prob.kernel_index[i] = i;
        prob.p[n + i] = epsilon + y[i];
        prob.sign[n + i] = -1;
        prob.kernel_index[n + i] = i;
    }
    const SmoResult r = solve_smo(prob, [&](int a, int b) { return gram(a, b); }, eps, max_iterations);
    SvrFit fit;
    fit.coef.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) fit.coef[i] = r.alpha[i] - r.alpha[n + i];
    fit.bias = -r.rho;
    fit.iterations = r.iterations;
    fit.converged = r.converged;
    fit.kkt_gap = r.kkt_gap;
    return fit;
}

SvcFit train_svc(const Eigen::MatrixXd& gram, const std::vector<int>& labels, double c, double eps,
                 int max_iterations) {
    const int n = static_cast<int>(labels.size());
    if (gram.rows() != n || gram.cols() != n) throw Error(ErrorCode::DimensionMismatch, "gram matrix size");
    SmoProblem prob;
    prob.c = c;
    prob.p.assign(static_cast<std::size_t>(n), -1.0);
    prob.sign.resize(static_cast<std::size_t>(n));
    prob.kernel_index.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        if (labels[i] != 1 && labels[i] != -1) throw Error(ErrorCode::InvalidArgument, "labels must be +1 or -1");
        prob.sign[i] = static_cast<signed char>(labels[i]);
        prob.kernel_index[i] = i;
    }
    const SmoResult r = solve_smo(prob, [&](int a, int b) { return gram(a, b); }, eps, max_iterations);
    SvcFit fit;
    fit.coef.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) fit.coef[i] = labels[i] * r.alpha[i];
    fit.bias = -r.rho;
    fit.iterations = r.iterations;
    fit.converged = r.converged;
    fit.kkt_gap = r.kkt_gap;
    return fit;
}

}  // namespace ctrvis
