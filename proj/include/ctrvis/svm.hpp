#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include <Eigen/Core>

namespace ctrvis {

/// exp(-gamma * |a - b|^2 / dim): the width is scaled by the feature count so
/// one gamma grid suits any dimensionality.
double rbf_kernel(const Eigen::Ref<const Eigen::VectorXd>& a, const Eigen::Ref<const Eigen::VectorXd>& b,
                  double gamma);

/// Pairwise squared distances between the rows of x.
Eigen::MatrixXd squared_distances(const Eigen::MatrixXd& x);

/// RBF Gram matrix from squared distances.
Eigen::MatrixXd rbf_gram(const Eigen::MatrixXd& sqdist, double gamma, Eigen::Index dim);

/// Dual problem  min 1/2 a'Qa + p'a  s.t.  sum_i s_i a_i = const, 0 <= a_i <= C,
/// with Q_ij = s_i s_j K(t_i, t_j), solved by SMO with second-order working
/// set selection. `t_i` maps a dual variable to its kernel row.
struct SmoProblem {
    std::vector<double> p;
    std::vector<signed char> sign;  // +1 / -1
    std::vector<int> kernel_index;
    double c = 1.0;
    std::vector<double> alpha0;     // feasible start
};

struct SmoResult {
    std::vector<double> alpha;
    double rho = 0.0;  // decision value offset: f(x) = sum(...) - rho
    int iterations = 0;
    bool converged = true;
    double kkt_gap = 0.0;  // max violating pair gap at exit
};

/// `kernel(i, j)` returns K for kernel rows i and j.
SmoResult solve_smo(const SmoProblem& prob, const std::function<double(int, int)>& kernel, double eps,
                    int max_iterations);

struct SvrFit {
    std::vector<double> coef;  // alpha_i - alpha*_i per training row
    double bias = 0.0;
    int iterations = 0;
    bool converged = true;
    double kkt_gap = 0.0;
};

/// epsilon-SVR on a precomputed Gram matrix.
SvrFit train_svr(const Eigen::MatrixXd& gram, const Eigen::VectorXd& y, double c, double epsilon, double eps,
                 int max_iterations);

struct SvcFit {
    std::vector<double> coef;  // y_i * alpha_i
    double bias = 0.0;
    int iterations = 0;
    bool converged = true;
    double kkt_gap = 0.0;
};

/// C-SVC on a precomputed Gram matrix, labels +1 / -1.
SvcFit train_svc(const Eigen::MatrixXd& gram, const std::vector<int>& labels, double c, double eps,
                 int max_iterations);

}  // namespace ctrvis
