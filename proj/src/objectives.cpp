#include "sage/objectives.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <stdexcept>

namespace sage {

namespace {

double apply_norm(Norm norm, const Vector& v) {
    switch (norm) {
        case Norm::l1: return v.lpNorm<1>();
        case Norm::l2: return v.norm();
        case Norm::squared_l2: return v.squaredNorm();
    }
    throw std::logic_error("apply_norm: unknown norm");
}

// d norm(v) / d v; unit/sign subgradients at kinks, zero at the l2 origin.
Vector norm_gradient(Norm norm, const Vector& v) {
    switch (norm) {
        case Norm::l1: {
            Vector g(v.size());
            for (Eigen::Index i = 0; i < v.size(); ++i)
                g(i) = v(i) > 0 ? 1.0 : (v(i) < 0 ? -1.0 : 0.0);
            return g;
        }
        case Norm::l2: {
            const double n = v.norm();
            if (n == 0.0) return Vector::Zero(v.size());
            return v / n;
        }
        case Norm::squared_l2: return 2.0 * v;
    }
    throw std::logic_error("norm_gradient: unknown norm");
}

void check_attack_shape(const AttackProblem& problem, const Matrix& attack) {
    if (attack.rows() != problem.in_control.rows() || attack.cols() != problem.in_control.cols())
        throw std::invalid_argument("attack inputs must match the in-control shape");
}

Vector indicator_thresholds(const AttackProblem& problem) {
    const int q = problem.channels();
    const int T = problem.horizon();
    Vector tau(q);
    if (problem.cost.attacked_threshold >= 0.0) {
        tau.setConstant(problem.cost.attacked_threshold);
        return tau;
    }
    for (int j = 0; j < q; ++j) {
        const double mean = problem.in_control.col(j).mean();
        const double var = (problem.in_control.col(j).array() - mean).square().sum() / T;
        tau(j) = 1e-9 * std::sqrt(var);
    }
    return tau;
}

// Per-channel sliding-window standard deviations (population form) for windows
// [t - n + 1, t]; rows with t < n - 1 are left at zero and never consumed.
Matrix window_stds(const Matrix& series, int window) {
    const int T = static_cast<int>(series.rows());
    const int q = static_cast<int>(series.cols());
    Matrix stds = Matrix::Zero(T, q);
    for (int j = 0; j < q; ++j) {
        double sum = 0.0, sumsq = 0.0;
        for (int t = 0; t < T; ++t) {
            const double x = series(t, j);
            sum += x;
            sumsq += x * x;
            if (t >= window) {
                const double old = series(t - window, j);
                sum -= old;
                sumsq -= old * old;
            }
            if (t >= window - 1) {
                const double mean = sum / window;
                const double var = std::max(0.0, sumsq / window - mean * mean);
                stds(t, j) = std::sqrt(var);
            }
        }
    }
    return stds;
}

int corr_first_step(const AttackProblem& problem) {
    return std::max(problem.effective_warmup(), problem.window - 1);
}

void check_inv_cov(const Matrix& m, Eigen::Index q, const char* who) {
    if (m.rows() != q || m.cols() != q)
        throw std::invalid_argument(std::string(who) + ": inverse covariance dimension mismatch");
    if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-9 * (1.0 + m.cwiseAbs().maxCoeff()))
        throw std::invalid_argument(std::string(who) + ": inverse covariance not symmetric");
    Eigen::LDLT<Matrix> ldlt(m);
    if (ldlt.info() != Eigen::Success || (ldlt.vectorD().array() < -1e-12).any())
        throw std::invalid_argument(std::string(who) + ": inverse covariance not positive semidefinite");
}

}  // namespace

double hotelling_t2_statistic(const Vector& x, const Vector& mean, const Matrix& inv_covariance) {
    if (x.size() != mean.size())
        throw std::invalid_argument("hotelling_t2_statistic: dimension mismatch");
    check_inv_cov(inv_covariance, x.size(), "hotelling_t2_statistic");
    const Vector d = x - mean;
    return d.dot(inv_covariance * d);
}

void validate_problem(const AttackProblem& problem) {
    const int p = static_cast<int>(problem.model.offset.size());
    const int q = problem.channels();
    const int T = problem.horizon();
    if (T <= 0 || q <= 0) throw std::invalid_argument("problem: empty in-control data");
    if (problem.model.coefficients.rows() != p || problem.model.coefficients.cols() != q)
        throw std::invalid_argument("problem: model shape mismatch");
    if (problem.reference_output.size() != p)
        throw std::invalid_argument("problem: reference output size mismatch");
    if (problem.lambda1 < 0 || problem.lambda1_corr < 0 || problem.lambda2 < 0 || problem.lambda3 < 0)
        throw std::invalid_argument("problem: multipliers must be non-negative");
    if (!(problem.eps1 > 0) || !(problem.eps2 > 0) || !(problem.eps3 > 0))
        throw std::invalid_argument("problem: budgets must be positive");
    if (problem.box_lower.size() != 0 || problem.box_upper.size() != 0) {
        if (problem.box_lower.size() != q || problem.box_upper.size() != q)
            throw std::invalid_argument("problem: box bounds must have one entry per channel");
        if ((problem.box_lower.array() >= problem.box_upper.array()).any())
            throw std::invalid_argument("problem: box lower bound must be below upper bound");
    }
    if (problem.window < 2) throw std::invalid_argument("problem: window must be >= 2");
    const bool window_active = problem.lambda1_corr > 0 ||
                               problem.monitor.variant == MonitorSpec::Variant::sliding_window_std;
    if (window_active && T <= problem.window + problem.effective_warmup())
        throw std::invalid_argument("problem: horizon too short for the window term");
    if (problem.monitor.variant == MonitorSpec::Variant::hotelling_t2) {
        if (problem.monitor.t2_mean.size() != q)
            throw std::invalid_argument("problem: hotelling monitor needs a q-dim mean");
        check_inv_cov(problem.monitor.t2_inv_cov, q, "problem");
    }
    if (problem.cost.channel_costs.size() != 0 && problem.cost.channel_costs.size() != q)
        throw std::invalid_argument("problem: channel costs must have one entry per channel");
}

double damage_term(const AttackProblem& problem, const Matrix& attack) {
    check_attack_shape(problem, attack);
    const int T = problem.horizon();
    double total = 0.0;
    for (int t = 0; t < T; ++t) {
        const Vector residual = problem.reference_output - problem.model.offset -
                                problem.model.coefficients * attack.row(t).transpose();
        total += apply_norm(problem.damage_norm, residual);
    }
    return -total;
}

double corr_stealth_term(const AttackProblem& problem, const Matrix& attack) {
    check_attack_shape(problem, attack);
    const int T = problem.horizon();
    if (T <= problem.window + problem.effective_warmup())
        throw std::invalid_argument("corr_stealth_term: horizon too short for the window term");
    const Matrix ic_std = window_stds(problem.in_control, problem.window);
    const Matrix at_std = window_stds(attack, problem.window);
    double total = 0.0;
    for (int t = corr_first_step(problem); t < T; ++t)
        total += (ic_std.row(t) - at_std.row(t)).squaredNorm();
    return total;
}

double stealth_term(const AttackProblem& problem, const Matrix& attack) {
    check_attack_shape(problem, attack);
    const int T = problem.horizon();
    const int q = problem.channels();
    using V = MonitorSpec::Variant;
    switch (problem.monitor.variant) {
        case V::identity: {
            double total = 0.0;
            for (int t = 0; t < T; ++t)
                total += apply_norm(problem.stealth_norm,
                                    (problem.in_control.row(t) - attack.row(t)).transpose());
            return total;
        }
        case V::identity_plus_variance: {
            double total = 0.0;
            for (int t = 0; t < T; ++t)
                total += apply_norm(problem.stealth_norm,
                                    (problem.in_control.row(t) - attack.row(t)).transpose());
            for (int j = 0; j < q; ++j) {
                const double mic = problem.in_control.col(j).mean();
                const double vic = (problem.in_control.col(j).array() - mic).square().sum() / T;
                const double ma = attack.col(j).mean();
                const double va = (attack.col(j).array() - ma).square().sum() / T;
                total += (vic - va) * (vic - va);
            }
            return total;
        }
        case V::hotelling_t2: {
            if (problem.monitor.t2_mean.size() != q)
                throw std::invalid_argument("stealth_term: hotelling monitor not configured");
            const Matrix& m = problem.monitor.t2_inv_cov;
            check_inv_cov(m, q, "stealth_term");
            double total = 0.0;
            for (int t = 0; t < T; ++t) {
                const Vector dic = problem.in_control.row(t).transpose() - problem.monitor.t2_mean;
                const Vector da = attack.row(t).transpose() - problem.monitor.t2_mean;
                const double diff = dic.dot(m * dic) - da.dot(m * da);
                Vector one(1);
                one(0) = diff;
                total += apply_norm(problem.stealth_norm, one);
            }
            return total;
        }
        case V::sliding_window_std:
            return corr_stealth_term(problem, attack);
    }
    throw std::logic_error("stealth_term: unknown monitor variant");
}

double physical_term(const AttackProblem& problem, const Matrix& attack) {
    check_attack_shape(problem, attack);
    const int T = problem.horizon();
    using V = ConstraintSpec::Variant;
    if (problem.constraint.variant != V::magnitude_l2 && T < 2)
        throw std::invalid_argument("physical_term: difference variants need at least 2 steps");
    double total = 0.0;
    switch (problem.constraint.variant) {
        case V::diff_l2:
            for (int t = 1; t < T; ++t)
                total += (attack.row(t) - attack.row(t - 1)).squaredNorm();
            return total;
        case V::diff_l1:
            for (int t = 1; t < T; ++t)
                total += (attack.row(t) - attack.row(t - 1)).cwiseAbs().sum();
            return total;
        case V::magnitude_l2:
            for (int t = 0; t < T; ++t)
                total += attack.row(t).squaredNorm();
            return total;
    }
    throw std::logic_error("physical_term: unknown constraint variant");
}

double cost_term(const AttackProblem& problem, const Matrix& attack) {
    check_attack_shape(problem, attack);
    const int T = problem.horizon();
    const int q = problem.channels();
    if (problem.cost.channel_costs.size() == 0) return 0.0;
    const Vector& c = problem.cost.channel_costs;
    double total = 0.0;
    if (problem.cost.mode == CostSpec::Mode::indicator) {
        const Vector tau = indicator_thresholds(problem);
        for (int j = 0; j < q; ++j) {
            const double dev = (attack.col(j) - problem.in_control.col(j)).cwiseAbs().maxCoeff();
            if (dev > tau(j)) total += c(j);
        }
    } else {
        for (int j = 0; j < q; ++j) {
            const double mean_dev = (attack.col(j) - problem.in_control.col(j)).cwiseAbs().sum() / T;
            total += c(j) * mean_dev;
        }
    }
    return total;
}

ObjectiveBreakdown sage_objective(const AttackProblem& problem, const Matrix& attack) {
    ObjectiveBreakdown b;
    b.damage = damage_term(problem, attack);
    b.stealth = stealth_term(problem, attack);
    b.correlation_stealth = problem.lambda1_corr > 0 ? corr_stealth_term(problem, attack) : 0.0;
    b.physical = physical_term(problem, attack);
    b.cost = cost_term(problem, attack);
    b.total = b.damage + problem.lambda1 * b.stealth +
              problem.lambda1_corr * b.correlation_stealth +
              problem.lambda2 * b.physical + problem.lambda3 * b.cost;
    return b;
}

namespace {

void add_damage_gradient(const AttackProblem& problem, const Matrix& attack, Matrix& grad) {
    const int T = problem.horizon();
    for (int t = 0; t < T; ++t) {
        const Vector residual = problem.reference_output - problem.model.offset -
                                problem.model.coefficients * attack.row(t).transpose();
        // v = r - beta u, d(-norm(v))/du = beta^T dnorm(v).
        grad.row(t) += (problem.model.coefficients.transpose() *
                        norm_gradient(problem.damage_norm, residual)).transpose();
    }
}

void add_corr_gradient(const AttackProblem& problem, const Matrix& attack, double weight,
                       Matrix& grad) {
    const int T = problem.horizon();
    const int q = problem.channels();
    const int n = problem.window;
    const Matrix ic_std = window_stds(problem.in_control, n);
    const Matrix at_std = window_stds(attack, n);
    Matrix means = Matrix::Zero(T, q);
    for (int j = 0; j < q; ++j) {
        double sum = 0.0;
        for (int t = 0; t < T; ++t) {
            sum += attack(t, j);
            if (t >= n) sum -= attack(t - n, j);
            if (t >= n - 1) means(t, j) = sum / n;
        }
    }
    for (int t = corr_first_step(problem); t < T; ++t) {
        for (int j = 0; j < q; ++j) {
            const double sa = at_std(t, j);
            if (sa < 1e-12) continue;  // flat window: subgradient 0
            const double coeff = weight * (-2.0) * (ic_std(t, j) - sa) / (n * sa);
            for (int s = t - n + 1; s <= t; ++s)
                grad(s, j) += coeff * (attack(s, j) - means(t, j));
        }
    }
}

void add_stealth_gradient(const AttackProblem& problem, const Matrix& attack, double weight,
                          Matrix& grad) {
    const int T = problem.horizon();
    const int q = problem.channels();
    using V = MonitorSpec::Variant;
    switch (problem.monitor.variant) {
        case V::identity:
        case V::identity_plus_variance: {
            for (int t = 0; t < T; ++t) {
                const Vector e = (problem.in_control.row(t) - attack.row(t)).transpose();
                grad.row(t) -= weight * norm_gradient(problem.stealth_norm, e).transpose();
            }
            if (problem.monitor.variant == V::identity_plus_variance) {
                for (int j = 0; j < q; ++j) {
                    const double mic = problem.in_control.col(j).mean();
                    const double vic = (problem.in_control.col(j).array() - mic).square().sum() / T;
                    const double ma = attack.col(j).mean();
                    const double va = (attack.col(j).array() - ma).square().sum() / T;
                    const double coeff = weight * (-2.0) * (vic - va) * 2.0 / T;
                    for (int t = 0; t < T; ++t)
                        grad(t, j) += coeff * (attack(t, j) - ma);
                }
            }
            return;
        }
        case V::hotelling_t2: {
            const Matrix& m = problem.monitor.t2_inv_cov;
            check_inv_cov(m, q, "sage_gradient");
            for (int t = 0; t < T; ++t) {
                const Vector dic = problem.in_control.row(t).transpose() - problem.monitor.t2_mean;
                const Vector da = attack.row(t).transpose() - problem.monitor.t2_mean;
                const Vector md = m * da;
                const double diff = dic.dot(m * dic) - da.dot(md);
                Vector one(1);
                one(0) = diff;
                const double outer = norm_gradient(problem.stealth_norm, one)(0);
                grad.row(t) += weight * outer * (-2.0) * md.transpose();
            }
            return;
        }
        case V::sliding_window_std:
            add_corr_gradient(problem, attack, weight, grad);
            return;
    }
}

void add_physical_gradient(const AttackProblem& problem, const Matrix& attack, double weight,
                           Matrix& grad) {
    const int T = problem.horizon();
    using V = ConstraintSpec::Variant;
    switch (problem.constraint.variant) {
        case V::diff_l2:
            for (int t = 1; t < T; ++t) {
                const auto d = attack.row(t) - attack.row(t - 1);
                grad.row(t) += weight * 2.0 * d;
                grad.row(t - 1) -= weight * 2.0 * d;
            }
            return;
        case V::diff_l1:
            for (int t = 1; t < T; ++t)
                for (int j = 0; j < attack.cols(); ++j) {
                    const double d = attack(t, j) - attack(t - 1, j);
                    const double s = d > 0 ? 1.0 : (d < 0 ? -1.0 : 0.0);
                    grad(t, j) += weight * s;
                    grad(t - 1, j) -= weight * s;
                }
            return;
        case V::magnitude_l2:
            grad += weight * 2.0 * attack;
            return;
    }
}

void add_cost_gradient(const AttackProblem& problem, const Matrix& attack, double weight,
                       Matrix& grad) {
    if (problem.cost.channel_costs.size() == 0) return;
    if (problem.cost.mode == CostSpec::Mode::indicator)
        throw std::invalid_argument("sage_gradient: indicator cost mode is not differentiable");
    const int T = problem.horizon();
    const Vector& c = problem.cost.channel_costs;
    for (int t = 0; t < T; ++t)
        for (int j = 0; j < attack.cols(); ++j) {
            const double d = attack(t, j) - problem.in_control(t, j);
            const double s = d > 0 ? 1.0 : (d < 0 ? -1.0 : 0.0);
            grad(t, j) += weight * c(j) * s / T;
        }
}

}  // namespace

Matrix sage_gradient(const AttackProblem& problem, const Matrix& attack) {
    check_attack_shape(problem, attack);
    Matrix grad = Matrix::Zero(attack.rows(), attack.cols());
    add_damage_gradient(problem, attack, grad);
    if (problem.lambda1 > 0) add_stealth_gradient(problem, attack, problem.lambda1, grad);
    if (problem.lambda1_corr > 0) add_corr_gradient(problem, attack, problem.lambda1_corr, grad);
    if (problem.lambda2 > 0) add_physical_gradient(problem, attack, problem.lambda2, grad);
    if (problem.lambda3 > 0) add_cost_gradient(problem, attack, problem.lambda3, grad);
    return grad;
}

}  // namespace sage
