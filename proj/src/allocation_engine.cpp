#include "aegis/allocation_engine.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

namespace aegis::allocation {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

double AllocationProblem::effective_cap() const {
    const Index n = assets();
    if (n == 0) throw InfeasibleError("allocation problem has no assets");
    if (!(cap > 0)) throw ParameterError("weight cap must be positive");
    if (risk_free_annual < 0) throw ParameterError("risk-free rate must be non-negative");
    const double floor = 1.0 / static_cast<double>(n);
    if (cap * static_cast<double>(n) >= 1.0 - 1e-12) return std::min(cap, 1.0);
    if (relax_cap) return floor;
    throw InfeasibleError(fmt::format("{} assets with a {} cap cannot be fully invested (N x cap = {} < 1)", n, cap,
                                      cap * static_cast<double>(n)));
}

namespace {

struct Evaluation {
    double value;
    VectorXd gradient;
};

// Negated objective so the solver minimizes.
Evaluation evaluate(const VectorXd& w, const AllocationProblem& p) {
    const auto& R = p.asset_returns;
    const double T = static_cast<double>(R.rows());
    const double P = static_cast<double>(p.periods_per_year);
    const VectorXd port = R * w;
    const double ann = port.mean() * P;
    const VectorXd shortfall = (port.array() - p.risk_free_annual / P).min(0.0).matrix();
    const double dd = std::sqrt(P) * std::sqrt(shortfall.squaredNorm() / T);
    const double denom = dd + p.epsilon;
    const double excess = ann - p.risk_free_annual;

    VectorXd d_ann = R.colwise().mean().transpose() * P;
    VectorXd d_dd = VectorXd::Zero(w.size());
    if (dd > 0) d_dd = (R.transpose() * shortfall) * (P / (dd * T));
    VectorXd grad = (d_ann * denom - excess * d_dd) / (denom * denom);
    return {-excess / denom, -grad};
}

}  // namespace

double sortino_objective(const Eigen::Ref<const VectorXd>& weights, const AllocationProblem& problem) {
    const VectorXd port = problem.asset_returns * weights;
    const double ann = port.mean() * problem.periods_per_year;
    const double dd = downside_deviation(port, problem.risk_free_annual, problem.periods_per_year);
    return (ann - problem.risk_free_annual) / (dd + problem.epsilon);
}

VectorXd sortino_gradient(const Eigen::Ref<const VectorXd>& weights, const AllocationProblem& problem) {
    return -evaluate(weights, problem).gradient;
}

VectorXd initial_weights(const AllocationProblem& problem) {
    const Index n = problem.assets();
    const double cap = problem.effective_cap();
    VectorXd w = VectorXd::Constant(n, std::min(1.0 / static_cast<double>(n), cap));
    return w / w.sum();
}

namespace detail {

VectorXd solve_box_budget_qp(const MatrixXd& B, const VectorXd& g, const VectorXd& lower, const VectorXd& upper) {
    const Index n = g.size();
    enum : signed char { kFree = 0, kLower = -1, kUpper = 1 };
    std::vector<signed char> state(static_cast<std::size_t>(n), kFree);
    for (Index i = 0; i < n; ++i) {
        if (lower(i) >= 0)
            state[i] = kLower;
        else if (upper(i) <= 0)
            state[i] = kUpper;
    }
    VectorXd d = VectorXd::Zero(n);
    const double scale = 1.0 + g.cwiseAbs().maxCoeff();

    std::vector<Index> free_idx;
    for (int iter = 0; iter < 10 * n + 50; ++iter) {
        free_idx.clear();
        for (Index i = 0; i < n; ++i)
            if (state[i] == kFree) free_idx.push_back(i);
        const Index nf = static_cast<Index>(free_idx.size());

        double lambda = 0.0;
        VectorXd step;
        if (nf > 0) {
            MatrixXd Bff(nf, nf);
            VectorXd rhs(nf);
            const VectorXd Bd = B * d;
            double fixed_sum = 0.0;
            for (Index i = 0; i < n; ++i)
                if (state[i] != kFree) fixed_sum += d(i);
            for (Index a = 0; a < nf; ++a) {
                // rhs = -(g_F + B_FA d_A)
                double bfa = Bd(free_idx[a]);
                for (Index b = 0; b < nf; ++b) {
                    Bff(a, b) = B(free_idx[a], free_idx[b]);
                    bfa -= B(free_idx[a], free_idx[b]) * d(free_idx[b]);
                }
                rhs(a) = -(g(free_idx[a]) + bfa);
            }
            Eigen::LLT<MatrixXd> llt(Bff);
            const VectorXd u = llt.solve(rhs);
            const VectorXd v = llt.solve(VectorXd::Ones(nf));
            lambda = (u.sum() + fixed_sum) / v.sum();
            const VectorXd x = u - lambda * v;
            step.resize(nf);
            for (Index a = 0; a < nf; ++a) step(a) = x(a) - d(free_idx[a]);
        }

        if (nf == 0 || step.cwiseAbs().maxCoeff() <= 1e-15 * scale) {
            // Stationary on the working set: check multipliers of fixed bounds.
            const VectorXd gq = B * d + g;
            if (nf == 0) {
                double lo = -std::numeric_limits<double>::infinity(), hi = std::numeric_limits<double>::infinity();
                for (Index i = 0; i < n; ++i) {
                    if (state[i] == kLower) lo = std::max(lo, -gq(i));
                    if (state[i] == kUpper) hi = std::min(hi, -gq(i));
                }
                lambda = std::isfinite(lo) && std::isfinite(hi) ? 0.5 * (lo + hi) : (std::isfinite(lo) ? lo : hi);
            }
            const double tol = 1e-12 * (1.0 + gq.cwiseAbs().maxCoeff());
            Index worst = -1;
            double worst_violation = tol;
            for (Index i = 0; i < n; ++i) {
                const double mult = gq(i) + lambda;
                double violation = 0.0;
                if (state[i] == kLower) violation = -mult;
                if (state[i] == kUpper) violation = mult;
                // A bound with no room on either side cannot be released.
                if (violation > worst_violation && lower(i) < upper(i)) {
                    worst = i;
                    worst_violation = violation;
                }
            }
            if (worst < 0) break;
            state[worst] = kFree;
            continue;
        }

        double alpha = 1.0;
        Index blocking = -1;
        signed char blocking_side = kFree;
        for (Index a = 0; a < nf; ++a) {
            const Index i = free_idx[a];
            if (step(a) < 0) {
                const double room = (lower(i) - d(i)) / step(a);
                if (room < alpha) {
                    alpha = std::max(room, 0.0);
                    blocking = i;
                    blocking_side = kLower;
                }
            } else if (step(a) > 0) {
                const double room = (upper(i) - d(i)) / step(a);
                if (room < alpha) {
                    alpha = std::max(room, 0.0);
                    blocking = i;
                    blocking_side = kUpper;
                }
            }
        }
        for (Index a = 0; a < nf; ++a) d(free_idx[a]) += alpha * step(a);
        if (blocking >= 0) {
            state[blocking] = blocking_side;
            d(blocking) = blocking_side == kLower ? lower(blocking) : upper(blocking);
        }
    }
    return d;
}

}  // namespace detail

namespace {

WeightVector ascend(const AllocationProblem& problem, VectorXd x, double cap, const SolverSettings& settings) {
    const Index n = problem.assets();
    WeightVector out;
    out.tickers = problem.tickers;

    Evaluation cur = evaluate(x, problem);
    MatrixXd B = MatrixXd::Identity(n, n);
    bool scaled = false;
    int it = 0;
    for (; it < settings.max_iterations; ++it) {
        const VectorXd lower = -x;
        const VectorXd upper = VectorXd::Constant(n, cap) - x;
        const VectorXd d = detail::solve_box_budget_qp(B, cur.gradient, lower, upper);
        const double slope = cur.gradient.dot(d);
        if (d.cwiseAbs().maxCoeff() < 1e-13 || slope >= 0) {
            out.converged = true;
            break;
        }

        double alpha = 1.0;
        VectorXd trial;
        Evaluation next{};
        bool accepted = false;
        while (alpha > 1e-12) {
            trial = (x + alpha * d).cwiseMax(0.0).cwiseMin(cap);
            next = evaluate(trial, problem);
            if (next.value <= cur.value + 1e-4 * alpha * slope) {
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if (!accepted) {
            out.converged = std::abs(slope) <= settings.relative_tolerance * std::max(1.0, std::abs(cur.value));
            break;
        }

        const VectorXd s = trial - x;
        const VectorXd y = next.gradient - cur.gradient;
        const double change = std::abs(next.value - cur.value);
        const double level = std::max(1.0, std::abs(cur.value));
        x = trial;
        cur = std::move(next);

        // Damped BFGS keeps B positive definite across kinks of min(0, .).
        const double sy = s.dot(y);
        if (!scaled && sy > 0) {
            B *= y.squaredNorm() / sy;
            scaled = true;
        }
        const VectorXd Bs = B * s;
        const double sBs = s.dot(Bs);
        if (sBs > 0) {
            const double theta = sy >= 0.2 * sBs ? 1.0 : 0.8 * sBs / (sBs - sy);
            const VectorXd r = theta * y + (1.0 - theta) * Bs;
            const double sr = s.dot(r);
            if (sr > 0) B += r * r.transpose() / sr - Bs * Bs.transpose() / sBs;
        }

        if (change <= settings.relative_tolerance * level) {
            out.converged = true;
            ++it;
            break;
        }
    }

    out.weights = x;
    out.objective_value = -cur.value;
    out.iterations = it;
    return out;
}

}  // namespace

WeightVector optimize(const AllocationProblem& problem, const std::optional<VectorXd>& initial,
                      const SolverSettings& settings) {
    const Index n = problem.assets();
    const double cap = problem.effective_cap();
    if (problem.asset_returns.rows() < 1) throw DataError("allocation training window is empty");
    if (!problem.asset_returns.allFinite()) throw DataError("allocation training window contains missing values");

    VectorXd x = initial ? *initial : initial_weights(problem);
    if (x.size() != n) throw ParameterError("initial weight vector has the wrong length");
    if ((x.array() < -1e-12).any() || (x.array() > cap + 1e-9).any() || std::abs(x.sum() - 1.0) > 1e-9)
        throw ParameterError("initial weight vector is not feasible");
    x = x.cwiseMax(0.0).cwiseMin(cap);

    WeightVector best = ascend(problem, std::move(x), cap, settings);
    if (best.objective_value >= 0 || n < 2) return best;

    // Below zero the objective can have several local maxima; restart from tilted corners.
    const double rest = (1.0 - cap) / static_cast<double>(n - 1);
    int total = best.iterations;
    for (Index i = 0; i < n; ++i) {
        VectorXd start = VectorXd::Constant(n, rest);
        start(i) = cap;
        WeightVector cand = ascend(problem, std::move(start), cap, settings);
        total += cand.iterations;
        if (cand.objective_value > best.objective_value + 1e-12) best = std::move(cand);
        if (best.objective_value >= 0) break;
    }
    best.iterations = total;
    return best;
}

}  // namespace aegis::allocation
