#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "aegis/error.hpp"

namespace aegis::allocation {

/// Annualized downside deviation against the hurdle rf/periods_per_year:
/// sqrt(periods) * sqrt(mean(min(0, r - hurdle)^2)), population mean.
template <typename Derived>
typename Derived::Scalar downside_deviation(const Eigen::MatrixBase<Derived>& returns,
                                            typename Derived::Scalar rf_annual, int periods_per_year) {
    using Scalar = typename Derived::Scalar;
    if (returns.size() == 0) throw DataError("downside deviation of an empty series");
    const Scalar hurdle = rf_annual / static_cast<Scalar>(periods_per_year);
    const Scalar lpm2 = (returns.derived().reshaped().array() - hurdle).min(Scalar(0)).square().mean();
    return std::sqrt(static_cast<Scalar>(periods_per_year)) * std::sqrt(lpm2);
}

struct AllocationProblem {
    Eigen::MatrixXd asset_returns;  // training window, rows = days, simple returns
    std::vector<std::string> tickers;
    double risk_free_annual = 0.04;
    double cap = 0.05;
    int periods_per_year = 252;
    double epsilon = 1e-9;
    bool relax_cap = false;  // raise cap to 1/N when N * cap < 1

    Eigen::Index assets() const { return asset_returns.cols(); }
    /// Cap actually enforced (after optional relaxation). Throws
    /// InfeasibleError when N * cap < 1 and relaxation is off.
    double effective_cap() const;
};

struct SolverSettings {
    int max_iterations = 200;
    double relative_tolerance = 1e-9;
};

struct WeightVector {
    std::vector<std::string> tickers;
    Eigen::VectorXd weights;
    double objective_value = 0.0;
    bool converged = false;
    int iterations = 0;
};

/// (mean daily portfolio return * periods - rf) / (downside deviation + eps).
double sortino_objective(const Eigen::Ref<const Eigen::VectorXd>& weights, const AllocationProblem& problem);

/// Gradient of sortino_objective with respect to the weights, used by the
/// solver. Exact wherever no portfolio return sits on the hurdle.
Eigen::VectorXd sortino_gradient(const Eigen::Ref<const Eigen::VectorXd>& weights, const AllocationProblem& problem);

/// Equal weights min(1/N, cap), renormalized onto the budget.
Eigen::VectorXd initial_weights(const AllocationProblem& problem);

/// Sequential quadratic programming with a damped BFGS model of the negated
/// Sortino ratio; each step solves the box + budget QP by a primal
/// active-set method, followed by a backtracking line search. Iterates stay
/// feasible, and the best point seen is returned.
WeightVector optimize(const AllocationProblem& problem, const std::optional<Eigen::VectorXd>& initial = std::nullopt,
                      const SolverSettings& settings = {});

namespace detail {

/// min 0.5 d'Bd + g'd  s.t.  sum(d) = 0,  lower <= d <= upper, with
/// lower <= 0 <= upper. B must be symmetric positive definite.
Eigen::VectorXd solve_box_budget_qp(const Eigen::MatrixXd& B, const Eigen::VectorXd& g, const Eigen::VectorXd& lower,
                                    const Eigen::VectorXd& upper);

}  // namespace detail

}  // namespace aegis::allocation
