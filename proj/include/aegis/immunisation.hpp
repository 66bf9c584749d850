#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "aegis/error.hpp"
#include "aegis/market_data.hpp"
#include "aegis/signal_engine.hpp"

namespace aegis::immunisation {

/// Pearson product-moment correlation. Throws DomainError for mismatched or
/// too-short input and DataError when either series is constant.
template <typename DerivedX, typename DerivedY>
double pearson(const Eigen::MatrixBase<DerivedX>& x, const Eigen::MatrixBase<DerivedY>& y) {
    if (x.size() != y.size()) throw DomainError("pearson: series lengths differ");
    if (x.size() < 2) throw DomainError("pearson: need at least 2 observations");
    const auto dx = (x.derived().reshaped().array() - x.derived().reshaped().mean()).eval();
    const auto dy = (y.derived().reshaped().array() - y.derived().reshaped().mean()).eval();
    const double sxx = dx.square().sum();
    const double syy = dy.square().sum();
    if (!(sxx > 0) || !(syy > 0)) throw DataError("pearson: correlation undefined for a constant series");
    const double r = (dx * dy).sum() / (std::sqrt(sxx) * std::sqrt(syy));
    return std::clamp(r, -1.0, 1.0);
}

struct CorrelationMatrix {
    std::vector<std::string> tickers;
    Eigen::MatrixXd rho;            // symmetric, unit diagonal
    std::vector<bool> constant;     // per ticker: zero variance, correlations set to 0
};

/// Pairwise Pearson matrix over the columns of `returns` (rows = dates).
/// Constant columns correlate 0 with everything else.
CorrelationMatrix correlation_matrix(const Eigen::Ref<const Eigen::MatrixXd>& returns,
                                     std::vector<std::string> tickers);

/// Keeps scores with strictly positive cumulative return, preserving order.
std::vector<signal::MomentumScore> momentum_gate(std::span<const signal::MomentumScore> candidates);

struct Basket {
    std::vector<std::string> anchors;
    std::vector<std::string> diversifiers;  // in pick order
    std::size_t target_size = 0;
    std::vector<double> selection_log;      // rho_max of each diversifier when picked
    bool underfilled = false;               // pool ran out before target_size
    std::vector<std::string> warnings;

    std::size_t size() const { return anchors.size() + diversifiers.size(); }
    std::vector<std::string> members() const;
};

/// Greedy minimax filtration: starting from the anchors, repeatedly admit the
/// pool candidate whose largest |rho| against the current basket is smallest.
/// Equal rho_max prefers higher VAM, then the smaller ticker.
Basket select_diversifiers(std::span<const std::string> anchors, std::span<const signal::MomentumScore> pool,
                           const ReturnsPanel& returns, std::size_t target_size);

}  // namespace aegis::immunisation
