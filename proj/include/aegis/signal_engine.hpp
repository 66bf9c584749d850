#pragma once

#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "aegis/error.hpp"
#include "aegis/market_data.hpp"

namespace aegis::signal {

inline constexpr int kTradingDaysPerYear = 252;
inline constexpr Index kDefaultLookbackDays = 252;
inline constexpr Index kDefaultSkipDays = 21;

/// Momentum statistics of one asset over one look-back window.
struct MomentumScore {
    std::string ticker;
    double cum_return = 0.0;    // sum of log returns, skip-month excluded
    double realized_vol = 0.0;  // annualized sample std of the window
    double vam = 0.0;           // cum_return / realized_vol
    DateRange window;
    Index skip_days = 0;
};

/// Sum of the log returns in [n - lookback, n - skip) of the trailing
/// `lookback_days` observations, i.e. ln(P_{t-skip} / P_{t-lookback}).
template <typename Derived>
typename Derived::Scalar cum_return(const Eigen::MatrixBase<Derived>& returns, Index lookback_days, Index skip_days) {
    if (skip_days < 0 || lookback_days <= skip_days)
        throw ParameterError("lookback must exceed skip (lookback " + std::to_string(lookback_days) + ", skip " +
                             std::to_string(skip_days) + ")");
    if (returns.size() < lookback_days)
        throw DataError("series shorter than lookback (" + std::to_string(returns.size()) + " < " +
                        std::to_string(lookback_days) + ")");
    const Index n = returns.size();
    return returns.derived().reshaped().segment(n - lookback_days, lookback_days - skip_days).sum();
}

/// Annualized sample standard deviation (N-1) of the trailing window.
template <typename Derived>
typename Derived::Scalar realized_vol(const Eigen::MatrixBase<Derived>& returns, Index lookback_days,
                                      int periods_per_year = kTradingDaysPerYear) {
    using Scalar = typename Derived::Scalar;
    const Index n = std::min<Index>(returns.size(), lookback_days);
    if (n < 2) throw DataError("realized volatility needs at least 2 observations");
    const auto window = returns.derived().reshaped().tail(n);
    if ((window.array() == window(0)).all()) return Scalar(0);
    const Scalar mean = window.mean();
    const Scalar ss = (window.array() - mean).square().sum();
    return std::sqrt(ss / static_cast<Scalar>(n - 1) * static_cast<Scalar>(periods_per_year));
}

/// VAM of a score pair. 0/0 is defined as 0; a non-zero return with zero
/// volatility maps to +/-infinity so it ranks beyond every finite score.
inline double vam_ratio(double cum, double vol) {
    if (vol > 0) return cum / vol;
    if (cum == 0) return 0.0;
    return cum > 0 ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
}

template <typename Derived>
MomentumScore vam_score(const Eigen::MatrixBase<Derived>& returns, Index lookback_days, Index skip_days) {
    MomentumScore s;
    s.cum_return = cum_return(returns, lookback_days, skip_days);
    s.realized_vol = realized_vol(returns, lookback_days);
    s.vam = vam_ratio(s.cum_return, s.realized_vol);
    s.skip_days = skip_days;
    return s;
}

/// Scores every column of a returns panel over its trailing window. Columns
/// with missing values in the window are skipped.
std::vector<MomentumScore> score_panel(const ReturnsPanel& panel, Index lookback_days, Index skip_days);

struct AnchorSelection {
    std::vector<MomentumScore> anchors;                  // exactly 3, best VAM first
    std::map<std::string, MomentumScore> sector_leaders;  // sector -> leader
};

/// Picks each sector's raw-return leader, then keeps the three leaders with
/// the highest VAM. Ties break on ticker. Tickers absent from `sectors` are
/// not part of the equity universe and are ignored.
AnchorSelection select_anchors(const ReturnsPanel& panel, const std::map<std::string, std::string>& sectors,
                               Index lookback_days = kDefaultLookbackDays, Index skip_days = kDefaultSkipDays);

/// Same selection from precomputed scores.
AnchorSelection select_anchors(const std::vector<MomentumScore>& scores,
                               const std::map<std::string, std::string>& sectors);

}  // namespace aegis::signal
