#pragma once

#include <set>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "aegis/allocation_engine.hpp"
#include "aegis/backtest_engine.hpp"
#include "aegis/market_data.hpp"

namespace aegis::baselines {

enum class Kind { Csm, RiskParity, EqualWeight };

const char* to_string(Kind kind);
/// Accepts "csm", "risk_parity" and "equal_weight" (case-insensitive).
Kind parse_kind(std::string_view text);

struct BaselineConfig {
    Kind kind = Kind::Csm;
    double csm_top_fraction = 0.10;
    Index csm_skip_days = 21;
    int rp_vol_lookback_months = 3;
    int rebalance_frequency_months = 1;
    std::string stock_proxy = "MKT";
    std::string bond_proxy = "BOND";

    void validate() const;
};

/// Equal weights over the top fraction of assets ranked by skip-month
/// cumulative log return over the whole panel. Ties go to the smaller ticker.
/// An empty panel yields an empty vector (cash).
allocation::WeightVector csm_weights(const ReturnsPanel& panel, const BaselineConfig& config);

inline constexpr double kMinLegWeight = 0.01;
inline constexpr double kMaxLegWeight = 0.99;

/// Inverse-volatility split between a stock and a bond series over the last
/// `lookback` observations. Each leg is held within [0.01, 0.99].
template <typename DerivedA, typename DerivedB>
Eigen::Vector2d risk_parity_weights(const Eigen::MatrixBase<DerivedA>& stock, const Eigen::MatrixBase<DerivedB>& bond,
                                    Index lookback) {
    if (lookback < 2) throw ParameterError("risk parity look-back must be >= 2 observations");
    if (stock.size() < lookback || bond.size() < lookback)
        throw DataError("risk parity series shorter than the look-back");
    auto vol = [lookback](const auto& x) {
        const Eigen::VectorXd tail = x.derived().reshaped().tail(lookback);
        const double m = tail.mean();
        return std::sqrt((tail.array() - m).square().sum() / static_cast<double>(lookback - 1));
    };
    const double s = vol(stock);
    const double b = vol(bond);
    if (s <= 0 && b <= 0) return {0.5, 0.5};
    // w_stock = (1/s) / (1/s + 1/b) = b / (s + b); a zero leg saturates the cap.
    const double ws = std::clamp(b / (s + b), kMinLegWeight, kMaxLegWeight);
    return {ws, 1.0 - ws};
}

/// Equal weight across every universe name priced over the allocation window.
class EqualWeightStrategy final : public backtest::Strategy {
public:
    EqualWeightStrategy(backtest::BacktestConfig config, std::set<std::string> universe);
    std::string name() const override { return "equal_weight"; }
    backtest::Decision decide(const backtest::HistoryView& view, bool reselect) override;

private:
    backtest::BacktestConfig config_;
    std::set<std::string> universe_;
};

/// Cross-sectional momentum: top decile by 12-1 return, equally weighted.
class CsmStrategy final : public backtest::Strategy {
public:
    CsmStrategy(backtest::BacktestConfig config, BaselineConfig baseline, std::set<std::string> universe);
    std::string name() const override { return "csm"; }
    backtest::Decision decide(const backtest::HistoryView& view, bool reselect) override;

private:
    backtest::BacktestConfig config_;
    BaselineConfig baseline_;
    std::set<std::string> universe_;
};

/// Two-asset inverse-volatility stock/bond proxy.
class RiskParityStrategy final : public backtest::Strategy {
public:
    explicit RiskParityStrategy(BaselineConfig baseline);
    std::string name() const override { return "risk_parity"; }
    /// Throws DataError naming whichever proxy column is missing.
    void prepare(std::span<const std::string> tickers) override;
    backtest::Decision decide(const backtest::HistoryView& view, bool reselect) override;

private:
    BaselineConfig baseline_;
};

}  // namespace aegis::baselines
