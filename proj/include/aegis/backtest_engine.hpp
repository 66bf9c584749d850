#pragma once

#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "aegis/allocation_engine.hpp"
#include "aegis/calendar.hpp"
#include "aegis/immunisation.hpp"
#include "aegis/market_data.hpp"
#include "aegis/metrics.hpp"

namespace aegis::backtest {

struct BacktestConfig {
    int selection_lookback_months = 12;
    int allocation_lookback_months = 3;
    int rebalance_frequency_months = 1;
    Index skip_days = 21;
    std::size_t target_basket_size = 50;
    std::size_t diversifier_count = 47;
    double friction_bps = 10.0;
    double rf_annual = 0.04;
    double cap = 0.05;
    bool relax_cap = false;
    double outlier_cutoff = metrics::kDefaultOutlierCutoff;
    std::optional<Date> start_date;
    std::optional<Date> end_date;
    allocation::SolverSettings solver;

    double friction_rate() const { return friction_bps / 10'000.0; }
    /// Throws ParameterError on inconsistent settings.
    void validate() const;
};

/// Read-only slice of the panel up to and including the decision date.
/// Strategies only ever see data through this view.
class HistoryView {
public:
    HistoryView(const PricePanel& panel, Index now) : panel_(&panel), now_(now) {}

    Index now() const { return now_; }
    Date today() const { return panel_->dates[static_cast<std::size_t>(now_)]; }
    Date date(Index row) const;
    const std::vector<std::string>& tickers() const { return panel_->tickers; }
    Index column(std::string_view ticker) const { return panel_->column(ticker); }

    /// Prices of rows [0, now].
    Eigen::Block<const Eigen::MatrixXd> prices() const { return panel_->prices.topRows(now_ + 1); }
    /// First row whose date is on or after today minus `months`.
    Index window_start(int months) const;
    /// True when the column has a price on every row of [first, now].
    bool covers(Index column, Index first) const;

private:
    const PricePanel* panel_;
    Index now_;
};

struct Decision {
    allocation::WeightVector weights;                // empty = all cash
    std::optional<immunisation::Basket> new_basket;  // set when the basket was (re)selected
    std::vector<std::string> diagnostics;
};

class Strategy {
public:
    virtual ~Strategy() = default;
    virtual std::string name() const = 0;
    /// Called once with the panel's column set before the walk-forward loop.
    virtual void prepare(std::span<const std::string> tickers) { (void)tickers; }
    /// Target weights for the period starting today. `reselect` marks the
    /// first rebalance of a new calendar year (or of the run).
    virtual Decision decide(const HistoryView& view, bool reselect) = 0;
};

/// Three-layer strategy: sector-leader anchors, minimax diversifiers, and
/// Sortino-optimal weights on a rolling training window.
class AegisStrategy final : public Strategy {
public:
    AegisStrategy(BacktestConfig config, MetaTable meta);
    std::string name() const override { return "aegis"; }
    Decision decide(const HistoryView& view, bool reselect) override;

private:
    std::optional<immunisation::Basket> select_basket(const HistoryView& view, std::vector<std::string>& diagnostics);

    BacktestConfig config_;
    MetaTable meta_;
    std::map<std::string, std::string> sectors_;
    std::optional<immunisation::Basket> basket_;
};

struct Period {
    Date train_start;
    Date train_end;
    Date test_start;
    Date test_end;
};

struct PeriodRecord {
    Period period;
    allocation::WeightVector weights;
    double gross_return = 0.0;
    double turnover = 0.0;
    double friction_cost = 0.0;
    double net_return = 0.0;
    std::optional<std::size_t> basket;   // index into BacktestResult::baskets
    std::vector<std::string> delisted;   // stopped trading inside the test window
    std::vector<std::string> diagnostics;
};

struct EquityPoint {
    Date date;
    double value = 1.0;
};

struct SelectedBasket {
    Date selected_on;
    immunisation::Basket basket;
};

struct BacktestResult {
    std::string strategy;
    std::vector<PeriodRecord> periods;
    std::vector<EquityPoint> equity_curve;  // starts at 1.0 on the first test start
    std::vector<SelectedBasket> baskets;
    metrics::AnnualSummary annual;

    std::vector<metrics::PeriodSample> samples() const;
};

/// Sum of absolute weight changes over the union of tickers (missing = 0).
double turnover(const allocation::WeightVector& prev, const allocation::WeightVector& next);

struct DelistingOutcome {
    allocation::WeightVector adjusted;  // holdings after the period; delisted names become cash
    double gross_return = 0.0;
    std::vector<std::string> delisted;
};

/// Realizes one holding period from fixed weights. Names without a price at
/// the period end earn their return up to their last price and are then held
/// as zero-return cash.
DelistingOutcome handle_delisting(const allocation::WeightVector& weights, const PricePanel& panel, Index start_row,
                                  Index end_row);

/// Rebalance rows: first trading day of each month, every
/// `rebalance_frequency_months`, beginning after the selection warm-up.
std::vector<Index> rebalance_rows(const BacktestConfig& config, const PricePanel& panel);

BacktestResult run(const BacktestConfig& config, const PricePanel& panel, Strategy& strategy);

/// AEGIS run using the metadata sector map.
BacktestResult run(const BacktestConfig& config, const PricePanel& panel, const MetaTable& meta);

}  // namespace aegis::backtest
