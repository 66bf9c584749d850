#include "aegis/backtest_engine.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <fmt/format.h>

#include "aegis/signal_engine.hpp"

namespace aegis::backtest {

void BacktestConfig::validate() const {
    if (selection_lookback_months < 1) throw ParameterError("selection_lookback_months must be >= 1");
    if (allocation_lookback_months < 1) throw ParameterError("allocation_lookback_months must be >= 1");
    if (rebalance_frequency_months < 1) throw ParameterError("rebalance_frequency_months must be >= 1");
    if (skip_days < 0) throw ParameterError("skip_days must be >= 0");
    if (diversifier_count + 3 != target_basket_size)
        throw ParameterError(fmt::format("diversifier_count ({}) + 3 must equal target_basket_size ({})",
                                         diversifier_count, target_basket_size));
    if (!(friction_bps >= 0)) throw ParameterError("friction_bps must be >= 0");
    if (!(rf_annual >= 0)) throw ParameterError("rf_annual must be >= 0");
    if (!(cap > 0 && cap <= 1)) throw ParameterError("cap must lie in (0, 1]");
    if (start_date && end_date && *end_date < *start_date) throw ParameterError("end_date precedes start_date");
}

Date HistoryView::date(Index row) const {
    if (row < 0 || row > now_) throw ParameterError("history row out of range");
    return panel_->dates[static_cast<std::size_t>(row)];
}

Index HistoryView::window_start(int months) const {
    const Date from = today().add_months(-months);
    const auto begin = panel_->dates.begin();
    return static_cast<Index>(std::lower_bound(begin, begin + now_ + 1, from) - begin);
}

bool HistoryView::covers(Index column, Index first) const {
    if (first < 0) return false;
    return panel_->prices.col(column).segment(first, now_ - first + 1).allFinite();
}

std::vector<metrics::PeriodSample> BacktestResult::samples() const {
    std::vector<metrics::PeriodSample> out;
    out.reserve(periods.size());
    for (const auto& p : periods) {
        std::size_t size = 0;
        for (double w : p.weights.weights) size += w > 0 ? 1 : 0;
        if (p.basket) size = baskets[*p.basket].basket.size();
        out.push_back({p.period.test_start, p.period.test_end, p.gross_return, p.friction_cost, p.net_return, size});
    }
    return out;
}

double turnover(const allocation::WeightVector& prev, const allocation::WeightVector& next) {
    std::map<std::string, double> delta;
    for (std::size_t i = 0; i < prev.tickers.size(); ++i) delta[prev.tickers[i]] -= prev.weights(static_cast<Index>(i));
    for (std::size_t i = 0; i < next.tickers.size(); ++i) delta[next.tickers[i]] += next.weights(static_cast<Index>(i));
    double total = 0.0;
    for (const auto& [ticker, d] : delta) total += std::abs(d);
    return total;
}

DelistingOutcome handle_delisting(const allocation::WeightVector& weights, const PricePanel& panel, Index start_row,
                                  Index end_row) {
    DelistingOutcome out;
    std::vector<std::string> kept;
    std::vector<double> kept_w;
    for (std::size_t i = 0; i < weights.tickers.size(); ++i) {
        const double w = weights.weights(static_cast<Index>(i));
        const auto& ticker = weights.tickers[i];
        const Index c = panel.column(ticker);
        if (c < 0) throw DataError("weights reference unknown ticker " + ticker);
        const double p0 = panel.prices(start_row, c);
        if (std::isnan(p0)) throw DataError(fmt::format("{} has no price on {}", ticker, panel.dates[start_row].iso()));
        double p1 = panel.prices(end_row, c);
        if (std::isnan(p1)) {
            // Stopped trading: realize up to the last available price.
            p1 = p0;
            for (Index r = end_row; r > start_row; --r) {
                if (!std::isnan(panel.prices(r, c))) {
                    p1 = panel.prices(r, c);
                    break;
                }
            }
            out.delisted.push_back(ticker);
        } else {
            kept.push_back(ticker);
            kept_w.push_back(w);
        }
        out.gross_return += w * (p1 / p0 - 1.0);
    }
    out.adjusted.tickers = std::move(kept);
    out.adjusted.weights = Eigen::Map<const Eigen::VectorXd>(kept_w.data(), static_cast<Index>(kept_w.size()));
    return out;
}

std::vector<Index> rebalance_rows(const BacktestConfig& config, const PricePanel& panel) {
    std::vector<Index> rows;
    if (panel.rows() == 0) return rows;
    Date start = panel.dates.front().add_months(config.selection_lookback_months);
    if (config.start_date && start < *config.start_date) start = *config.start_date;
    std::vector<Index> month_starts;
    for (Index r = 1; r < panel.rows(); ++r) {
        const Date& d = panel.dates[r];
        const Date& prev = panel.dates[r - 1];
        if (d.month() == prev.month() && d.year() == prev.year()) continue;
        if (d < start) continue;
        if (config.end_date && *config.end_date < d) break;
        month_starts.push_back(r);
    }
    for (std::size_t i = 0; i < month_starts.size(); i += static_cast<std::size_t>(config.rebalance_frequency_months))
        rows.push_back(month_starts[i]);
    return rows;
}

AegisStrategy::AegisStrategy(BacktestConfig config, MetaTable meta) : config_(std::move(config)), meta_(std::move(meta)) {
    config_.validate();
    for (const auto& [ticker, m] : meta_) sectors_[ticker] = m.sector;
}

std::optional<immunisation::Basket> AegisStrategy::select_basket(const HistoryView& view,
                                                                 std::vector<std::string>& diagnostics) {
    const Index first = view.window_start(config_.selection_lookback_months);
    const Index lookback = view.now() - first;
    if (lookback <= config_.skip_days) {
        diagnostics.push_back("selection window too short for the skip-month rule");
        return std::nullopt;
    }

    // Candidates: equity-universe names priced on every day of the window.
    ReturnsPanel returns;
    std::vector<Index> cols;
    for (Index c = 0; c < static_cast<Index>(view.tickers().size()); ++c) {
        if (!sectors_.count(view.tickers()[c])) continue;
        if (!view.covers(c, first)) continue;
        cols.push_back(c);
        returns.tickers.push_back(view.tickers()[c]);
    }
    if (cols.empty()) {
        diagnostics.push_back("no asset is priced across the selection window");
        return std::nullopt;
    }
    const auto prices = view.prices();
    Eigen::MatrixXd window(lookback + 1, static_cast<Index>(cols.size()));
    for (std::size_t k = 0; k < cols.size(); ++k)
        window.col(static_cast<Index>(k)) = prices.col(cols[k]).segment(first, lookback + 1);
    returns.returns = log_returns_of(window);
    for (Index r = first + 1; r <= view.now(); ++r) returns.dates.push_back(view.date(r));

    const auto scores = signal::score_panel(returns, lookback, config_.skip_days);
    signal::AnchorSelection anchors;
    try {
        anchors = signal::select_anchors(scores, sectors_);
    } catch (const SelectionError& e) {
        diagnostics.push_back(e.what());
        return std::nullopt;
    }
    std::vector<std::string> anchor_names;
    for (const auto& a : anchors.anchors) anchor_names.push_back(a.ticker);
    std::vector<signal::MomentumScore> rest;
    for (const auto& s : scores)
        if (std::find(anchor_names.begin(), anchor_names.end(), s.ticker) == anchor_names.end()) rest.push_back(s);
    const auto pool = immunisation::momentum_gate(rest);
    auto basket = immunisation::select_diversifiers(anchor_names, pool, returns, config_.target_basket_size);
    for (const auto& w : basket.warnings) diagnostics.push_back(w);
    return basket;
}

Decision AegisStrategy::decide(const HistoryView& view, bool reselect) {
    Decision decision;
    if (reselect || !basket_) {
        basket_ = select_basket(view, decision.diagnostics);
        if (basket_) decision.new_basket = basket_;
    }
    if (!basket_) {
        decision.diagnostics.push_back("empty eligible pool; holding cash");
        return decision;
    }

    const Index first = view.window_start(config_.allocation_lookback_months);
    allocation::AllocationProblem problem;
    problem.risk_free_annual = config_.rf_annual;
    problem.cap = config_.cap;
    problem.relax_cap = config_.relax_cap;
    std::vector<Index> cols;
    for (const auto& ticker : basket_->members()) {
        const Index c = view.column(ticker);
        if (c >= 0 && view.covers(c, first)) {
            cols.push_back(c);
            problem.tickers.push_back(ticker);
        } else {
            decision.diagnostics.push_back(ticker + " lacks prices over the training window; excluded");
        }
    }
    if (cols.empty() || view.now() - first < 1) {
        decision.diagnostics.push_back("no basket member is tradable; holding cash");
        return decision;
    }
    const auto prices = view.prices();
    Eigen::MatrixXd window(view.now() - first + 1, static_cast<Index>(cols.size()));
    for (std::size_t k = 0; k < cols.size(); ++k)
        window.col(static_cast<Index>(k)) = prices.col(cols[k]).segment(first, view.now() - first + 1);
    problem.asset_returns = simple_returns(window);

    decision.weights = allocation::optimize(problem, std::nullopt, config_.solver);
    if (!decision.weights.converged)
        decision.diagnostics.push_back(fmt::format("optimizer stopped after {} iterations without converging",
                                                   decision.weights.iterations));
    return decision;
}

BacktestResult run(const BacktestConfig& config, const PricePanel& panel, Strategy& strategy) {
    config.validate();
    const auto rows = rebalance_rows(config, panel);
    if (rows.size() < 2)
        throw ParameterError("panel does not span the selection warm-up plus one full test period");
    strategy.prepare(panel.tickers);

    BacktestResult result;
    result.strategy = strategy.name();
    result.equity_curve.push_back({panel.dates[rows.front()], 1.0});

    allocation::WeightVector held;  // starts all cash
    std::optional<std::size_t> basket_index;
    const double delta = config.friction_rate();
    for (std::size_t k = 0; k + 1 < rows.size(); ++k) {
        const Index start = rows[k];
        const Index end = rows[k + 1];
        const bool reselect = k == 0 || panel.dates[start].year() != panel.dates[rows[k - 1]].year();

        HistoryView view(panel, start);
        Decision decision = strategy.decide(view, reselect);
        if (decision.new_basket) {
            result.baskets.push_back({panel.dates[start], std::move(*decision.new_basket)});
            basket_index = result.baskets.size() - 1;
        }

        PeriodRecord rec;
        rec.period = {view.date(view.window_start(config.allocation_lookback_months)), panel.dates[start],
                      panel.dates[start], panel.dates[end]};
        rec.weights = std::move(decision.weights);
        rec.basket = basket_index;
        rec.diagnostics = std::move(decision.diagnostics);

        auto realized = handle_delisting(rec.weights, panel, start, end);
        rec.gross_return = realized.gross_return;
        rec.delisted = std::move(realized.delisted);
        rec.turnover = turnover(held, rec.weights);
        rec.friction_cost = delta * rec.turnover;
        rec.net_return = rec.gross_return - rec.friction_cost;
        held = std::move(realized.adjusted);

        result.equity_curve.push_back({panel.dates[end], result.equity_curve.back().value * (1.0 + rec.net_return)});
        result.periods.push_back(std::move(rec));
    }
    const auto samples = result.samples();
    result.annual = metrics::annual_summaries(samples, config.rf_annual,
                                              metrics::kMonthsPerYear / config.rebalance_frequency_months,
                                              config.outlier_cutoff);
    return result;
}

BacktestResult run(const BacktestConfig& config, const PricePanel& panel, const MetaTable& meta) {
    AegisStrategy strategy(config, meta);
    return run(config, panel, strategy);
}

}  // namespace aegis::backtest
