#include "aegis/baselines.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "aegis/signal_engine.hpp"

namespace aegis::baselines {

const char* to_string(Kind kind) {
    switch (kind) {
        case Kind::Csm: return "csm";
        case Kind::RiskParity: return "risk_parity";
        case Kind::EqualWeight: return "equal_weight";
    }
    return "?";
}

Kind parse_kind(std::string_view text) {
    std::string s(text);
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    if (s == "csm") return Kind::Csm;
    if (s == "risk_parity") return Kind::RiskParity;
    if (s == "equal_weight") return Kind::EqualWeight;
    throw ParameterError(fmt::format("unknown baseline '{}'", text));
}

void BaselineConfig::validate() const {
    if (!(csm_top_fraction > 0 && csm_top_fraction <= 1)) throw ParameterError("csm_top_fraction must lie in (0, 1]");
    if (csm_skip_days < 0) throw ParameterError("csm_skip_days must be >= 0");
    if (rp_vol_lookback_months < 1) throw ParameterError("rp_vol_lookback_months must be >= 1");
    if (rebalance_frequency_months < 1) throw ParameterError("rebalance_frequency_months must be >= 1");
}

allocation::WeightVector csm_weights(const ReturnsPanel& panel, const BaselineConfig& config) {
    config.validate();
    allocation::WeightVector out;
    const auto scores = signal::score_panel(panel, panel.returns.rows(), config.csm_skip_days);
    if (scores.empty()) return out;
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (scores[a].cum_return != scores[b].cum_return) return scores[a].cum_return > scores[b].cum_return;
        return scores[a].ticker < scores[b].ticker;
    });
    const auto n = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::floor(config.csm_top_fraction * static_cast<double>(scores.size()) + 1e-9)));
    std::vector<std::string> picked;
    for (std::size_t i = 0; i < n; ++i) picked.push_back(scores[order[i]].ticker);
    std::sort(picked.begin(), picked.end());
    out.tickers = std::move(picked);
    out.weights = Eigen::VectorXd::Constant(static_cast<Index>(n), 1.0 / static_cast<double>(n));
    out.converged = true;
    return out;
}

namespace {

std::vector<Index> priced_universe(const backtest::HistoryView& view, const std::set<std::string>& universe,
                                   Index first) {
    std::vector<Index> cols;
    for (Index c = 0; c < static_cast<Index>(view.tickers().size()); ++c)
        if (universe.count(view.tickers()[c]) && view.covers(c, first)) cols.push_back(c);
    return cols;
}

}  // namespace

EqualWeightStrategy::EqualWeightStrategy(backtest::BacktestConfig config, std::set<std::string> universe)
    : config_(std::move(config)), universe_(std::move(universe)) {}

backtest::Decision EqualWeightStrategy::decide(const backtest::HistoryView& view, bool) {
    backtest::Decision d;
    const auto cols = priced_universe(view, universe_, view.window_start(config_.allocation_lookback_months));
    if (cols.empty()) {
        d.diagnostics.push_back("empty universe; holding cash");
        return d;
    }
    for (Index c : cols) d.weights.tickers.push_back(view.tickers()[c]);
    d.weights.weights = Eigen::VectorXd::Constant(static_cast<Index>(cols.size()), 1.0 / static_cast<double>(cols.size()));
    d.weights.converged = true;
    return d;
}

CsmStrategy::CsmStrategy(backtest::BacktestConfig config, BaselineConfig baseline, std::set<std::string> universe)
    : config_(std::move(config)), baseline_(std::move(baseline)), universe_(std::move(universe)) {
    baseline_.validate();
}

backtest::Decision CsmStrategy::decide(const backtest::HistoryView& view, bool) {
    backtest::Decision d;
    const Index first = view.window_start(config_.selection_lookback_months);
    const Index lookback = view.now() - first;
    const auto cols = priced_universe(view, universe_, first);
    if (cols.empty() || lookback <= baseline_.csm_skip_days) {
        d.diagnostics.push_back("empty universe; holding cash");
        return d;
    }
    const auto prices = view.prices();
    Eigen::MatrixXd window(lookback + 1, static_cast<Index>(cols.size()));
    ReturnsPanel panel;
    for (std::size_t k = 0; k < cols.size(); ++k) {
        window.col(static_cast<Index>(k)) = prices.col(cols[k]).segment(first, lookback + 1);
        panel.tickers.push_back(view.tickers()[cols[k]]);
    }
    panel.returns = log_returns_of(window);
    for (Index r = first + 1; r <= view.now(); ++r) panel.dates.push_back(view.date(r));
    d.weights = csm_weights(panel, baseline_);
    return d;
}

RiskParityStrategy::RiskParityStrategy(BaselineConfig baseline) : baseline_(std::move(baseline)) {
    baseline_.validate();
}

void RiskParityStrategy::prepare(std::span<const std::string> tickers) {
    for (const auto* proxy : {&baseline_.stock_proxy, &baseline_.bond_proxy})
        if (std::find(tickers.begin(), tickers.end(), *proxy) == tickers.end())
            throw DataError(fmt::format("risk parity needs proxy column '{}' in the price panel", *proxy));
}

backtest::Decision RiskParityStrategy::decide(const backtest::HistoryView& view, bool) {
    backtest::Decision d;
    const Index first = view.window_start(baseline_.rp_vol_lookback_months);
    const Index s = view.column(baseline_.stock_proxy);
    const Index b = view.column(baseline_.bond_proxy);
    const Index n = view.now() - first;
    if (!view.covers(s, first) || !view.covers(b, first) || n < 2) {
        d.diagnostics.push_back("proxy series do not cover the look-back; holding cash");
        return d;
    }
    const auto prices = view.prices();
    const Eigen::VectorXd rs = log_returns_of(prices.col(s).segment(first, n + 1));
    const Eigen::VectorXd rb = log_returns_of(prices.col(b).segment(first, n + 1));
    d.weights.tickers = {baseline_.stock_proxy, baseline_.bond_proxy};
    d.weights.weights = risk_parity_weights(rs, rb, n);
    d.weights.converged = true;
    return d;
}

}  // namespace aegis::baselines
