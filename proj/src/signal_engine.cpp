#include "aegis/signal_engine.hpp"

#include <algorithm>

#include <fmt/format.h>

namespace aegis::signal {

std::vector<MomentumScore> score_panel(const ReturnsPanel& panel, Index lookback_days, Index skip_days) {
    std::vector<MomentumScore> scores;
    const Index n = panel.returns.rows();
    if (n < lookback_days) return scores;
    for (Index c = 0; c < panel.returns.cols(); ++c) {
        const auto column = panel.returns.col(c).tail(lookback_days);
        if (!column.allFinite()) continue;
        auto s = vam_score(column, lookback_days, skip_days);
        s.ticker = panel.tickers[static_cast<std::size_t>(c)];
        if (!panel.dates.empty()) s.window = {panel.dates[n - lookback_days], panel.dates[n - 1]};
        scores.push_back(std::move(s));
    }
    return scores;
}

AnchorSelection select_anchors(const std::vector<MomentumScore>& scores,
                               const std::map<std::string, std::string>& sectors) {
    AnchorSelection out;
    for (const auto& s : scores) {
        auto it = sectors.find(s.ticker);
        if (it == sectors.end()) continue;
        auto [slot, inserted] = out.sector_leaders.try_emplace(it->second, s);
        if (inserted) continue;
        const auto& cur = slot->second;
        if (s.cum_return > cur.cum_return || (s.cum_return == cur.cum_return && s.ticker < cur.ticker))
            slot->second = s;
    }
    if (out.sector_leaders.size() < 3)
        throw SelectionError(fmt::format("anchor selection needs at least 3 sectors, found {}", out.sector_leaders.size()));

    std::vector<MomentumScore> leaders;
    for (const auto& [sector, score] : out.sector_leaders) leaders.push_back(score);
    std::sort(leaders.begin(), leaders.end(), [](const MomentumScore& a, const MomentumScore& b) {
        if (a.vam != b.vam) return a.vam > b.vam;
        return a.ticker < b.ticker;
    });
    out.anchors.assign(leaders.begin(), leaders.begin() + 3);
    return out;
}

AnchorSelection select_anchors(const ReturnsPanel& panel, const std::map<std::string, std::string>& sectors,
                               Index lookback_days, Index skip_days) {
    return select_anchors(score_panel(panel, lookback_days, skip_days), sectors);
}

}  // namespace aegis::signal
