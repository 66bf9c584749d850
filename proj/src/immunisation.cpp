#include "aegis/immunisation.hpp"

#include <algorithm>
#include <limits>
#include <set>

#include <fmt/format.h>

namespace aegis::immunisation {

CorrelationMatrix correlation_matrix(const Eigen::Ref<const Eigen::MatrixXd>& returns,
                                     std::vector<std::string> tickers) {
    if (static_cast<Index>(tickers.size()) != returns.cols())
        throw DomainError("correlation_matrix: ticker count does not match columns");
    if (returns.rows() < 2) throw DomainError("correlation_matrix: need at least 2 observations");
    if (!returns.allFinite()) throw DataError("correlation_matrix: returns window contains missing values");

    const Index k = returns.cols();
    Eigen::MatrixXd centered = returns.rowwise() - returns.colwise().mean();
    Eigen::VectorXd norms = centered.colwise().norm();
    CorrelationMatrix out;
    out.tickers = std::move(tickers);
    out.constant.resize(static_cast<std::size_t>(k));
    for (Index c = 0; c < k; ++c) {
        out.constant[c] = !(norms(c) > 0);
        if (out.constant[c])
            centered.col(c).setZero();
        else
            centered.col(c) /= norms(c);
    }
    out.rho.noalias() = centered.transpose() * centered;
    const Eigen::MatrixXd upper = out.rho.triangularView<Eigen::Upper>();
    out.rho = upper.selfadjointView<Eigen::Upper>();
    out.rho = out.rho.cwiseMax(-1.0).cwiseMin(1.0);
    out.rho.diagonal().setOnes();
    return out;
}

std::vector<signal::MomentumScore> momentum_gate(std::span<const signal::MomentumScore> candidates) {
    std::vector<signal::MomentumScore> out;
    std::copy_if(candidates.begin(), candidates.end(), std::back_inserter(out),
                 [](const signal::MomentumScore& s) { return s.cum_return > 0; });
    return out;
}

std::vector<std::string> Basket::members() const {
    std::vector<std::string> all = anchors;
    all.insert(all.end(), diversifiers.begin(), diversifiers.end());
    return all;
}

Basket select_diversifiers(std::span<const std::string> anchors, std::span<const signal::MomentumScore> pool,
                           const ReturnsPanel& returns, std::size_t target_size) {
    Basket basket;
    basket.anchors.assign(anchors.begin(), anchors.end());
    basket.target_size = target_size;

    // Pool order is irrelevant to the result; dedupe and drop anchors.
    std::set<std::string> seen(anchors.begin(), anchors.end());
    std::vector<const signal::MomentumScore*> candidates;
    for (const auto& s : pool)
        if (seen.insert(s.ticker).second) candidates.push_back(&s);

    if (basket.size() >= target_size || candidates.empty()) {
        basket.underfilled = basket.size() < target_size;
        if (basket.underfilled) basket.warnings.push_back("candidate pool exhausted before target size");
        return basket;
    }

    // Columns: anchors first, then candidates.
    std::vector<std::string> names(anchors.begin(), anchors.end());
    for (auto* c : candidates) names.push_back(c->ticker);
    Eigen::MatrixXd window(returns.returns.rows(), static_cast<Index>(names.size()));
    for (std::size_t i = 0; i < names.size(); ++i) {
        const Index col = returns.column(names[i]);
        if (col < 0) throw DataError("select_diversifiers: no returns for " + names[i]);
        window.col(static_cast<Index>(i)) = returns.returns.col(col);
    }
    const auto corr = correlation_matrix(window, names);
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (corr.constant[i])
            basket.warnings.push_back(names[i] + " has constant returns; correlation treated as 0");
    }

    const Index n_anchor = static_cast<Index>(anchors.size());
    const Index n_cand = static_cast<Index>(candidates.size());
    Eigen::VectorXd rho_max = Eigen::VectorXd::Zero(n_cand);
    for (Index j = 0; j < n_cand; ++j)
        for (Index a = 0; a < n_anchor; ++a) rho_max(j) = std::max(rho_max(j), std::abs(corr.rho(n_anchor + j, a)));

    std::vector<bool> taken(static_cast<std::size_t>(n_cand), false);
    while (basket.size() < target_size) {
        Index best = -1;
        for (Index j = 0; j < n_cand; ++j) {
            if (taken[j]) continue;
            if (best < 0) {
                best = j;
                continue;
            }
            const auto& c = *candidates[j];
            const auto& b = *candidates[best];
            if (rho_max(j) < rho_max(best) ||
                (rho_max(j) == rho_max(best) && (c.vam > b.vam || (c.vam == b.vam && c.ticker < b.ticker))))
                best = j;
        }
        if (best < 0) {
            basket.underfilled = true;
            basket.warnings.push_back(fmt::format("candidate pool exhausted at {} of {} members", basket.size(),
                                                  target_size));
            break;
        }
        taken[best] = true;
        basket.diversifiers.push_back(candidates[best]->ticker);
        basket.selection_log.push_back(rho_max(best));
        for (Index j = 0; j < n_cand; ++j)
            if (!taken[j]) rho_max(j) = std::max(rho_max(j), std::abs(corr.rho(n_anchor + j, n_anchor + best)));
    }
    return basket;
}

}  // namespace aegis::immunisation
