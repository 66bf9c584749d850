#include "aegis/universe_rules.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>

#include <fmt/format.h>

#include "aegis/csv.hpp"

namespace aegis::universe {

namespace {

constexpr double kTol = 1e-12;

}  // namespace

const char* to_string(CapBand band) {
    switch (band) {
        case CapBand::LargeCap: return "LargeCap";
        case CapBand::MidCap: return "MidCap";
        case CapBand::SmallCap: return "SmallCap";
        case CapBand::Ineligible: return "Ineligible";
    }
    return "?";
}

EligibilityRecord make_record(const AssetMeta& meta, double price, std::vector<double> monthly_volumes,
                              std::vector<double> quarterly_net_income) {
    EligibilityRecord rec;
    rec.ticker = meta.ticker;
    rec.price = price;
    rec.shares_outstanding = meta.shares_outstanding;
    rec.unadjusted_cap = price * meta.shares_outstanding;
    rec.iwf = meta.iwf;
    const double float_cap = rec.unadjusted_cap * meta.iwf;
    rec.falr = float_cap > 0 ? meta.advt / float_cap : 0.0;
    rec.monthly_volumes = std::move(monthly_volumes);
    rec.quarterly_net_income = std::move(quarterly_net_income);
    return rec;
}

CapBand classify_cap_band(double cap) {
    if (!(cap >= 0)) throw DomainError(fmt::format("market cap must be non-negative, got {}", cap));
    if (cap >= kLargeCapFloor) return CapBand::LargeCap;
    if (cap >= kMidCapFloor) return CapBand::MidCap;
    if (cap >= kSmallCapFloor) return CapBand::SmallCap;
    return CapBand::Ineligible;
}

bool passes_liquidity(const EligibilityRecord& rec) {
    if (rec.monthly_volumes.size() < 6)
        throw DataError(fmt::format("{}: need 6 monthly volumes, have {}", rec.ticker, rec.monthly_volumes.size()));
    const auto recent = std::span(rec.monthly_volumes).last(6);
    return rec.falr >= kMinFalr &&
           std::all_of(recent.begin(), recent.end(), [](double v) { return v >= kMinMonthlyVolume; });
}

bool passes_viability(const EligibilityRecord& rec) {
    if (rec.grandfathered) return true;
    if (rec.quarterly_net_income.size() != 4)
        throw DataError(fmt::format("{}: need 4 quarterly net income values, have {}", rec.ticker,
                                    rec.quarterly_net_income.size()));
    const auto& ni = rec.quarterly_net_income;
    return ni.back() > 0 && std::accumulate(ni.begin(), ni.end(), 0.0) > 0;
}

IndexWeights sp_weights(std::span<const CapWeightInput> records, double divisor) {
    if (!(divisor > 0)) throw DomainError("index divisor must be positive");
    IndexWeights out;
    out.divisor = divisor;
    out.weights.resize(static_cast<Index>(records.size()));
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        if (r.iwf < kMinIwf) throw EligibilityError(fmt::format("{}: IWF {} below 0.10", r.ticker, r.iwf));
        out.tickers.push_back(r.ticker);
        out.weights(static_cast<Index>(i)) = r.price * r.shares * r.iwf / divisor;
    }
    const double total = out.weights.sum();
    if (records.empty()) return out;
    if (!(total > 0)) throw DomainError("float-adjusted caps sum to zero");
    out.weights /= total;
    return out;
}

Eigen::VectorXd cap_and_redistribute(const Eigen::VectorXd& weights, double cap) {
    const Index n = weights.size();
    if (n == 0) return weights;
    if (cap * static_cast<double>(n) < 1.0 - kTol)
        throw InfeasibleError(fmt::format("{} names cannot sum to 1 under a {} cap", n, cap));
    Eigen::VectorXd w = weights;
    std::vector<bool> capped(static_cast<std::size_t>(n), false);
    for (int iter = 0; iter < 100; ++iter) {
        bool changed = false;
        for (Index i = 0; i < n; ++i) {
            if (!capped[i] && w(i) > cap + kTol) {
                capped[i] = true;
                changed = true;
            }
        }
        if (!changed) break;
        double free_total = 0.0;
        Index n_capped = 0;
        for (Index i = 0; i < n; ++i) {
            if (capped[i])
                ++n_capped;
            else
                free_total += weights(i);
        }
        const double room = 1.0 - cap * static_cast<double>(n_capped);
        for (Index i = 0; i < n; ++i) {
            if (capped[i])
                w(i) = cap;
            else
                w(i) = free_total > 0 ? weights(i) * room / free_total : room / static_cast<double>(n - n_capped);
        }
    }
    return w;
}

Eigen::VectorXd nasdaq_cap(const Eigen::VectorXd& weights) {
    const Index n = weights.size();
    if (n == 0) return weights;
    if ((weights.array() < 0).any()) throw DomainError("weights must be non-negative");
    if (std::abs(weights.sum() - 1.0) > 1e-9) throw DomainError("weights must sum to 1");

    Eigen::VectorXd w = cap_and_redistribute(weights, kNasdaqSingleCap);

    std::vector<Index> group, rest;
    double group_total = 0.0;
    for (Index i = 0; i < n; ++i) {
        if (w(i) > kNasdaqGroupThreshold) {
            group.push_back(i);
            group_total += w(i);
        } else {
            rest.push_back(i);
        }
    }
    if (group_total <= kNasdaqGroupCap + kTol) return w;

    // Shrink the group uniformly to the aggregate cap; the complement absorbs
    // the remainder pro rata, never rising above the smallest group member or
    // the 4.5% threshold.
    const double scale = kNasdaqGroupCap / group_total;
    double smallest_group = 1.0;
    for (Index i : group) {
        w(i) *= scale;
        smallest_group = std::min(smallest_group, w(i));
    }
    const double rest_cap = std::min(kNasdaqGroupThreshold, smallest_group);
    const double room = 1.0 - kNasdaqGroupCap;
    if (rest_cap * static_cast<double>(rest.size()) < room - kTol) {
        throw InfeasibleError(fmt::format(
            "nasdaq capping infeasible: {} names outside the >4.5% group cannot absorb {:.4f} at <= {:.4f} each",
            rest.size(), room, rest_cap));
    }
    Eigen::VectorXd tail(static_cast<Index>(rest.size()));
    for (std::size_t k = 0; k < rest.size(); ++k) tail(static_cast<Index>(k)) = w(rest[k]);
    if (tail.sum() > 0)
        tail *= room / tail.sum();
    else
        tail.setConstant(room / static_cast<double>(rest.size()));
    tail = cap_and_redistribute(tail / room, rest_cap / room) * room;
    for (std::size_t k = 0; k < rest.size(); ++k) w(rest[k]) = tail(static_cast<Index>(k));
    return w;
}

bool nasdaq_retains(int rank, bool is_incumbent) {
    if (rank < 1) throw DomainError("rank is 1-based");
    if (rank <= 75) return true;
    if (rank <= 100) return is_incumbent;
    return false;
}

double dow_value(std::span<const double> prices, double divisor) {
    if (!(divisor > 0)) throw DomainError("Dow divisor must be positive");
    if (prices.empty()) {
        std::cerr << "warning: dow_value called with no prices\n";
        return 0.0;
    }
    return std::accumulate(prices.begin(), prices.end(), 0.0) / divisor;
}

double dow_split_adjust(std::span<const double> before, std::span<const double> after, double divisor_before) {
    if (!(divisor_before > 0)) throw DomainError("Dow divisor must be positive");
    if (before.size() != after.size()) throw DomainError("price lists differ in length");
    const double sum_before = std::accumulate(before.begin(), before.end(), 0.0);
    const double sum_after = std::accumulate(after.begin(), after.end(), 0.0);
    if (!(sum_after > 0) || !(sum_before > 0)) throw DomainError("price sum must be positive");
    return divisor_before * sum_after / sum_before;
}

std::map<std::string, Financials> read_financials_csv(const std::filesystem::path& path) {
    const auto table = csv::read(path);
    const std::string source = path.string();
    const long tcol = table.column("ticker");
    if (tcol < 0) throw ParseError(source + ": missing column 'ticker'", 1);
    std::vector<long> q, m;
    for (int i = 1; i <= 4; ++i) q.push_back(table.column(fmt::format("q{}_ni", i)));
    for (int i = 1; i <= 6; ++i) m.push_back(table.column(fmt::format("m{}_vol", i)));
    std::map<std::string, Financials> out;
    for (const auto& row : table.rows) {
        Financials f;
        for (long c : q) {
            if (c >= 0 && !row.cells[c].empty())
                f.quarterly_net_income.push_back(csv::parse_double(row.cells[c], source + " net income", row.line));
        }
        for (long c : m) {
            if (c >= 0 && !row.cells[c].empty())
                f.monthly_volumes.push_back(csv::parse_double(row.cells[c], source + " volume", row.line));
        }
        out[normalize_ticker(row.cells[tcol])] = std::move(f);
    }
    return out;
}

}  // namespace aegis::universe
