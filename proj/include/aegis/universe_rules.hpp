#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "aegis/market_data.hpp"

namespace aegis::universe {

inline constexpr double kLargeCapFloor = 22.7e9;
inline constexpr double kMidCapFloor = 8.0e9;
inline constexpr double kSmallCapFloor = 1.2e9;
inline constexpr double kMinFalr = 0.75;
inline constexpr double kMinMonthlyVolume = 250'000.0;
inline constexpr double kMinIwf = 0.10;
inline constexpr double kNasdaqSingleCap = 0.24;
inline constexpr double kNasdaqGroupThreshold = 0.045;
inline constexpr double kNasdaqGroupCap = 0.48;

enum class CapBand { LargeCap, MidCap, SmallCap, Ineligible };

const char* to_string(CapBand band);

struct EligibilityRecord {
    std::string ticker;
    double price = 0.0;
    double shares_outstanding = 0.0;
    double unadjusted_cap = 0.0;       // price x shares outstanding
    double falr = 0.0;                 // ADVT / float-adjusted cap
    double iwf = 1.0;
    std::vector<double> monthly_volumes;       // 6 entries, most recent last
    std::vector<double> quarterly_net_income;  // 4 entries, most recent last
    bool grandfathered = false;                // S&P 1500 migration: viability not re-tested
};

/// Builds a record from metadata plus an evaluation-date price.
/// FALR = ADVT / (price x shares x IWF).
EligibilityRecord make_record(const AssetMeta& meta, double price, std::vector<double> monthly_volumes,
                              std::vector<double> quarterly_net_income);

CapBand classify_cap_band(double unadjusted_cap);

bool passes_liquidity(const EligibilityRecord& rec);

/// Latest quarter positive and trailing four-quarter sum positive.
bool passes_viability(const EligibilityRecord& rec);

struct IndexWeights {
    std::vector<std::string> tickers;
    Eigen::VectorXd weights;  // normalized, sums to 1
    double divisor = 1.0;
};

struct CapWeightInput {
    std::string ticker;
    double price = 0.0;
    double shares = 0.0;
    double iwf = 1.0;
};

/// Float-adjusted cap weights P * S * IWF / D, normalized to sum to one.
IndexWeights sp_weights(std::span<const CapWeightInput> records, double divisor);

/// Stage one only: no weight above `cap`, excess redistributed pro rata over
/// the uncapped names until nothing binds.
Eigen::VectorXd cap_and_redistribute(const Eigen::VectorXd& weights, double cap);

/// Modified cap weighting: single-name cap 24%, and names above 4.5% may not
/// jointly exceed 48%. Rank order is preserved. Throws InfeasibleError when
/// the count of names cannot satisfy both stages.
Eigen::VectorXd nasdaq_cap(const Eigen::VectorXd& weights);

/// Top-75 by market cap enter automatically; ranks 76-100 only if already
/// members.
bool nasdaq_retains(int market_cap_rank, bool is_incumbent);

/// Price-weighted index level sum(P) / D. Empty input yields 0.
double dow_value(std::span<const double> prices, double divisor);

/// Divisor that keeps the index level unchanged across a price discontinuity.
double dow_split_adjust(std::span<const double> prices_before, std::span<const double> prices_after,
                        double divisor_before);

/// Quarterly-financials CSV: `ticker,q1_ni..q4_ni,m1_vol..m6_vol`.
struct Financials {
    std::vector<double> quarterly_net_income;
    std::vector<double> monthly_volumes;
};
std::map<std::string, Financials> read_financials_csv(const std::filesystem::path& path);

}  // namespace aegis::universe
