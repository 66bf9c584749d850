#pragma once

#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "aegis/allocation_engine.hpp"
#include "aegis/calendar.hpp"
#include "aegis/error.hpp"

namespace aegis::metrics {

inline constexpr int kMonthsPerYear = 12;
inline constexpr double kDefaultOutlierCutoff = 10.0;

/// A ratio whose denominator can vanish. `Ok` carries a finite value;
/// `ZeroDenominator` carries +/-infinity signed by the numerator;
/// `Undefined` (0/0) carries 0.
struct Ratio {
    enum class Status { Ok, ZeroDenominator, Undefined };
    double value = 0.0;
    Status status = Status::Ok;

    bool flagged() const { return status != Status::Ok; }
    static Ratio of(double numerator, double denominator, double zero_tol = 1e-12);
};

const char* to_string(Ratio::Status status);

/// (v_final / v_initial)^(1/years) - 1.
double cagr(double v_initial, double v_final, double years);

/// Annualized Sharpe of periodic returns: (mean * P - rf) / (sample std * sqrt(P)).
template <typename Derived>
Ratio sharpe(const Eigen::MatrixBase<Derived>& returns, double rf_annual, int periods_per_year = kMonthsPerYear) {
    const Eigen::Index n = returns.size();
    if (n < 2) throw DataError("sharpe ratio needs at least 2 observations");
    const auto r = returns.derived().reshaped();
    const double mean = r.mean();
    const double var = (r.array() - mean).square().sum() / static_cast<double>(n - 1);
    return Ratio::of(mean * periods_per_year - rf_annual, std::sqrt(var) * std::sqrt(double(periods_per_year)));
}

/// Annualized Sortino on periodic returns: (mean * P - rf) / DD with DD the
/// population lower partial moment of order 2 against rf / P, times sqrt(P).
template <typename Derived>
Ratio sortino_annual(const Eigen::MatrixBase<Derived>& returns, double rf_annual, int periods_per_year = kMonthsPerYear) {
    if (returns.size() < 1) throw DataError("sortino ratio needs at least 1 observation");
    const double mean = returns.derived().reshaped().mean();
    const double dd = allocation::downside_deviation(returns, rf_annual, periods_per_year);
    return Ratio::of(mean * periods_per_year - rf_annual, dd);
}

/// Worst peak-to-trough decline, as a fraction <= 0.
template <typename Derived>
double max_drawdown(const Eigen::MatrixBase<Derived>& equity) {
    double peak = -std::numeric_limits<double>::infinity();
    double worst = 0.0;
    for (Eigen::Index i = 0; i < equity.size(); ++i) {
        const double v = equity.derived().reshaped()(i);
        peak = std::max(peak, v);
        worst = std::min(worst, (v - peak) / peak);
    }
    return worst;
}

/// Underwater curve: (V_t - running peak) / running peak.
Eigen::VectorXd drawdown_series(const Eigen::Ref<const Eigen::VectorXd>& equity);

Ratio calmar(double cagr_value, double mdd);

/// One realized holding period as seen by the reporting layer.
struct PeriodSample {
    Date start;
    Date end;
    double gross = 0.0;
    double friction = 0.0;  // cost as a positive fraction
    double net = 0.0;
    std::size_t basket_size = 0;
};

struct AnnualRow {
    int year = 0;
    std::size_t basket_size = 0;
    std::size_t periods = 0;
    double gross = 0.0;     // compounded
    double friction = 0.0;  // summed cost, reported negative
    double net = 0.0;       // compounded
    double avg_period = 0.0;
    double ann_vol = 0.0;
    Ratio sortino;
    double win_rate = 0.0;
    double max_drawdown = 0.0;
};

struct AnnualSummary {
    std::vector<AnnualRow> rows;
    double avg_annual_sortino = 0.0;        // finite annual values only
    double outlier_adjusted_sortino = 0.0;  // finite values <= cutoff
    std::vector<int> excluded_years;        // above cutoff or non-finite
};

/// Groups periods by the calendar year of their start date.
AnnualSummary annual_summaries(std::span<const PeriodSample> periods, double rf_annual,
                               int periods_per_year = kMonthsPerYear, double outlier_cutoff = kDefaultOutlierCutoff);

struct MetricsReport {
    double cagr = 0.0;
    double years = 0.0;
    double final_value = 1.0;
    double ann_vol = 0.0;
    Ratio sharpe;
    Ratio sortino;
    double max_drawdown = 0.0;
    Ratio calmar;
    double monthly_win_rate = 0.0;
    double total_gross_return = 0.0;
    double total_net_return = 0.0;
    double total_friction = 0.0;   // sum of per-period costs
    double friction_impact = 0.0;  // prod(1+gross) - prod(1+net)
    AnnualSummary annual;
};

MetricsReport evaluate(std::span<const PeriodSample> periods, double rf_annual, int periods_per_year = kMonthsPerYear,
                       double outlier_cutoff = kDefaultOutlierCutoff);

}  // namespace aegis::metrics
