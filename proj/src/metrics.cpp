#include "aegis/metrics.hpp"

#include <algorithm>
#include <map>

#include <fmt/format.h>

namespace aegis::metrics {

Ratio Ratio::of(double numerator, double denominator, double zero_tol) {
    if (denominator > zero_tol) return {numerator / denominator, Status::Ok};
    if (std::abs(numerator) <= zero_tol) return {0.0, Status::Undefined};
    return {numerator > 0 ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity(),
            Status::ZeroDenominator};
}

const char* to_string(Ratio::Status status) {
    switch (status) {
        case Ratio::Status::Ok: return "ok";
        case Ratio::Status::ZeroDenominator: return "zero_denominator";
        case Ratio::Status::Undefined: return "undefined";
    }
    return "?";
}

double cagr(double v_initial, double v_final, double years) {
    if (!(v_initial > 0)) throw DomainError("CAGR needs a positive initial value");
    if (!(years > 0)) throw DomainError("CAGR needs a positive horizon");
    if (!(v_final > 0)) throw DomainError(fmt::format("CAGR undefined for terminal value {} (portfolio ruin)", v_final));
    return std::pow(v_final / v_initial, 1.0 / years) - 1.0;
}

Eigen::VectorXd drawdown_series(const Eigen::Ref<const Eigen::VectorXd>& equity) {
    Eigen::VectorXd out(equity.size());
    double peak = -std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < equity.size(); ++i) {
        peak = std::max(peak, equity(i));
        out(i) = (equity(i) - peak) / peak;
    }
    return out;
}

Ratio calmar(double cagr_value, double mdd) {
    if (mdd > 0) throw DomainError("max drawdown must be <= 0");
    return Ratio::of(cagr_value, std::abs(mdd));
}

namespace {

double sample_vol(const Eigen::VectorXd& r, int periods_per_year) {
    if (r.size() < 2) return 0.0;
    const double mean = r.mean();
    return std::sqrt((r.array() - mean).square().sum() / static_cast<double>(r.size() - 1)) *
           std::sqrt(static_cast<double>(periods_per_year));
}

double win_rate(const Eigen::VectorXd& r) {
    if (r.size() == 0) return 0.0;
    return static_cast<double>((r.array() > 0).count()) / static_cast<double>(r.size());
}

Eigen::VectorXd equity_from(const Eigen::VectorXd& r) {
    Eigen::VectorXd eq(r.size() + 1);
    eq(0) = 1.0;
    for (Eigen::Index i = 0; i < r.size(); ++i) eq(i + 1) = eq(i) * (1.0 + r(i));
    return eq;
}

}  // namespace

AnnualSummary annual_summaries(std::span<const PeriodSample> periods, double rf_annual, int periods_per_year,
                               double outlier_cutoff) {
    std::map<int, std::vector<const PeriodSample*>> by_year;
    for (const auto& p : periods) by_year[p.start.year()].push_back(&p);

    AnnualSummary out;
    double sum_all = 0.0, sum_kept = 0.0;
    std::size_t n_all = 0, n_kept = 0;
    for (const auto& [year, rows] : by_year) {
        AnnualRow row;
        row.year = year;
        row.periods = rows.size();
        Eigen::VectorXd net(static_cast<Eigen::Index>(rows.size()));
        double gross_growth = 1.0;
        for (std::size_t i = 0; i < rows.size(); ++i) {
            net(static_cast<Eigen::Index>(i)) = rows[i]->net;
            gross_growth *= 1.0 + rows[i]->gross;
            row.friction -= rows[i]->friction;
            row.basket_size = std::max(row.basket_size, rows[i]->basket_size);
        }
        const Eigen::VectorXd eq = equity_from(net);
        row.gross = gross_growth - 1.0;
        row.net = eq(eq.size() - 1) - 1.0;
        row.avg_period = net.mean();
        row.ann_vol = sample_vol(net, periods_per_year);
        row.sortino = sortino_annual(net, rf_annual, periods_per_year);
        row.win_rate = win_rate(net);
        row.max_drawdown = max_drawdown(eq);

        if (std::isfinite(row.sortino.value)) {
            sum_all += row.sortino.value;
            ++n_all;
        }
        if (std::isfinite(row.sortino.value) && row.sortino.value <= outlier_cutoff) {
            sum_kept += row.sortino.value;
            ++n_kept;
        } else {
            out.excluded_years.push_back(year);
        }
        out.rows.push_back(row);
    }
    out.avg_annual_sortino = n_all ? sum_all / static_cast<double>(n_all) : 0.0;
    out.outlier_adjusted_sortino = n_kept ? sum_kept / static_cast<double>(n_kept) : 0.0;
    return out;
}

MetricsReport evaluate(std::span<const PeriodSample> periods, double rf_annual, int periods_per_year,
                       double outlier_cutoff) {
    MetricsReport m;
    if (periods.empty()) throw DataError("no periods to evaluate");
    Eigen::VectorXd net(static_cast<Eigen::Index>(periods.size()));
    double gross_growth = 1.0;
    for (std::size_t i = 0; i < periods.size(); ++i) {
        net(static_cast<Eigen::Index>(i)) = periods[i].net;
        gross_growth *= 1.0 + periods[i].gross;
        m.total_friction += periods[i].friction;
    }
    const Eigen::VectorXd eq = equity_from(net);
    m.final_value = eq(eq.size() - 1);
    m.years = static_cast<double>(periods.size()) / static_cast<double>(periods_per_year);
    m.cagr = cagr(1.0, m.final_value, m.years);
    m.ann_vol = sample_vol(net, periods_per_year);
    m.sharpe = net.size() >= 2 ? sharpe(net, rf_annual, periods_per_year) : Ratio{0.0, Ratio::Status::Undefined};
    m.sortino = sortino_annual(net, rf_annual, periods_per_year);
    m.max_drawdown = max_drawdown(eq);
    m.calmar = calmar(m.cagr, m.max_drawdown);
    m.monthly_win_rate = win_rate(net);
    m.total_gross_return = gross_growth - 1.0;
    m.total_net_return = m.final_value - 1.0;
    m.friction_impact = gross_growth - m.final_value;
    m.annual = annual_summaries(periods, rf_annual, periods_per_year, outlier_cutoff);
    return m;
}

}  // namespace aegis::metrics
