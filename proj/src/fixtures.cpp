#include "aegis/fixtures.hpp"

#include <array>
#include <cmath>
#include <fstream>
#include <random>

#include <fmt/format.h>

#include "aegis/csv.hpp"

namespace aegis::fixtures {

namespace {

constexpr std::array<const char*, 11> kSectors = {
    "Communication Services", "Consumer Discretionary", "Consumer Staples", "Energy",
    "Financials",             "Health Care",            "Industrials",      "Information Technology",
    "Materials",              "Real Estate",            "Utilities"};

constexpr std::array<const char*, 5> kIndices = {"SP500", "NDX100", "DJIA", "SP400", "SP600"};

DateRange active_range(const PricePanel& panel, Index c) {
    Index first = 0, last = panel.rows() - 1;
    while (first < panel.rows() && std::isnan(panel.prices(first, c))) ++first;
    while (last > first && std::isnan(panel.prices(last, c))) --last;
    return {panel.dates[first], panel.dates[last]};
}

}  // namespace

Fixture synthetic_universe(const FixtureOptions& options) {
    if (options.assets < 1 || options.years < 1) throw ParameterError("fixture needs at least one asset and one year");
    Fixture fx;
    auto& panel = fx.panel;
    panel.dates = business_days(options.start, options.start.add_months(12 * options.years));
    const Index rows = static_cast<Index>(panel.dates.size());
    const Index equities = options.assets;
    const Index cols = equities + (options.proxies ? 2 : 0);

    std::mt19937_64 rng(options.seed);
    std::normal_distribution<double> z(0.0, 1.0);
    std::uniform_real_distribution<double> u(0.0, 1.0);

    Eigen::VectorXd market(rows);
    Eigen::MatrixXd sector(rows, static_cast<Index>(kSectors.size()));
    for (Index t = 0; t < rows; ++t) {
        market(t) = 0.0003 + 0.010 * z(rng);
        for (Index s = 0; s < sector.cols(); ++s) sector(t, s) = 0.006 * z(rng);
    }

    panel.prices.resize(rows, cols);
    for (Index c = 0; c < equities; ++c) {
        const std::string ticker = fmt::format("A{:03d}", c);
        const Index sec = c % static_cast<Index>(kSectors.size());
        const double drift = 0.0006 * (u(rng) - 0.4);
        const double beta = 0.5 + u(rng);
        const double idio = 0.008 + 0.012 * u(rng);
        double log_p = std::log(20.0 + 180.0 * u(rng));
        for (Index t = 0; t < rows; ++t) {
            if (t > 0) log_p += drift + beta * market(t) + sector(t, sec) + idio * z(rng);
            panel.prices(t, c) = std::exp(log_p);
        }
        panel.tickers.push_back(ticker);

        AssetMeta m;
        m.ticker = ticker;
        m.sector = kSectors[static_cast<std::size_t>(sec)];
        m.shares_outstanding = std::round(1e8 + 2e9 * u(rng));
        m.iwf = 0.5 + 0.5 * u(rng);
        m.advt = std::round(1e6 + 5e7 * u(rng));
        m.index_tags.emplace(kIndices[static_cast<std::size_t>(c) % kIndices.size()]);
        fx.meta.emplace(ticker, std::move(m));
    }

    // Late listings take the highest-numbered names, delistings the next ones down.
    for (int k = 0; k < options.late_listings && k < options.assets; ++k) {
        const Index c = equities - 1 - k;
        const Index listed = rows / 5 + (k * rows) / (2 * std::max(options.late_listings, 1));
        panel.prices.col(c).head(listed).setConstant(kMissing);
    }
    for (int k = 0; k < options.delistings && options.late_listings + k < options.assets; ++k) {
        const Index c = equities - 1 - options.late_listings - k;
        const Index last = rows / 2 + (k * rows) / (3 * std::max(options.delistings, 1));
        const Index fall = std::max<Index>(1, last - 60);
        for (Index t = fall + 1; t <= last; ++t) panel.prices(t, c) = panel.prices(t - 1, c) * 0.94;
        panel.prices.col(c).tail(rows - last - 1).setConstant(kMissing);
    }

    if (options.proxies) {
        double mkt = 100.0, bond = 100.0;
        for (Index t = 0; t < rows; ++t) {
            if (t > 0) {
                mkt *= std::exp(market(t));
                bond *= std::exp(0.00012 + 0.003 * z(rng));
            }
            panel.prices(t, equities) = mkt;
            panel.prices(t, equities + 1) = bond;
        }
        panel.tickers.push_back("MKT");
        panel.tickers.push_back("BOND");
    }

    for (Index c = 0; c < cols; ++c) {
        panel.active.push_back(active_range(panel, c));
        auto it = fx.meta.find(panel.tickers[c]);
        if (it != fx.meta.end()) it->second.active_window = panel.active.back();
    }
    panel.validate();
    return fx;
}

void add_decaying_asset(Fixture& fixture, const std::string& ticker, const std::string& sector, Index peak_row,
                        Index last_row) {
    auto& panel = fixture.panel;
    if (panel.column(ticker) >= 0) throw DataError("fixture already has ticker " + ticker);
    if (!(0 < peak_row && peak_row < last_row && last_row < panel.rows()))
        throw ParameterError("decaying asset needs 0 < peak_row < last_row < rows");
    const Index rows = panel.rows();
    Eigen::VectorXd col(rows);
    double p = 50.0;
    for (Index t = 0; t < rows; ++t) {
        if (t > last_row) {
            col(t) = kMissing;
            continue;
        }
        if (t > 0) {
            const double step = t <= peak_row ? 0.004 + 0.002 * std::sin(0.7 * static_cast<double>(t)) : -0.08;
            p *= std::exp(step);
        }
        col(t) = p;
    }
    panel.prices.conservativeResize(Eigen::NoChange, panel.cols() + 1);
    panel.prices.col(panel.cols() - 1) = col;
    panel.tickers.push_back(ticker);
    panel.active.push_back(active_range(panel, panel.cols() - 1));

    AssetMeta m;
    m.ticker = ticker;
    m.sector = sector;
    m.shares_outstanding = 5e8;
    m.iwf = 1.0;
    m.advt = 1e7;
    m.index_tags.emplace("SP500");
    m.active_window = panel.active.back();
    fixture.meta.insert_or_assign(ticker, std::move(m));
    panel.validate();
}

void write_prices_csv(const PricePanel& panel, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    std::vector<std::string> cells{"date"};
    cells.insert(cells.end(), panel.tickers.begin(), panel.tickers.end());
    csv::write_row(out, cells);
    for (Index r = 0; r < panel.rows(); ++r) {
        cells.assign(1, panel.dates[static_cast<std::size_t>(r)].iso());
        for (Index c = 0; c < panel.cols(); ++c) cells.push_back(csv::format_double(panel.prices(r, c)));
        csv::write_row(out, cells);
    }
}

void write_meta_csv(const MetaTable& meta, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    csv::write_row(out, {"ticker", "sector", "shares_outstanding", "iwf", "advt", "index_tags", "first_date", "last_date"});
    for (const auto& [ticker, m] : meta) {
        std::string tags;
        for (const auto& t : m.index_tags) tags += (tags.empty() ? "" : "|") + t;
        csv::write_row(out, {ticker, m.sector, csv::format_double(m.shares_outstanding), csv::format_double(m.iwf),
                             csv::format_double(m.advt), tags, m.active_window.first.iso(),
                             m.active_window.last.iso()});
    }
}

}  // namespace aegis::fixtures
