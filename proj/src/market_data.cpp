#include "aegis/market_data.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <mutex>
#include <optional>
#include <thread>
#include <unordered_map>

#include <fmt/format.h>

#include "aegis/csv.hpp"

namespace aegis {

namespace {

std::vector<DateRange> compute_active(const std::vector<Date>& dates, const Eigen::MatrixXd& prices) {
    std::vector<DateRange> active(static_cast<std::size_t>(prices.cols()));
    for (Index c = 0; c < prices.cols(); ++c) {
        Index first = -1, last = -1;
        for (Index r = 0; r < prices.rows(); ++r) {
            if (!std::isnan(prices(r, c))) {
                if (first < 0) first = r;
                last = r;
            }
        }
        if (first >= 0) active[static_cast<std::size_t>(c)] = {dates[first], dates[last]};
    }
    return active;
}

Index index_of(const std::vector<std::string>& names, std::string_view name) {
    auto it = std::find(names.begin(), names.end(), name);
    return it == names.end() ? -1 : static_cast<Index>(it - names.begin());
}

}  // namespace

Index PricePanel::column(std::string_view ticker) const { return index_of(tickers, ticker); }

Index ReturnsPanel::column(std::string_view ticker) const { return index_of(tickers, ticker); }

Index PricePanel::row(Date d) const {
    auto it = std::lower_bound(dates.begin(), dates.end(), d);
    return (it != dates.end() && *it == d) ? static_cast<Index>(it - dates.begin()) : -1;
}

Index PricePanel::row_at_or_before(Date d) const {
    auto it = std::upper_bound(dates.begin(), dates.end(), d);
    return static_cast<Index>(it - dates.begin()) - 1;
}

Index PricePanel::row_at_or_after(Date d) const {
    return static_cast<Index>(std::lower_bound(dates.begin(), dates.end(), d) - dates.begin());
}

void PricePanel::validate() const {
    if (static_cast<Index>(dates.size()) != prices.rows() || static_cast<Index>(tickers.size()) != prices.cols() ||
        active.size() != tickers.size()) {
        throw DataError("price panel shape mismatch");
    }
    for (std::size_t i = 1; i < dates.size(); ++i)
        if (!(dates[i - 1] < dates[i])) throw DataError("panel dates not strictly increasing at " + dates[i].iso());
    for (Index c = 0; c < cols(); ++c) {
        const auto& window = active[static_cast<std::size_t>(c)];
        for (Index r = 0; r < rows(); ++r) {
            const double p = prices(r, c);
            if (std::isnan(p)) continue;
            if (!window.contains(dates[r]))
                throw DataError(fmt::format("{} has a price outside its active window on {}", tickers[c], dates[r].iso()));
            if (!std::isfinite(p) || p <= 0)
                throw DataError(fmt::format("{} has non-positive price on {}", tickers[c], dates[r].iso()));
        }
    }
}

std::string normalize_ticker(std::string_view raw) {
    std::string out;
    out.reserve(raw.size());
    for (char ch : raw) {
        if (ch == ' ' || ch == '\t') continue;
        out.push_back(ch == '.' ? '-' : static_cast<char>(std::toupper(static_cast<unsigned char>(ch))));
    }
    if (out.empty()) throw ParameterError("ticker must be non-empty");
    return out;
}

IngestResult ingest_csv(const std::filesystem::path& path, Index min_points) {
    const auto table = csv::read(path);
    const std::string source = path.string();
    if (table.header.empty() || table.header.front() != "date")
        throw ParseError(source + ": first column must be 'date'", 1);

    std::vector<std::string> tickers;
    for (std::size_t i = 1; i < table.header.size(); ++i) {
        auto t = normalize_ticker(table.header[i]);
        if (index_of(tickers, t) >= 0) throw ParseError(source + ": duplicate ticker column " + t, 1);
        tickers.push_back(std::move(t));
    }

    struct Parsed {
        Date date;
        std::size_t line;
        std::vector<double> values;
    };
    std::vector<Parsed> parsed;
    parsed.reserve(table.rows.size());
    for (const auto& row : table.rows) {
        Parsed p;
        p.line = row.line;
        try {
            p.date = Date::parse(row.cells[0]);
        } catch (const ParseError& e) {
            throw ParseError(source + ": " + e.what(), row.line);
        }
        p.values.resize(tickers.size(), kMissing);
        for (std::size_t i = 0; i < tickers.size(); ++i) {
            const auto& cell = row.cells[i + 1];
            if (cell.empty()) continue;
            const double v = csv::parse_double(cell, source + " " + tickers[i], row.line);
            if (!std::isfinite(v) || v <= 0)
                throw DataError(fmt::format("{}: non-positive price for {} on {} (line {})", source, tickers[i],
                                            p.date.iso(), row.line));
            p.values[i] = v;
        }
        parsed.push_back(std::move(p));
    }
    std::stable_sort(parsed.begin(), parsed.end(), [](const Parsed& a, const Parsed& b) { return a.date < b.date; });
    for (std::size_t i = 1; i < parsed.size(); ++i) {
        if (parsed[i].date == parsed[i - 1].date)
            throw ParseError(source + ": duplicate date " + parsed[i].date.iso(), parsed[i].line);
    }

    IngestResult result;
    std::vector<std::size_t> kept;
    for (std::size_t i = 0; i < tickers.size(); ++i) {
        Index valid = 0;
        for (const auto& p : parsed) valid += std::isnan(p.values[i]) ? 0 : 1;
        if (valid < min_points) {
            result.rejected.push_back(
                {tickers[i], valid, fmt::format("{} valid prices, fewer than {}", valid, min_points)});
        } else {
            kept.push_back(i);
        }
    }
    if (kept.empty()) throw EmptyPanelError(source + ": every asset was rejected");

    auto& panel = result.panel;
    for (const auto& p : parsed) panel.dates.push_back(p.date);
    for (auto i : kept) panel.tickers.push_back(tickers[i]);
    panel.prices.resize(static_cast<Index>(parsed.size()), static_cast<Index>(kept.size()));
    for (std::size_t r = 0; r < parsed.size(); ++r)
        for (std::size_t c = 0; c < kept.size(); ++c)
            panel.prices(static_cast<Index>(r), static_cast<Index>(c)) = parsed[r].values[kept[c]];
    panel.active = compute_active(panel.dates, panel.prices);
    return result;
}

MetaTable read_meta_csv(const std::filesystem::path& path) {
    const auto table = csv::read(path);
    const std::string source = path.string();
    static const char* const kColumns[] = {"ticker", "sector",     "shares_outstanding", "iwf",
                                           "advt",   "index_tags", "first_date",         "last_date"};
    std::vector<long> col;
    for (const char* name : kColumns) {
        col.push_back(table.column(name));
        if (col.back() < 0) throw ParseError(source + ": missing column '" + name + "'", 1);
    }
    MetaTable meta;
    for (const auto& row : table.rows) {
        auto cell = [&](int i) -> const std::string& { return row.cells[static_cast<std::size_t>(col[i])]; };
        AssetMeta m;
        m.ticker = normalize_ticker(cell(0));
        m.sector = cell(1);
        m.shares_outstanding = cell(2).empty() ? 0.0 : csv::parse_double(cell(2), source + " shares_outstanding", row.line);
        m.iwf = cell(3).empty() ? 1.0 : csv::parse_double(cell(3), source + " iwf", row.line);
        m.advt = cell(4).empty() ? 0.0 : csv::parse_double(cell(4), source + " advt", row.line);
        std::string_view tags = cell(5);
        while (!tags.empty()) {
            auto bar = tags.find('|');
            auto tag = tags.substr(0, bar);
            if (!tag.empty()) m.index_tags.emplace(tag);
            if (bar == std::string_view::npos) break;
            tags.remove_prefix(bar + 1);
        }
        try {
            m.active_window = {Date::parse(cell(6)), Date::parse(cell(7))};
        } catch (const ParseError& e) {
            throw ParseError(source + ": " + e.what(), row.line);
        }
        if (m.iwf < 0 || m.iwf > 1) throw ParseError(source + ": iwf outside [0,1] for " + m.ticker, row.line);
        if (m.active_window.last < m.active_window.first)
            throw ParseError(source + ": active window reversed for " + m.ticker, row.line);
        if (meta.count(m.ticker)) throw ParseError(source + ": duplicate ticker " + m.ticker, row.line);
        meta.emplace(m.ticker, std::move(m));
    }
    return meta;
}

PricePanel align_and_fill(std::span<const PricePanel> panels, const AlignOptions& options) {
    std::vector<Date> dates;
    std::vector<std::string> tickers;
    for (const auto& p : panels) {
        dates.insert(dates.end(), p.dates.begin(), p.dates.end());
        for (const auto& t : p.tickers) {
            if (index_of(tickers, t) >= 0) throw DataError("ticker " + t + " appears in more than one panel");
            tickers.push_back(t);
        }
    }
    std::sort(dates.begin(), dates.end());
    dates.erase(std::unique(dates.begin(), dates.end()), dates.end());

    Eigen::MatrixXd prices = Eigen::MatrixXd::Constant(static_cast<Index>(dates.size()),
                                                       static_cast<Index>(tickers.size()), kMissing);
    Index col = 0;
    for (const auto& p : panels) {
        for (Index c = 0; c < p.cols(); ++c, ++col) {
            Index r = 0;
            for (Index pr = 0; pr < p.rows(); ++pr) {
                while (dates[r] < p.dates[pr]) ++r;
                prices(r, col) = p.prices(pr, c);
            }
        }
    }

    // Forward fill strictly inside each active window.
    const auto active = compute_active(dates, prices);
    for (Index c = 0; c < prices.cols(); ++c) {
        double last = kMissing;
        const auto& window = active[static_cast<std::size_t>(c)];
        for (Index r = 0; r < prices.rows(); ++r) {
            if (!window.contains(dates[r])) continue;
            if (std::isnan(prices(r, c)))
                prices(r, c) = last;
            else
                last = prices(r, c);
        }
    }

    std::vector<Index> keep;
    for (Index r = 0; r < prices.rows(); ++r) {
        const Index present = (prices.row(r).array() == prices.row(r).array()).count();
        const bool keep_row = options.require_common_window ? present == prices.cols() : present > 0;
        if (keep_row) keep.push_back(r);
    }
    if (keep.empty() || tickers.empty()) throw EmptyPanelError("no rows remain after alignment and cleaning");

    PricePanel out;
    out.tickers = std::move(tickers);
    out.prices.resize(static_cast<Index>(keep.size()), prices.cols());
    for (std::size_t i = 0; i < keep.size(); ++i) {
        out.dates.push_back(dates[keep[i]]);
        out.prices.row(static_cast<Index>(i)) = prices.row(keep[i]);
    }
    out.active = compute_active(out.dates, out.prices);
    return out;
}

PricePanel slice_rows(const PricePanel& panel, Index first, Index last) {
    PricePanel out;
    out.dates.assign(panel.dates.begin() + first, panel.dates.begin() + last + 1);
    out.tickers = panel.tickers;
    out.prices = panel.prices.middleRows(first, last - first + 1);
    out.active = compute_active(out.dates, out.prices);
    return out;
}

ReturnsPanel log_returns(const PricePanel& panel) {
    ReturnsPanel out;
    out.tickers = panel.tickers;
    if (panel.rows() < 2) {
        out.returns.resize(0, panel.cols());
        return out;
    }
    for (Index c = 0; c < panel.cols(); ++c) {
        for (Index r = 0; r < panel.rows(); ++r) {
            const double p = panel.prices(r, c);
            if (!std::isnan(p) && !(p > 0))
                throw DataError(fmt::format("non-positive price for {} on {}", panel.tickers[c], panel.dates[r].iso()));
        }
    }
    out.dates.assign(panel.dates.begin() + 1, panel.dates.end());
    // NaN propagates through log, so gaps stay missing.
    out.returns = log_returns_of(panel.prices);
    return out;
}

PricePanel CsvDirectoryFetcher::fetch(const std::string& ticker, const DateRange& range) {
    const auto path = dir_ / (ticker + ".csv");
    if (!std::filesystem::exists(path)) throw Error("no price file for " + ticker + " at " + path.string());
    auto ingested = ingest_csv(path, 1);
    auto& panel = ingested.panel;
    const Index c = panel.column(normalize_ticker(ticker));
    if (c < 0) throw DataError(path.string() + " has no column for " + ticker);
    const Index first = panel.row_at_or_after(range.first);
    const Index last = panel.row_at_or_before(range.last);
    if (first > last) throw EmptyPanelError("no prices for " + ticker + " in requested range");
    PricePanel out;
    out.dates.assign(panel.dates.begin() + first, panel.dates.begin() + last + 1);
    out.tickers = {panel.tickers[c]};
    out.prices = panel.prices.block(first, c, last - first + 1, 1);
    out.active = compute_active(out.dates, out.prices);
    return out;
}

FetchBatch fetch_remote(PriceFetcher& fetcher, std::span<const std::string> tickers, const DateRange& range,
                        unsigned workers) {
    FetchBatch batch;
    if (tickers.empty()) return batch;
    if (workers == 0) throw ParameterError("fetch_remote needs at least one worker");

    std::vector<std::optional<PricePanel>> slots(tickers.size());
    std::vector<std::string> errors(tickers.size());
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i = next++; i < tickers.size(); i = next++) {
            try {
                slots[i] = fetcher.fetch(tickers[i], range);
            } catch (const std::exception& e) {
                errors[i] = e.what();
                if (errors[i].empty()) errors[i] = "unknown error";
            }
        }
    };
    {
        const auto n = std::min<std::size_t>(workers, tickers.size());
        std::vector<std::jthread> pool;
        pool.reserve(n);
        for (std::size_t i = 0; i < n; ++i) pool.emplace_back(work);
    }

    // Merge in input order so the result does not depend on completion order.
    for (std::size_t i = 0; i < tickers.size(); ++i) {
        if (slots[i])
            batch.panels.push_back(std::move(*slots[i]));
        else
            batch.failures.push_back({tickers[i], errors[i]});
    }
    if (batch.panels.empty()) {
        std::string msg = "every ticker failed to fetch:";
        for (const auto& f : batch.failures) msg += " [" + f.ticker + ": " + f.message + "]";
        throw FetchBatchError(msg, batch.failures);
    }
    return batch;
}

}  // namespace aegis
