#include <doctest.h>

#include <atomic>
#include <chrono>
#include <cmath>
#include <mutex>
#include <thread>

#include "aegis/market_data.hpp"
#include "oracles.hpp"

using namespace aegis;

namespace {

PricePanel single(const std::string& ticker, std::vector<Date> dates, std::vector<double> prices) {
    PricePanel p;
    p.dates = std::move(dates);
    p.tickers = {ticker};
    p.prices = Eigen::Map<Eigen::VectorXd>(prices.data(), static_cast<Index>(prices.size()));
    p.active = {{p.dates.front(), p.dates.back()}};
    return p;
}

std::string series_csv(int n_a, int n_b) {
    std::string text = "date,AAA,BBB\n";
    const int n = std::max(n_a, n_b);
    const auto days = business_days(Date(2020, 1, 1), Date(2020, 12, 31));
    for (int i = 0; i < n; ++i) {
        text += days[static_cast<std::size_t>(i)].iso() + ",";
        text += (i < n_a ? std::to_string(10 + i) : std::string()) + ",";
        text += (i < n_b ? std::to_string(20 + i) : std::string()) + "\n";
    }
    return text;
}

class FakeFetcher final : public PriceFetcher {
public:
    std::atomic<int> in_flight{0}, peak{0};
    PricePanel fetch(const std::string& ticker, const DateRange& range) override {
        const int now = ++in_flight;
        int seen = peak.load();
        while (now > seen && !peak.compare_exchange_weak(seen, now)) {
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(5));
        --in_flight;
        if (ticker.starts_with("BAD")) throw DataError("no such ticker " + ticker);
        const double base = static_cast<double>(ticker.size() + static_cast<unsigned char>(ticker[0]));
        return single(ticker, {range.first, range.last}, {base, base + 1});
    }
};

}  // namespace

TEST_SUITE("market_data") {
    TEST_CASE("normalize_ticker") {
        CHECK(normalize_ticker("BRK.B") == "BRK-B");
        CHECK(normalize_ticker("AAPL") == "AAPL");
        CHECK(normalize_ticker("brk-b") == "BRK-B");
        CHECK(normalize_ticker(" msft ") == "MSFT");
        CHECK_THROWS_AS(normalize_ticker("  "), ParameterError);
    }

    TEST_CASE("ingest_csv keeps assets with at least min_points prices") {
        const auto dir = oracle::temp_dir("ingest");
        oracle::write_file(dir / "p.csv", series_csv(19, 20));
        const auto res = ingest_csv(dir / "p.csv", 20);
        REQUIRE(res.panel.tickers == std::vector<std::string>{"BBB"});
        REQUIRE(res.rejected.size() == 1);
        CHECK(res.rejected[0].ticker == "AAA");
        CHECK(res.rejected[0].valid_points == 19);
        CHECK(res.panel.rows() == 20);

        oracle::write_file(dir / "q.csv", series_csv(20, 20));
        CHECK(ingest_csv(dir / "q.csv", 20).panel.cols() == 2);
    }

    TEST_CASE("ingest_csv rejects duplicate dates naming the date") {
        const auto dir = oracle::temp_dir("dup");
        oracle::write_file(dir / "p.csv", "date,AAA\n2020-01-02,1\n2020-01-03,2\n2020-01-02,3\n");
        try {
            ingest_csv(dir / "p.csv", 1);
            FAIL("expected a parse error");
        } catch (const ParseError& e) {
            CHECK(std::string(e.what()).find("2020-01-02") != std::string::npos);
        }
    }

    TEST_CASE("ingest_csv validates prices and headers") {
        const auto dir = oracle::temp_dir("bad");
        oracle::write_file(dir / "neg.csv", "date,AAA\n2020-01-02,1\n2020-01-03,-2\n");
        CHECK_THROWS_AS(ingest_csv(dir / "neg.csv", 1), DataError);
        oracle::write_file(dir / "hdr.csv", "day,AAA\n2020-01-02,1\n");
        CHECK_THROWS_AS(ingest_csv(dir / "hdr.csv", 1), ParseError);
        oracle::write_file(dir / "date.csv", "date,AAA\n2020-13-02,1\n");
        CHECK_THROWS_AS(ingest_csv(dir / "date.csv", 1), ParseError);
        oracle::write_file(dir / "few.csv", "date,AAA\n2020-01-02,1\n");
        CHECK_THROWS_AS(ingest_csv(dir / "few.csv", 2), EmptyPanelError);
        CHECK_THROWS(ingest_csv(dir / "missing.csv", 1));
    }

    TEST_CASE("ingest_csv sorts rows and normalizes ticker headers") {
        const auto dir = oracle::temp_dir("sort");
        oracle::write_file(dir / "p.csv", "date,brk.b\r\n2020-01-03,2\r\n2020-01-02,1\r\n");
        const auto p = ingest_csv(dir / "p.csv", 1).panel;
        CHECK(p.tickers[0] == "BRK-B");
        CHECK(p.dates[0] == Date(2020, 1, 2));
        CHECK(p.prices(0, 0) == 1.0);
    }

    TEST_CASE("align_and_fill forward-fills inside the active window only") {
        const Date d1(2020, 1, 6), d2(2020, 1, 7), d3(2020, 1, 8), d4(2020, 1, 9), d5(2020, 1, 10);
        const auto market = single("MKT", {d1, d2, d3, d4, d5}, {1, 2, 3, 4, 5});
        const auto gappy = single("GAP", {d1, d3}, {10, 12});
        const auto ipo = single("IPO", {d5}, {7});
        const std::vector<PricePanel> panels{market, gappy, ipo};
        const auto out = align_and_fill(panels);
        REQUIRE(out.rows() == 5);
        const Index g = out.column("GAP"), i = out.column("IPO"), m = out.column("MKT");
        CHECK(out.prices(1, g) == 10.0);
        CHECK(out.prices(2, g) == 12.0);
        CHECK(std::isnan(out.prices(3, g)));  // beyond its last date: not filled
        for (Index r = 0; r < 4; ++r) CHECK(std::isnan(out.prices(r, i)));
        CHECK(out.prices(4, i) == 7.0);
        for (Index r = 0; r < 5; ++r) CHECK(out.prices(r, m) == static_cast<double>(r + 1));
        CHECK_NOTHROW(out.validate());
    }

    TEST_CASE("align_and_fill strict mode needs a common window") {
        const auto a = single("A", {Date(2020, 1, 6), Date(2020, 1, 7)}, {1, 2});
        const auto b = single("B", {Date(2020, 2, 6), Date(2020, 2, 7)}, {1, 2});
        const std::vector<PricePanel> panels{a, b};
        CHECK_THROWS_AS(align_and_fill(panels, {.require_common_window = true}), EmptyPanelError);
        CHECK(align_and_fill(panels).rows() == 4);
        const std::vector<PricePanel> dup{a, a};
        CHECK_THROWS_AS(align_and_fill(dup), DataError);
    }

    TEST_CASE("log_returns") {
        const Date d1(2020, 1, 6), d2(2020, 1, 7), d3(2020, 1, 8);
        CHECK(log_returns(single("A", {d1, d2}, {100, 100})).returns(0, 0) == 0.0);
        CHECK(log_returns(single("A", {d1, d2}, {100, 100 * std::exp(1.0)})).returns(0, 0) == doctest::Approx(1.0).epsilon(1e-15));
        const auto r = log_returns(single("A", {d1, d2, d3}, {100, 110, 99}));
        CHECK(r.returns(0, 0) == doctest::Approx(std::log(1.1)).epsilon(1e-15));
        CHECK(r.returns(1, 0) == doctest::Approx(std::log(0.9)).epsilon(1e-15));
        CHECK(r.dates.front() == d2);
    }

    TEST_CASE("fetch_remote collects failures and merges in input order") {
        FakeFetcher fetcher;
        const DateRange range{Date(2020, 1, 6), Date(2020, 1, 7)};
        const std::vector<std::string> tickers{"AAA", "BAD1", "CCC"};
        const auto batch = fetch_remote(fetcher, tickers, range, 20);
        REQUIRE(batch.panels.size() == 2);
        CHECK(batch.panels[0].tickers[0] == "AAA");
        CHECK(batch.panels[1].tickers[0] == "CCC");
        REQUIRE(batch.failures.size() == 1);
        CHECK(batch.failures[0].ticker == "BAD1");

        const auto seq = fetch_remote(fetcher, tickers, range, 1);
        REQUIRE(seq.panels.size() == batch.panels.size());
        for (std::size_t k = 0; k < seq.panels.size(); ++k) CHECK(seq.panels[k].prices == batch.panels[k].prices);

        CHECK(fetch_remote(fetcher, std::span<const std::string>{}, range).panels.empty());
        const std::vector<std::string> bad{"BAD1", "BAD2"};
        CHECK_THROWS_AS(fetch_remote(fetcher, bad, range), FetchBatchError);
    }

    TEST_CASE("fetch_remote bounds concurrency by the worker count") {
        FakeFetcher fetcher;
        std::vector<std::string> tickers;
        for (int i = 0; i < 40; ++i) tickers.push_back("T" + std::to_string(i));
        fetch_remote(fetcher, tickers, {Date(2020, 1, 6), Date(2020, 1, 7)}, 3);
        CHECK(fetcher.peak.load() <= 3);
        CHECK(fetcher.peak.load() >= 1);
    }

    TEST_CASE("CsvDirectoryFetcher reads one file per ticker") {
        const auto dir = oracle::temp_dir("fetchdir");
        oracle::write_file(dir / "AAA.csv", "date,AAA\n2020-01-02,1\n2020-01-03,2\n2020-02-03,3\n");
        CsvDirectoryFetcher fetcher(dir);
        const auto p = fetcher.fetch("AAA", {Date(2020, 1, 1), Date(2020, 1, 31)});
        CHECK(p.rows() == 2);
        CHECK_THROWS(fetcher.fetch("ZZZ", {Date(2020, 1, 1), Date(2020, 1, 31)}));
    }
}
