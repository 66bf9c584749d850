#include <doctest.h>

#include <cstdlib>

#include "aegis/commands.hpp"
#include "aegis/config.hpp"
#include "aegis/csv.hpp"
#include "aegis/fixtures.hpp"
#include "aegis/report.hpp"
#include "oracles.hpp"

using namespace aegis;
namespace fs = std::filesystem;

namespace {

struct FixtureFiles {
    fs::path dir;
    commands::Inputs inputs;
};

const FixtureFiles& fixture_files() {
    static const FixtureFiles files = [] {
        FixtureFiles f;
        f.dir = oracle::temp_dir("cli");
        const auto fx = fixtures::synthetic_universe({.assets = 80, .years = 3});
        f.inputs = {f.dir / "prices.csv", f.dir / "meta.csv"};
        fixtures::write_prices_csv(fx.panel, f.inputs.prices);
        fixtures::write_meta_csv(fx.meta, f.inputs.meta);
        return f;
    }();
    return files;
}

config::RunConfig small_config() {
    return config::parse("target_basket_size = 23\nworkers = 2\n");
}

}  // namespace

TEST_SUITE("reporting_cli") {
    TEST_CASE("config parsing, comments and environment overrides") {
        const auto c = config::parse("# sample\nfriction_bps = 25  # bps\ndiversifier_count=22\nrelax_cap = yes\n"
                                     "start_date = 2016-03-01\n");
        CHECK(c.backtest.friction_bps == 25.0);
        CHECK(c.backtest.target_basket_size == 25);
        CHECK(c.backtest.relax_cap);
        CHECK(c.backtest.start_date == Date(2016, 3, 1));

        auto env = [](const char* name) -> const char* {
            return std::string(name) == "AEGIS_FRICTION_BPS" ? "5" : nullptr;
        };
        CHECK(config::parse("friction_bps = 25\n", env).backtest.friction_bps == 5.0);

        CHECK_THROWS_AS(config::parse("no_such_key = 1\n"), ParseError);
        CHECK_THROWS_AS(config::parse("cap = lots\n"), ParseError);
        CHECK_THROWS_AS(config::parse("just text\n"), ParseError);
        CHECK_THROWS_AS(config::parse("cap = 2\n"), ParameterError);

        const auto snap = c.snapshot();
        CHECK(snap.size() == config::keys().size());
        std::string round;
        for (const auto& [k, v] : snap) round += k + " = " + v + "\n";
        CHECK(config::parse(round).snapshot() == snap);
    }

    TEST_CASE("histogram bins") {
        const auto h = report::histogram({-0.015, -0.001, 0.0, 0.004, 0.021});
        REQUIRE(h.lower.size() == 5);
        CHECK(h.lower.front() == doctest::Approx(-0.02));
        CHECK(h.counts == std::vector<std::size_t>{1, 1, 2, 0, 1});
    }

    TEST_CASE("backtest writes six artifacts that validate, round-trip and are reproducible") {
        const auto& f = fixture_files();
        const auto out1 = f.dir / "run1", out2 = f.dir / "run2";
        const auto res = commands::cmd_backtest(small_config(), f.inputs, out1);
        commands::cmd_backtest(small_config(), f.inputs, out2);
        for (const auto& name : report::backtest_artifacts()) {
            REQUIRE(fs::exists(out1 / name));
            CHECK_MESSAGE(oracle::read_file(out1 / name) == oracle::read_file(out2 / name), name);
        }
        const auto doc = nlohmann::json::parse(oracle::read_file(out1 / "report.json"));
        CHECK(report::validate_report_json(doc).empty());
        CHECK(doc["manifest"]["fingerprints"]["prices.csv"] == report::sha256_file(f.inputs.prices));

        auto broken = doc;
        broken.erase("metrics");
        broken["schema_version"] = 99;
        CHECK(report::validate_report_json(broken).size() == 2);

        for (const auto& name : report::backtest_artifacts())
            if (name.ends_with(".csv")) CHECK_NOTHROW(csv::read(out1 / name));
        const auto periods = csv::read(out1 / "periods.csv");
        CHECK(periods.rows.size() == res.result.periods.size());
        const auto curve = ingest_csv(out1 / "equity_curve.csv", 1).panel;
        REQUIRE(curve.rows() == static_cast<Index>(res.result.equity_curve.size()));
        for (Index r = 0; r < curve.rows(); ++r) CHECK(curve.prices(r, 0) == res.result.equity_curve[r].value);
    }

    TEST_CASE("missing input names the path") {
        const auto& f = fixture_files();
        commands::Inputs bad = f.inputs;
        bad.prices = f.dir / "nope.csv";
        try {
            commands::cmd_backtest(small_config(), bad, f.dir / "bad");
            FAIL("expected a data error");
        } catch (const DataError& e) {
            CHECK(std::string(e.what()).find("nope.csv") != std::string::npos);
        }
    }

    TEST_CASE("a single-cell sweep equals the backtest metrics") {
        const auto& f = fixture_files();
        auto cfg = small_config();
        const auto bt = commands::cmd_backtest(cfg, f.inputs, f.dir / "bt");
        const auto cells = commands::cmd_sweep(cfg, f.inputs, {cfg.backtest.allocation_lookback_months},
                                               {cfg.backtest.diversifier_count}, f.dir / "sw1");
        REQUIRE(cells.size() == 1);
        REQUIRE(cells[0].ok);
        CHECK(cells[0].cagr == bt.metrics.cagr);
        CHECK(cells[0].max_drawdown == bt.metrics.max_drawdown);
    }

    TEST_CASE("an infeasible sweep cell fails alone") {
        const auto& f = fixture_files();
        const auto cells = commands::cmd_sweep(small_config(), f.inputs, {3, 6}, {12, 20}, f.dir / "sw2");
        REQUIRE(cells.size() == 4);
        for (const auto& c : cells) {
            CHECK(c.ok == (c.diversifiers == 20));
            if (!c.ok) CHECK(c.error.find("cap") != std::string::npos);
        }
        const auto table = csv::read(f.dir / "sw2" / "sweep.csv");
        CHECK(table.rows.size() == 4);
        CHECK_THROWS_AS(commands::cmd_sweep(small_config(), f.inputs, {}, {20}, f.dir / "sw3"), ParameterError);
    }

    TEST_CASE("compare aligns curves on one date axis") {
        const auto& f = fixture_files();
        const auto res = commands::cmd_compare(small_config(), f.inputs, {"aegis", "equal_weight", "aegis"}, f.dir / "cmp");
        REQUIRE(res.size() == 3);
        const auto curves = csv::read(f.dir / "cmp" / "equity_curves.csv");
        CHECK(curves.header == std::vector<std::string>{"date", "aegis", "equal_weight", "aegis_2"});
        CHECK(curves.rows.size() == res[0].equity_curve.size());
        for (const auto& row : curves.rows) CHECK(row.cells[1] == row.cells[3]);
        CHECK(csv::read(f.dir / "cmp" / "annual_net.csv").rows.size() == res[0].annual.rows.size());

        auto cfg = small_config();
        cfg.baseline.bond_proxy = "AGG";
        try {
            commands::cmd_compare(cfg, f.inputs, {"aegis", "risk_parity"}, f.dir / "cmp2");
            FAIL("expected a data error");
        } catch (const DataError& e) {
            CHECK(std::string(e.what()).find("AGG") != std::string::npos);
        }
        CHECK_THROWS_AS(commands::cmd_compare(cfg, f.inputs, {"aegis"}, f.dir / "cmp3"), ParameterError);
    }
}
