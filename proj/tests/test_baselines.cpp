#include <doctest.h>

#include <numeric>
#include <random>

#include <fmt/format.h>

#include "aegis/baselines.hpp"
#include "aegis/fixtures.hpp"
#include "oracles.hpp"

using namespace aegis;
using namespace aegis::baselines;

namespace {

ReturnsPanel panel_with_finals(const std::vector<double>& total, Index days = 60) {
    ReturnsPanel p;
    p.returns = Eigen::MatrixXd::Zero(days, static_cast<Index>(total.size()));
    for (std::size_t c = 0; c < total.size(); ++c) {
        p.returns(0, static_cast<Index>(c)) = total[c];
        p.returns(days - 1, static_cast<Index>(c)) = 0.5;  // inside the skip window: ignored
        p.tickers.push_back(fmt::format("T{:02d}", c));
    }
    for (Index t = 0; t < days; ++t) p.dates.push_back(Date(2020, 1, 1));
    return p;
}

}  // namespace

TEST_SUITE("baselines") {
    TEST_CASE("CSM with ten assets holds the single best") {
        const auto p = panel_with_finals({0.1, 0.5, -0.2, 0.3, 0.05, 0.0, 0.2, 0.45, -0.1, 0.01});
        const auto w = csm_weights(p, {});
        REQUIRE(w.tickers == std::vector<std::string>{"T01"});
        CHECK(w.weights(0) == 1.0);
    }

    TEST_CASE("CSM breaks boundary ties by ticker") {
        std::vector<double> totals(20, 0.1);
        totals[0] = 0.9;
        totals[5] = 0.2;
        totals[3] = 0.2;
        const auto w = csm_weights(panel_with_finals(totals), {});
        CHECK(w.tickers == std::vector<std::string>{"T00", "T03"});
        CHECK(w.weights(1) == 0.5);
    }

    TEST_CASE("CSM ranking matches an argsort oracle") {
        std::mt19937_64 rng(2);
        std::uniform_real_distribution<double> u(-0.5, 0.5);
        for (int trial = 0; trial < 20; ++trial) {
            std::vector<double> totals(20);
            for (auto& v : totals) v = u(rng);
            BaselineConfig cfg;
            cfg.csm_top_fraction = 0.25;
            const auto w = csm_weights(panel_with_finals(totals), cfg);
            std::vector<std::size_t> idx(20);
            std::iota(idx.begin(), idx.end(), 0);
            std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return totals[a] > totals[b]; });
            std::vector<std::string> expect;
            for (int k = 0; k < 5; ++k) expect.push_back(fmt::format("T{:02d}", idx[static_cast<std::size_t>(k)]));
            std::sort(expect.begin(), expect.end());
            CHECK(w.tickers == expect);
            CHECK(w.weights.sum() == doctest::Approx(1.0));
        }
    }

    TEST_CASE("CSM is invariant to uniform price scaling") {
        const auto fx = fixtures::synthetic_universe({.assets = 30, .years = 2});
        const auto a = log_returns(fx.panel);
        auto scaled = fx.panel;
        scaled.prices *= 3.7;
        const auto b = log_returns(scaled);
        auto trim = [](ReturnsPanel p) {
            const Index start = p.returns.rows() - 252;
            p.returns = p.returns.bottomRows(252).eval();
            p.dates.erase(p.dates.begin(), p.dates.begin() + start);
            return p;
        };
        CHECK(csm_weights(trim(a), {}).tickers == csm_weights(trim(b), {}).tickers);
    }

    TEST_CASE("CSM on an empty universe holds cash") {
        ReturnsPanel empty;
        empty.returns.resize(60, 0);
        empty.dates.assign(60, Date(2020, 1, 1));
        CHECK(csm_weights(empty, {}).tickers.empty());
        BaselineConfig bad;
        bad.csm_top_fraction = 0;
        CHECK_THROWS_AS(bad.validate(), ParameterError);
    }

    TEST_CASE("risk parity inverse volatility") {
        std::mt19937_64 rng(4);
        std::normal_distribution<double> z(0, 0.01);
        const Eigen::VectorXd x = Eigen::VectorXd::NullaryExpr(63, [&] { return z(rng); });
        const auto eq = risk_parity_weights(x, x, 63);
        CHECK(eq(0) == doctest::Approx(0.5));
        const Eigen::VectorXd twice = 2 * x;
        const auto w = risk_parity_weights(twice, x, 63);
        CHECK(w(0) == doctest::Approx(1.0 / 3).epsilon(1e-14));
        CHECK(w(1) == doctest::Approx(2.0 / 3).epsilon(1e-14));
        const Eigen::VectorXd tiny = 1e-9 * x;
        const auto capped = risk_parity_weights(x, tiny, 63);
        CHECK(capped(0) == doctest::Approx(0.01));
        CHECK(capped(1) == doctest::Approx(0.99));
        const auto flat = risk_parity_weights(x, Eigen::VectorXd::Zero(63), 63);
        CHECK(flat(1) == doctest::Approx(0.99));
        const auto swapped = risk_parity_weights(tiny, x, 63);
        CHECK(swapped(0) == capped(1));
        CHECK_THROWS_AS(risk_parity_weights(x, x, 100), DataError);
    }

    TEST_CASE("baseline strategies run under the backtest protocol") {
        const auto fx = fixtures::synthetic_universe({.assets = 30, .years = 2});
        backtest::BacktestConfig cfg;
        cfg.target_basket_size = 23;
        cfg.diversifier_count = 20;
        std::set<std::string> universe;
        for (const auto& [t, m] : fx.meta) universe.insert(t);

        EqualWeightStrategy ew(cfg, universe);
        CsmStrategy csm(cfg, {}, universe);
        RiskParityStrategy rp({});
        for (backtest::Strategy* s : std::initializer_list<backtest::Strategy*>{&ew, &csm, &rp}) {
            const auto res = backtest::run(cfg, fx.panel, *s);
            CHECK(res.periods.size() == 11);
            for (const auto& p : res.periods) {
                CHECK(p.weights.weights.sum() == doctest::Approx(1.0));
                CHECK(p.weights.weights.minCoeff() >= 0.0);
            }
        }
        BaselineConfig missing;
        missing.bond_proxy = "AGG";
        RiskParityStrategy bad(missing);
        try {
            backtest::run(cfg, fx.panel, bad);
            FAIL("expected a data error");
        } catch (const DataError& e) {
            CHECK(std::string(e.what()).find("AGG") != std::string::npos);
        }
    }

    TEST_CASE("kind names") {
        CHECK(parse_kind("CSM") == Kind::Csm);
        CHECK(parse_kind("risk_parity") == Kind::RiskParity);
        CHECK(std::string(to_string(Kind::EqualWeight)) == "equal_weight");
        CHECK_THROWS_AS(parse_kind("magic"), ParameterError);
    }
}
