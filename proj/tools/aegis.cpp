#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "aegis/commands.hpp"
#include "aegis/config.hpp"
#include "aegis/fixtures.hpp"

namespace fs = std::filesystem;
using namespace aegis;

namespace {

const char* error_kind(const std::exception& e) {
    if (dynamic_cast<const ParseError*>(&e)) return "parse_error";
    if (dynamic_cast<const DataError*>(&e)) return "data_error";
    if (dynamic_cast<const DomainError*>(&e)) return "domain_error";
    if (dynamic_cast<const ParameterError*>(&e)) return "parameter_error";
    if (dynamic_cast<const InfeasibleError*>(&e)) return "infeasible";
    if (dynamic_cast<const EmptyPanelError*>(&e)) return "empty_panel";
    if (dynamic_cast<const SelectionError*>(&e)) return "selection_error";
    return "error";
}

struct Common {
    std::string config;
    std::string prices;
    std::string meta;
    std::string out = "out";
    bool relax_cap = false;
    bool seed_fixtures = false;
};

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("--config", c.config, "key = value configuration file");
    cmd->add_option("--prices", c.prices, "wide price CSV")->required();
    cmd->add_option("--meta", c.meta, "asset metadata CSV")->required();
    cmd->add_option("--out", c.out, "output directory");
    cmd->add_flag("--relax-cap", c.relax_cap, "raise the weight cap to 1/N when N * cap < 1");
    cmd->add_flag("--seed-fixtures", c.seed_fixtures, "write the synthetic fixture to --prices and --meta first");
}

config::RunConfig prepare(const Common& c) {
    auto env = [](const char* name) -> const char* { return std::getenv(name); };
    auto cfg = c.config.empty() ? config::parse("", env) : config::load(c.config, env);
    if (c.relax_cap) cfg.backtest.relax_cap = true;
    if (c.seed_fixtures) {
        const auto fx = fixtures::synthetic_universe();
        for (const auto* p : {&c.prices, &c.meta})
            if (auto parent = fs::path(*p).parent_path(); !parent.empty()) fs::create_directories(parent);
        fixtures::write_prices_csv(fx.panel, c.prices);
        fixtures::write_meta_csv(fx.meta, c.meta);
    }
    return cfg;
}

template <typename T>
std::vector<T> parse_list(const std::string& text) {
    std::vector<T> out;
    std::stringstream ss(text);
    for (std::string item; std::getline(ss, item, ',');) {
        if (item.empty()) continue;
        try {
            const long long v = std::stoll(item);
            if (v <= 0) throw std::out_of_range(item);
            out.push_back(static_cast<T>(v));
        } catch (const std::exception&) {
            throw ParameterError("expected a comma-separated list of positive integers, got '" + text + "'");
        }
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Walk-forward momentum portfolio backtester"};
    app.set_version_flag("--version", AEGIS_VERSION);
    app.require_subcommand(1);

    Common common;
    auto* backtest = app.add_subcommand("backtest", "run one backtest and write the report artifacts");
    add_common(backtest, common);

    auto* sweep = app.add_subcommand("sweep", "allocation look-back x diversifier count robustness grid");
    add_common(sweep, common);
    std::string lookbacks = "3,6,12", diversifiers = "22,47,72";
    sweep->add_option("--lookbacks", lookbacks, "allocation look-backs in months");
    sweep->add_option("--diversifiers", diversifiers, "diversifier counts");

    auto* compare = app.add_subcommand("compare", "run several strategies on identical data");
    add_common(compare, common);
    std::vector<std::string> strategies{"aegis", "equal_weight"};
    compare->add_option("--strategies", strategies, "aegis, csm, risk_parity, equal_weight")->delimiter(',');

    CLI11_PARSE(app, argc, argv);

    try {
        const auto cfg = prepare(common);
        const commands::Inputs inputs{common.prices, common.meta};
        if (*backtest) {
            const auto out = commands::cmd_backtest(cfg, inputs, common.out);
            std::cout << fmt::format("{}: {} periods, CAGR {:.2f}%, max drawdown {:.2f}%, final value {:.4f}\n",
                                     out.result.strategy, out.result.periods.size(), 100 * out.metrics.cagr,
                                     100 * out.metrics.max_drawdown, out.metrics.final_value);
        } else if (*sweep) {
            const auto cells = commands::cmd_sweep(cfg, inputs, parse_list<int>(lookbacks),
                                                   parse_list<std::size_t>(diversifiers), common.out);
            int failed = 0;
            for (const auto& c : cells) {
                if (c.ok)
                    std::cout << fmt::format("{:>3}m x {:>3}: CAGR {:7.2f}%  MaxDD {:7.2f}%  AvgVol {:6.2f}%\n",
                                             c.lookback_months, c.diversifiers, 100 * c.cagr, 100 * c.max_drawdown,
                                             100 * c.avg_vol);
                else
                    std::cout << fmt::format("{:>3}m x {:>3}: failed ({})\n", c.lookback_months, c.diversifiers,
                                             c.error);
                failed += c.ok ? 0 : 1;
            }
            if (failed == static_cast<int>(cells.size())) return 3;
        } else if (*compare) {
            const auto results = commands::cmd_compare(cfg, inputs, strategies, common.out);
            for (const auto& r : results)
                std::cout << fmt::format("{}: final value {:.4f}\n", r.strategy, r.equity_curve.back().value);
        }
    } catch (const std::exception& e) {
        nlohmann::json err{{"error", {{"kind", error_kind(e)}, {"message", e.what()}}}};
        std::cerr << err.dump() << "\n";
        return 2;
    }
    return 0;
}
