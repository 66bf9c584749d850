#include "aegis/commands.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <mutex>
#include <set>
#include <thread>

#include <fmt/format.h>

#include "aegis/baselines.hpp"

namespace aegis::commands {

namespace {

std::set<std::string> universe_of(const MetaTable& meta) {
    std::set<std::string> out;
    for (const auto& [ticker, m] : meta) out.insert(ticker);
    return out;
}

void collect_warnings(const backtest::BacktestResult& result, std::vector<std::string>& warnings) {
    std::set<std::string> seen(warnings.begin(), warnings.end());
    for (const auto& p : result.periods)
        for (const auto& d : p.diagnostics) {
            std::string w = p.period.test_start.iso() + ": " + d;
            if (seen.insert(w).second) warnings.push_back(std::move(w));
        }
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

LoadedData load(const Inputs& inputs) {
    for (const auto* p : {&inputs.prices, &inputs.meta})
        if (!std::filesystem::is_regular_file(*p)) throw DataError("input file not found: " + p->string());
    LoadedData data;
    auto ingested = ingest_csv(inputs.prices);
    data.panel = std::move(ingested.panel);
    for (const auto& r : ingested.rejected)
        data.manifest.warnings.push_back(fmt::format("rejected {}: {}", r.ticker, r.reason));
    data.meta = read_meta_csv(inputs.meta);
    data.manifest.fingerprints[inputs.prices.filename().string()] = report::sha256_file(inputs.prices);
    data.manifest.fingerprints[inputs.meta.filename().string()] = report::sha256_file(inputs.meta);
    return data;
}

std::unique_ptr<backtest::Strategy> make_strategy(const std::string& name, const config::RunConfig& config,
                                                  const MetaTable& meta) {
    if (name == "aegis") return std::make_unique<backtest::AegisStrategy>(config.backtest, meta);
    switch (baselines::parse_kind(name)) {
        case baselines::Kind::Csm:
            return std::make_unique<baselines::CsmStrategy>(config.backtest, config.baseline, universe_of(meta));
        case baselines::Kind::RiskParity: return std::make_unique<baselines::RiskParityStrategy>(config.baseline);
        case baselines::Kind::EqualWeight:
            return std::make_unique<baselines::EqualWeightStrategy>(config.backtest, universe_of(meta));
    }
    throw ParameterError("unknown strategy " + name);
}

metrics::MetricsReport evaluate(const backtest::BacktestResult& result, const config::RunConfig& config) {
    const auto samples = result.samples();
    return metrics::evaluate(samples, config.backtest.rf_annual,
                             metrics::kMonthsPerYear / config.backtest.rebalance_frequency_months,
                             config.backtest.outlier_cutoff);
}

BacktestOutput cmd_backtest(const config::RunConfig& config, const Inputs& inputs, const std::filesystem::path& out_dir) {
    const auto t0 = std::chrono::steady_clock::now();
    auto data = load(inputs);
    auto strategy = make_strategy(config.strategy, config, data.meta);
    BacktestOutput out;
    out.result = backtest::run(config.backtest, data.panel, *strategy);
    out.metrics = evaluate(out.result, config);
    data.manifest.config = config.snapshot();
    collect_warnings(out.result, data.manifest.warnings);
    data.manifest.wall_clock_seconds = seconds_since(t0);
    report::write_backtest_artifacts(out_dir, data.manifest, out.result, out.metrics);
    return out;
}

std::vector<report::SweepCell> cmd_sweep(const config::RunConfig& config, const Inputs& inputs,
                                         const std::vector<int>& lookbacks, const std::vector<std::size_t>& diversifiers,
                                         const std::filesystem::path& out_dir) {
    if (lookbacks.empty() || diversifiers.empty()) throw ParameterError("sweep grid is empty");
    const auto t0 = std::chrono::steady_clock::now();
    const auto data = load(inputs);

    std::vector<report::SweepCell> cells;
    for (int lb : lookbacks)
        for (std::size_t d : diversifiers) {
            auto& cell = cells.emplace_back();
            cell.lookback_months = lb;
            cell.diversifiers = d;
        }

    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i = next++; i < cells.size(); i = next++) {
            auto& cell = cells[i];
            try {
                config::RunConfig c = config;
                c.backtest.allocation_lookback_months = cell.lookback_months;
                c.backtest.diversifier_count = cell.diversifiers;
                c.backtest.target_basket_size = cell.diversifiers + 3;
                auto strategy = make_strategy(c.strategy, c, data.meta);
                const auto result = backtest::run(c.backtest, data.panel, *strategy);
                const auto m = evaluate(result, c);
                cell.cagr = m.cagr;
                cell.max_drawdown = m.max_drawdown;
                double vol = 0.0;
                for (const auto& r : m.annual.rows) vol += r.ann_vol;
                cell.avg_vol = m.annual.rows.empty() ? 0.0 : vol / static_cast<double>(m.annual.rows.size());
                cell.ok = true;
            } catch (const std::exception& e) {
                cell.ok = false;
                cell.error = e.what();
            }
        }
    };
    {
        const auto n = std::min<std::size_t>(static_cast<std::size_t>(std::max(config.workers, 1)), cells.size());
        std::vector<std::jthread> pool;
        for (std::size_t k = 0; k < n; ++k) pool.emplace_back(work);
    }

    std::filesystem::create_directories(out_dir);
    report::write_sweep_csv(out_dir / "sweep.csv", cells);
    auto manifest = data.manifest;
    manifest.config = config.snapshot();
    for (const auto& c : cells)
        if (!c.ok) manifest.warnings.push_back(fmt::format("cell {}m/{}: {}", c.lookback_months, c.diversifiers, c.error));
    report::write_text(out_dir / "sweep_manifest.json",
                       nlohmann::json{{"schema_version", report::kSchemaVersion},
                                      {"manifest", report::manifest_json(manifest)}}
                               .dump(2) + "\n");
    report::write_text(out_dir / "run_timing.json",
                       nlohmann::json{{"wall_clock_seconds", seconds_since(t0)}}.dump(2) + "\n");
    return cells;
}

std::vector<backtest::BacktestResult> cmd_compare(const config::RunConfig& config, const Inputs& inputs,
                                                  const std::vector<std::string>& strategies,
                                                  const std::filesystem::path& out_dir) {
    if (strategies.size() < 2) throw ParameterError("compare needs at least two strategies");
    const auto t0 = std::chrono::steady_clock::now();
    auto data = load(inputs);
    std::vector<std::unique_ptr<backtest::Strategy>> built;
    for (const auto& name : strategies) built.push_back(make_strategy(name, config, data.meta));
    for (auto& s : built) s->prepare(data.panel.tickers);  // fail before any run starts

    std::vector<backtest::BacktestResult> results;
    for (auto& s : built) {
        results.push_back(backtest::run(config.backtest, data.panel, *s));
        collect_warnings(results.back(), data.manifest.warnings);
    }
    data.manifest.config = config.snapshot();
    data.manifest.wall_clock_seconds = seconds_since(t0);
    report::write_compare(out_dir, data.manifest, results);
    report::write_text(out_dir / "run_timing.json",
                       nlohmann::json{{"wall_clock_seconds", data.manifest.wall_clock_seconds}}.dump(2) + "\n");
    return results;
}

}  // namespace aegis::commands
