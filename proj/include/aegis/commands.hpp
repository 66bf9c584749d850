#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "aegis/backtest_engine.hpp"
#include "aegis/config.hpp"
#include "aegis/metrics.hpp"
#include "aegis/report.hpp"

namespace aegis::commands {

struct Inputs {
    std::filesystem::path prices;
    std::filesystem::path meta;
};

struct LoadedData {
    PricePanel panel;
    MetaTable meta;
    report::RunManifest manifest;  // fingerprints and ingest warnings filled in
};

/// Reads and fingerprints both input files. A missing file raises DataError
/// naming the path.
LoadedData load(const Inputs& inputs);

/// Builds a strategy by name: aegis, csm, risk_parity or equal_weight.
/// Baselines trade the metadata universe.
std::unique_ptr<backtest::Strategy> make_strategy(const std::string& name, const config::RunConfig& config,
                                                  const MetaTable& meta);

/// Full-sample metrics of a run (periods per year follow the rebalance frequency).
metrics::MetricsReport evaluate(const backtest::BacktestResult& result, const config::RunConfig& config);

struct BacktestOutput {
    backtest::BacktestResult result;
    metrics::MetricsReport metrics;
};

BacktestOutput cmd_backtest(const config::RunConfig& config, const Inputs& inputs,
                            const std::filesystem::path& out_dir);

/// One backtest per (look-back, diversifier count) cell, run on a worker
/// pool of `config.workers` threads. Failed cells are recorded, not thrown.
std::vector<report::SweepCell> cmd_sweep(const config::RunConfig& config, const Inputs& inputs,
                                         const std::vector<int>& lookbacks, const std::vector<std::size_t>& diversifiers,
                                         const std::filesystem::path& out_dir);

std::vector<backtest::BacktestResult> cmd_compare(const config::RunConfig& config, const Inputs& inputs,
                                                  const std::vector<std::string>& strategies,
                                                  const std::filesystem::path& out_dir);

}  // namespace aegis::commands
