#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "aegis/backtest_engine.hpp"
#include "aegis/metrics.hpp"

namespace aegis::report {

inline constexpr int kSchemaVersion = 1;

/// Hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

struct RunManifest {
    std::vector<std::pair<std::string, std::string>> config;
    std::map<std::string, std::string> fingerprints;  // file name -> sha256
    std::string engine_version = AEGIS_VERSION;
    double wall_clock_seconds = 0.0;  // written to run_timing.json only
    std::vector<std::string> warnings;
};

nlohmann::json manifest_json(const RunManifest& manifest);
nlohmann::json ratio_json(const metrics::Ratio& ratio);
nlohmann::json metrics_json(const metrics::MetricsReport& m);
nlohmann::json report_json(const RunManifest& manifest, const backtest::BacktestResult& result,
                           const metrics::MetricsReport& m);

/// Problems found in a report document; empty when it matches the schema.
std::vector<std::string> validate_report_json(const nlohmann::json& doc);

/// Names of the artifacts written by write_backtest_artifacts.
const std::vector<std::string>& backtest_artifacts();

/// report.json, periods.csv, equity_curve.csv, drawdown.csv,
/// monthly_histogram.csv and annual_table.csv, plus run_timing.json.
void write_backtest_artifacts(const std::filesystem::path& out_dir, const RunManifest& manifest,
                              const backtest::BacktestResult& result, const metrics::MetricsReport& m);

/// Histogram of period net returns in bins of `width`, bin edges at integer
/// multiples of `width`.
struct Histogram {
    std::vector<double> lower;
    std::vector<std::size_t> counts;
    double width = 0.01;
};
Histogram histogram(const std::vector<double>& values, double width = 0.01);

struct SweepCell {
    int lookback_months = 0;
    std::size_t diversifiers = 0;
    bool ok = false;
    std::string error;
    double cagr = 0.0;
    double max_drawdown = 0.0;
    double avg_vol = 0.0;  // mean of the annual volatilities
};

void write_sweep_csv(const std::filesystem::path& path, const std::vector<SweepCell>& cells);

/// Equity curves of several runs on a shared date axis, and their per-year
/// compounded net returns.
void write_compare(const std::filesystem::path& out_dir, const RunManifest& manifest,
                   const std::vector<backtest::BacktestResult>& results);

void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace aegis::report
