#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "aegis/backtest_engine.hpp"
#include "aegis/baselines.hpp"

namespace aegis::config {

/// Everything a CLI run needs besides the data files.
struct RunConfig {
    backtest::BacktestConfig backtest;
    baselines::BaselineConfig baseline;
    std::string strategy = "aegis";  // aegis | csm | risk_parity | equal_weight
    int workers = 4;                 // sweep worker pool size

    /// Every key with its effective value, in key order.
    std::vector<std::pair<std::string, std::string>> snapshot() const;
};

using EnvLookup = std::function<const char*(const char*)>;

/// Applies one `key = value` setting. Throws ParameterError for unknown keys
/// or malformed values.
void apply(RunConfig& config, std::string_view key, std::string_view value);

/// Flat `key = value` text; `#` starts a comment. Each key may be overridden
/// by an environment variable `AEGIS_<KEY>` (upper case).
RunConfig parse(std::string_view text, const EnvLookup& env = {});
RunConfig load(const std::filesystem::path& path, const EnvLookup& env = {});

/// Names of all recognised keys.
const std::vector<std::string>& keys();

}  // namespace aegis::config
