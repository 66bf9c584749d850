#include "aegis/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "aegis/csv.hpp"

namespace aegis::config {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

template <typename Int>
Int to_int(std::string_view key, std::string_view v) {
    Int out{};
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size())
        throw ParameterError(fmt::format("config key '{}': expected an integer, got '{}'", key, v));
    return out;
}

double to_double(std::string_view key, std::string_view v) {
    try {
        return csv::parse_double(v, std::string(key), 0);
    } catch (const ParseError&) {
        throw ParameterError(fmt::format("config key '{}': expected a number, got '{}'", key, v));
    }
}

bool to_bool(std::string_view key, std::string_view v) {
    std::string s(v);
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    if (s == "true" || s == "1" || s == "yes") return true;
    if (s == "false" || s == "0" || s == "no") return false;
    throw ParameterError(fmt::format("config key '{}': expected true/false, got '{}'", key, v));
}

std::optional<Date> to_date(std::string_view key, std::string_view v) {
    if (v.empty()) return std::nullopt;
    try {
        return Date::parse(v);
    } catch (const ParseError&) {
        throw ParameterError(fmt::format("config key '{}': expected YYYY-MM-DD, got '{}'", key, v));
    }
}

}  // namespace

const std::vector<std::string>& keys() {
    static const std::vector<std::string> k = {
        "allocation_lookback_months", "bond_proxy",        "cap",
        "csm_top_fraction",           "diversifier_count", "end_date",
        "friction_bps",               "max_iterations",    "outlier_cutoff",
        "rebalance_frequency_months", "relative_tolerance", "relax_cap",
        "rf_annual",                  "rp_vol_lookback_months", "selection_lookback_months",
        "skip_days",                  "start_date",        "stock_proxy",
        "strategy",                   "target_basket_size", "workers"};
    return k;
}

void apply(RunConfig& c, std::string_view key, std::string_view raw) {
    const std::string_view v = trim(raw);
    auto& b = c.backtest;
    if (key == "selection_lookback_months") b.selection_lookback_months = to_int<int>(key, v);
    else if (key == "allocation_lookback_months") b.allocation_lookback_months = to_int<int>(key, v);
    else if (key == "rebalance_frequency_months") {
        b.rebalance_frequency_months = to_int<int>(key, v);
        c.baseline.rebalance_frequency_months = b.rebalance_frequency_months;
    } else if (key == "skip_days") {
        b.skip_days = to_int<Index>(key, v);
        c.baseline.csm_skip_days = b.skip_days;
    } else if (key == "target_basket_size") {
        b.target_basket_size = to_int<std::size_t>(key, v);
        if (b.target_basket_size < 3) throw ParameterError("target_basket_size must be >= 3");
        b.diversifier_count = b.target_basket_size - 3;
    } else if (key == "diversifier_count") {
        b.diversifier_count = to_int<std::size_t>(key, v);
        b.target_basket_size = b.diversifier_count + 3;
    } else if (key == "friction_bps") b.friction_bps = to_double(key, v);
    else if (key == "rf_annual") b.rf_annual = to_double(key, v);
    else if (key == "cap") b.cap = to_double(key, v);
    else if (key == "relax_cap") b.relax_cap = to_bool(key, v);
    else if (key == "outlier_cutoff") b.outlier_cutoff = to_double(key, v);
    else if (key == "start_date") b.start_date = to_date(key, v);
    else if (key == "end_date") b.end_date = to_date(key, v);
    else if (key == "max_iterations") b.solver.max_iterations = to_int<int>(key, v);
    else if (key == "relative_tolerance") b.solver.relative_tolerance = to_double(key, v);
    else if (key == "strategy") {
        std::string s(v);
        if (s != "aegis") baselines::parse_kind(s);
        c.strategy = s;
    } else if (key == "csm_top_fraction") c.baseline.csm_top_fraction = to_double(key, v);
    else if (key == "rp_vol_lookback_months") c.baseline.rp_vol_lookback_months = to_int<int>(key, v);
    else if (key == "stock_proxy") c.baseline.stock_proxy = normalize_ticker(v);
    else if (key == "bond_proxy") c.baseline.bond_proxy = normalize_ticker(v);
    else if (key == "workers") {
        c.workers = to_int<int>(key, v);
        if (c.workers < 1) throw ParameterError("workers must be >= 1");
    } else throw ParameterError(fmt::format("unknown config key '{}'", key));
}

RunConfig parse(std::string_view text, const EnvLookup& env) {
    RunConfig c;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        std::string_view s = line;
        if (auto hash = s.find('#'); hash != std::string_view::npos) s = s.substr(0, hash);
        s = trim(s);
        if (s.empty()) continue;
        const auto eq = s.find('=');
        if (eq == std::string_view::npos) throw ParseError(fmt::format("config: expected key = value, got '{}'", s), n);
        try {
            apply(c, trim(s.substr(0, eq)), s.substr(eq + 1));
        } catch (const ParameterError& e) {
            throw ParseError(e.what(), n);
        }
    }
    if (env) {
        for (const auto& key : keys()) {
            std::string var = "AEGIS_" + key;
            std::transform(var.begin(), var.end(), var.begin(), [](unsigned char ch) { return std::toupper(ch); });
            if (const char* value = env(var.c_str())) apply(c, key, value);
        }
    }
    c.backtest.validate();
    c.baseline.validate();
    return c;
}

RunConfig load(const std::filesystem::path& path, const EnvLookup& env) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open config file " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse(buf.str(), env);
}

std::vector<std::pair<std::string, std::string>> RunConfig::snapshot() const {
    const auto& b = backtest;
    auto num = [](double v) { return csv::format_double(v); };
    std::map<std::string, std::string> m = {
        {"allocation_lookback_months", std::to_string(b.allocation_lookback_months)},
        {"bond_proxy", baseline.bond_proxy},
        {"cap", num(b.cap)},
        {"csm_top_fraction", num(baseline.csm_top_fraction)},
        {"diversifier_count", std::to_string(b.diversifier_count)},
        {"end_date", b.end_date ? b.end_date->iso() : ""},
        {"friction_bps", num(b.friction_bps)},
        {"max_iterations", std::to_string(b.solver.max_iterations)},
        {"outlier_cutoff", num(b.outlier_cutoff)},
        {"rebalance_frequency_months", std::to_string(b.rebalance_frequency_months)},
        {"relative_tolerance", num(b.solver.relative_tolerance)},
        {"relax_cap", b.relax_cap ? "true" : "false"},
        {"rf_annual", num(b.rf_annual)},
        {"rp_vol_lookback_months", std::to_string(baseline.rp_vol_lookback_months)},
        {"selection_lookback_months", std::to_string(b.selection_lookback_months)},
        {"skip_days", std::to_string(b.skip_days)},
        {"start_date", b.start_date ? b.start_date->iso() : ""},
        {"stock_proxy", baseline.stock_proxy},
        {"strategy", strategy},
        {"target_basket_size", std::to_string(b.target_basket_size)},
        {"workers", std::to_string(workers)}};
    return {m.begin(), m.end()};
}

}  // namespace aegis::config
