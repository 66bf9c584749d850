#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "aegis/market_data.hpp"

namespace aegis::fixtures {

struct FixtureOptions {
    int assets = 200;
    int years = 5;
    std::uint64_t seed = 20240101;
    Date start{2015, 1, 1};
    int late_listings = 8;  // assets whose history begins part-way through
    int delistings = 4;     // assets that decay and stop trading
    bool proxies = true;    // add MKT and BOND columns (no metadata entry)
};

struct Fixture {
    PricePanel panel;
    MetaTable meta;
};

/// Deterministic factor-model panel: a market factor, eleven sector factors
/// and idiosyncratic noise on weekday dates.
Fixture synthetic_universe(const FixtureOptions& options = {});

/// Appends an asset that rallies until `peak_row`, then decays towards zero
/// and has no prices after `last_row`.
void add_decaying_asset(Fixture& fixture, const std::string& ticker, const std::string& sector, Index peak_row,
                        Index last_row);

/// Wide price CSV (`date` then one column per ticker, blank = missing).
void write_prices_csv(const PricePanel& panel, const std::filesystem::path& path);
void write_meta_csv(const MetaTable& meta, const std::filesystem::path& path);

}  // namespace aegis::fixtures
