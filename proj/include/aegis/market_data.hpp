#pragma once

#include <cmath>
#include <filesystem>
#include <limits>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "aegis/calendar.hpp"
#include "aegis/error.hpp"

namespace aegis {

using Index = Eigen::Index;

inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

/// Dense date x ticker matrix of adjusted close prices. Missing cells are NaN;
/// a ticker only carries values inside its active window.
struct PricePanel {
    std::vector<Date> dates;
    std::vector<std::string> tickers;
    Eigen::MatrixXd prices;             // rows = dates, cols = tickers
    std::vector<DateRange> active;      // per ticker, first/last valid price

    Index rows() const { return prices.rows(); }
    Index cols() const { return prices.cols(); }
    bool empty() const { return prices.size() == 0; }

    /// Column of a ticker, or -1.
    Index column(std::string_view ticker) const;
    /// Row holding `d`, or -1.
    Index row(Date d) const;
    /// Last row whose date is <= d, or -1.
    Index row_at_or_before(Date d) const;
    /// First row whose date is >= d, or rows().
    Index row_at_or_after(Date d) const;

    bool has(Index r, Index c) const { return !std::isnan(prices(r, c)); }

    /// Throws DataError when a structural invariant does not hold.
    void validate() const;
};

/// Static per-ticker data from the metadata file.
struct AssetMeta {
    std::string ticker;
    std::string sector;
    double shares_outstanding = 0.0;
    double iwf = 1.0;
    double advt = 0.0;
    std::set<std::string> index_tags;
    DateRange active_window;
};

using MetaTable = std::map<std::string, AssetMeta>;

/// Daily log returns. Row k holds the return from source row k to k+1 and is
/// stamped with the later date.
struct ReturnsPanel {
    std::vector<Date> dates;
    std::vector<std::string> tickers;
    Eigen::MatrixXd returns;

    Index column(std::string_view ticker) const;
};

struct RejectedAsset {
    std::string ticker;
    Index valid_points = 0;
    std::string reason;
};

struct IngestResult {
    PricePanel panel;
    std::vector<RejectedAsset> rejected;
};

/// Uppercases and maps class-share dots to dashes ("brk.b" -> "BRK-B").
std::string normalize_ticker(std::string_view raw);

/// Reads the price CSV (`date` column then one column per ticker). Assets with
/// fewer than `min_points` valid prices are dropped and reported.
IngestResult ingest_csv(const std::filesystem::path& path, Index min_points = 20);

/// Reads the metadata CSV
/// `ticker,sector,shares_outstanding,iwf,advt,index_tags,first_date,last_date`.
MetaTable read_meta_csv(const std::filesystem::path& path);

struct AlignOptions {
    /// Keep only rows where every ticker has a value (intersection of windows).
    bool require_common_window = false;
};

/// Outer-joins panels on date, forward fills inside each asset's active
/// window, and drops rows left without data.
PricePanel align_and_fill(std::span<const PricePanel> panels, const AlignOptions& options = {});

/// Row slice [first, last] with active windows clipped to the slice.
PricePanel slice_rows(const PricePanel& panel, Index first, Index last);

ReturnsPanel log_returns(const PricePanel& panel);

/// Daily simple returns P_t / P_{t-1} - 1 of a block of prices (rows = dates).
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic> simple_returns(
    const Eigen::MatrixBase<Derived>& prices) {
    const Index n = prices.rows();
    if (n < 2) return {};
    return (prices.bottomRows(n - 1).array() / prices.topRows(n - 1).array() - 1).matrix();
}

/// Daily log returns of a block of prices (rows = dates).
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic> log_returns_of(
    const Eigen::MatrixBase<Derived>& prices) {
    const Index n = prices.rows();
    if (n < 2) return {};
    return (prices.bottomRows(n - 1).array() / prices.topRows(n - 1).array()).log().matrix();
}

// ---------------------------------------------------------------------------
// Remote fetching. The engine only defines the interface; a directory-backed
// implementation serves tests and offline runs.

class PriceFetcher {
public:
    virtual ~PriceFetcher() = default;
    /// Single-ticker panel restricted to `range`. Throws on failure.
    virtual PricePanel fetch(const std::string& ticker, const DateRange& range) = 0;
};

/// Reads `<dir>/<TICKER>.csv` in the price CSV format.
class CsvDirectoryFetcher final : public PriceFetcher {
public:
    explicit CsvDirectoryFetcher(std::filesystem::path dir) : dir_(std::move(dir)) {}
    PricePanel fetch(const std::string& ticker, const DateRange& range) override;

private:
    std::filesystem::path dir_;
};

struct FetchFailure {
    std::string ticker;
    std::string message;
};

struct FetchBatch {
    std::vector<PricePanel> panels;  // in input ticker order, failures omitted
    std::vector<FetchFailure> failures;
};

class FetchBatchError : public Error {
public:
    FetchBatchError(const std::string& what, std::vector<FetchFailure> failures)
        : Error(what), failures_(std::move(failures)) {}
    const std::vector<FetchFailure>& failures() const { return failures_; }

private:
    std::vector<FetchFailure> failures_;
};

/// Fetches every ticker with at most `workers` requests in flight. Per-ticker
/// failures are collected; only a batch where every ticker fails throws.
FetchBatch fetch_remote(PriceFetcher& fetcher, std::span<const std::string> tickers, const DateRange& range,
                        unsigned workers = 20);

}  // namespace aegis
