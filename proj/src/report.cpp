#include "aegis/report.hpp"

#include <array>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <openssl/evp.h>

#include "aegis/csv.hpp"

namespace aegis::report {

using nlohmann::json;

namespace {

json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

std::string cell(double v) { return csv::format_double(std::isfinite(v) ? v : std::nan("")); }

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    return out;
}

std::string join(const std::vector<std::string>& items, char sep) {
    std::string out;
    for (const auto& s : items) out += (out.empty() ? "" : std::string(1, sep)) + s;
    return out;
}

}  // namespace

std::string sha256_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
    std::array<char, 1 << 16> buf;
    while (in) {
        in.read(buf.data(), buf.size());
        EVP_DigestUpdate(ctx, buf.data(), static_cast<std::size_t>(in.gcount()));
    }
    std::array<unsigned char, EVP_MAX_MD_SIZE> md;
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx, md.data(), &len);
    EVP_MD_CTX_free(ctx);
    std::string hex;
    for (unsigned i = 0; i < len; ++i) hex += fmt::format("{:02x}", md[i]);
    return hex;
}

json manifest_json(const RunManifest& m) {
    json config = json::object();
    for (const auto& [k, v] : m.config) config[k] = v;
    json fp = json::object();
    for (const auto& [k, v] : m.fingerprints) fp[k] = v;
    return {{"config", config}, {"fingerprints", fp}, {"engine_version", m.engine_version}, {"warnings", m.warnings}};
}

json ratio_json(const metrics::Ratio& r) { return {{"value", number(r.value)}, {"status", metrics::to_string(r.status)}}; }

json metrics_json(const metrics::MetricsReport& m) {
    return {{"cagr", number(m.cagr)},
            {"years", m.years},
            {"final_value", number(m.final_value)},
            {"annual_volatility", number(m.ann_vol)},
            {"sharpe", ratio_json(m.sharpe)},
            {"sortino", ratio_json(m.sortino)},
            {"max_drawdown", number(m.max_drawdown)},
            {"calmar", ratio_json(m.calmar)},
            {"monthly_win_rate", number(m.monthly_win_rate)},
            {"total_gross_return", number(m.total_gross_return)},
            {"total_net_return", number(m.total_net_return)},
            {"total_friction", number(m.total_friction)},
            {"friction_impact", number(m.friction_impact)},
            {"avg_annual_sortino", number(m.annual.avg_annual_sortino)},
            {"outlier_adjusted_sortino", number(m.annual.outlier_adjusted_sortino)},
            {"outlier_excluded_years", m.annual.excluded_years}};
}

json report_json(const RunManifest& manifest, const backtest::BacktestResult& result, const metrics::MetricsReport& m) {
    json annual = json::array();
    for (const auto& r : m.annual.rows)
        annual.push_back({{"year", r.year},
                          {"basket_size", r.basket_size},
                          {"periods", r.periods},
                          {"gross", number(r.gross)},
                          {"friction", number(r.friction)},
                          {"net", number(r.net)},
                          {"avg_monthly", number(r.avg_period)},
                          {"annual_volatility", number(r.ann_vol)},
                          {"sortino", ratio_json(r.sortino)},
                          {"win_rate", number(r.win_rate)},
                          {"max_drawdown", number(r.max_drawdown)}});
    json periods = json::array();
    for (const auto& p : result.periods) {
        json w = json::object();
        for (std::size_t i = 0; i < p.weights.tickers.size(); ++i)
            w[p.weights.tickers[i]] = p.weights.weights(static_cast<Index>(i));
        periods.push_back({{"train_start", p.period.train_start.iso()},
                           {"train_end", p.period.train_end.iso()},
                           {"test_start", p.period.test_start.iso()},
                           {"test_end", p.period.test_end.iso()},
                           {"weights", w},
                           {"gross_return", number(p.gross_return)},
                           {"turnover", number(p.turnover)},
                           {"friction_cost", number(p.friction_cost)},
                           {"net_return", number(p.net_return)},
                           {"delisted", p.delisted},
                           {"diagnostics", p.diagnostics}});
    }
    json baskets = json::array();
    for (const auto& b : result.baskets)
        baskets.push_back({{"selected_on", b.selected_on.iso()},
                           {"anchors", b.basket.anchors},
                           {"diversifiers", b.basket.diversifiers},
                           {"underfilled", b.basket.underfilled}});
    return {{"schema_version", kSchemaVersion},
            {"strategy", result.strategy},
            {"manifest", manifest_json(manifest)},
            {"metrics", metrics_json(m)},
            {"annual", annual},
            {"baskets", baskets},
            {"periods", periods}};
}

std::vector<std::string> validate_report_json(const json& doc) {
    std::vector<std::string> problems;
    auto need = [&](const json& obj, const std::string& where, const std::string& key, auto pred, const char* kind) {
        if (!obj.is_object() || !obj.contains(key)) {
            problems.push_back(where + "." + key + " missing");
            return false;
        }
        if (!pred(obj.at(key))) {
            problems.push_back(where + "." + key + " should be " + kind);
            return false;
        }
        return true;
    };
    auto is_num_or_null = [](const json& j) { return j.is_number() || j.is_null(); };
    auto is_ratio = [&](const json& j) {
        return j.is_object() && j.contains("value") && is_num_or_null(j.at("value")) && j.contains("status") &&
               j.at("status").is_string();
    };
    auto is_obj = [](const json& j) { return j.is_object(); };
    auto is_arr = [](const json& j) { return j.is_array(); };
    auto is_str = [](const json& j) { return j.is_string(); };

    if (!doc.is_object()) return {"document is not an object"};
    if (need(doc, "$", "schema_version", [](const json& j) { return j.is_number_integer(); }, "an integer") &&
        doc.at("schema_version") != kSchemaVersion)
        problems.push_back(fmt::format("$.schema_version is {}, expected {}", doc.at("schema_version").dump(),
                                       kSchemaVersion));
    need(doc, "$", "strategy", is_str, "a string");
    if (need(doc, "$", "manifest", is_obj, "an object")) {
        const auto& m = doc.at("manifest");
        need(m, "$.manifest", "config", is_obj, "an object");
        need(m, "$.manifest", "fingerprints", is_obj, "an object");
        need(m, "$.manifest", "engine_version", is_str, "a string");
        need(m, "$.manifest", "warnings", is_arr, "an array");
    }
    if (need(doc, "$", "metrics", is_obj, "an object")) {
        const auto& m = doc.at("metrics");
        for (const char* k : {"cagr", "final_value", "annual_volatility", "max_drawdown", "monthly_win_rate",
                              "total_friction", "friction_impact", "avg_annual_sortino", "outlier_adjusted_sortino"})
            need(m, "$.metrics", k, is_num_or_null, "a number or null");
        for (const char* k : {"sharpe", "sortino", "calmar"}) need(m, "$.metrics", k, is_ratio, "a ratio object");
    }
    if (need(doc, "$", "annual", is_arr, "an array"))
        for (std::size_t i = 0; i < doc.at("annual").size(); ++i) {
            const auto& r = doc.at("annual")[i];
            const std::string where = fmt::format("$.annual[{}]", i);
            need(r, where, "year", [](const json& j) { return j.is_number_integer(); }, "an integer");
            for (const char* k : {"gross", "friction", "net", "annual_volatility", "max_drawdown"})
                need(r, where, k, is_num_or_null, "a number or null");
            need(r, where, "sortino", is_ratio, "a ratio object");
        }
    need(doc, "$", "baskets", is_arr, "an array");
    if (need(doc, "$", "periods", is_arr, "an array"))
        for (std::size_t i = 0; i < doc.at("periods").size(); ++i) {
            const auto& p = doc.at("periods")[i];
            const std::string where = fmt::format("$.periods[{}]", i);
            for (const char* k : {"train_start", "train_end", "test_start", "test_end"}) need(p, where, k, is_str, "a date");
            need(p, where, "weights", is_obj, "an object");
            for (const char* k : {"gross_return", "turnover", "friction_cost", "net_return"})
                need(p, where, k, is_num_or_null, "a number or null");
        }
    return problems;
}

const std::vector<std::string>& backtest_artifacts() {
    static const std::vector<std::string> names = {"report.json",   "periods.csv",           "equity_curve.csv",
                                                   "drawdown.csv", "monthly_histogram.csv", "annual_table.csv"};
    return names;
}

Histogram histogram(const std::vector<double>& values, double width) {
    if (!(width > 0)) throw ParameterError("histogram bin width must be positive");
    Histogram h;
    h.width = width;
    if (values.empty()) return h;
    std::map<long long, std::size_t> bins;
    for (double v : values) ++bins[static_cast<long long>(std::floor(v / width + 1e-9))];
    for (long long b = bins.begin()->first; b <= bins.rbegin()->first; ++b) {
        h.lower.push_back(static_cast<double>(b) * width);
        auto it = bins.find(b);
        h.counts.push_back(it == bins.end() ? 0 : it->second);
    }
    return h;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    auto out = open_out(path);
    out << text;
}

void write_backtest_artifacts(const std::filesystem::path& dir, const RunManifest& manifest,
                              const backtest::BacktestResult& result, const metrics::MetricsReport& m) {
    std::filesystem::create_directories(dir);
    write_text(dir / "report.json", report_json(manifest, result, m).dump(2) + "\n");

    const auto samples = result.samples();
    {
        auto out = open_out(dir / "periods.csv");
        csv::write_row(out, {"train_start", "train_end", "test_start", "test_end", "basket_size", "holdings",
                             "gross_return", "turnover", "friction_cost", "net_return", "delisted"});
        for (std::size_t i = 0; i < result.periods.size(); ++i) {
            const auto& p = result.periods[i];
            csv::write_row(out, {p.period.train_start.iso(), p.period.train_end.iso(), p.period.test_start.iso(),
                                 p.period.test_end.iso(), std::to_string(samples[i].basket_size),
                                 std::to_string(p.weights.tickers.size()), cell(p.gross_return), cell(p.turnover),
                                 cell(p.friction_cost), cell(p.net_return), join(p.delisted, '|')});
        }
    }
    Eigen::VectorXd equity(static_cast<Index>(result.equity_curve.size()));
    {
        auto out = open_out(dir / "equity_curve.csv");
        csv::write_row(out, {"date", "value"});
        for (std::size_t i = 0; i < result.equity_curve.size(); ++i) {
            equity(static_cast<Index>(i)) = result.equity_curve[i].value;
            csv::write_row(out, {result.equity_curve[i].date.iso(), cell(result.equity_curve[i].value)});
        }
    }
    {
        const Eigen::VectorXd dd = metrics::drawdown_series(equity);
        auto out = open_out(dir / "drawdown.csv");
        csv::write_row(out, {"date", "drawdown"});
        for (std::size_t i = 0; i < result.equity_curve.size(); ++i)
            csv::write_row(out, {result.equity_curve[i].date.iso(), cell(dd(static_cast<Index>(i)))});
    }
    {
        std::vector<double> net;
        for (const auto& p : result.periods) net.push_back(p.net_return);
        const auto h = histogram(net);
        auto out = open_out(dir / "monthly_histogram.csv");
        csv::write_row(out, {"bin_lower", "bin_upper", "count"});
        for (std::size_t i = 0; i < h.counts.size(); ++i)
            csv::write_row(out, {cell(h.lower[i]), cell(h.lower[i] + h.width), std::to_string(h.counts[i])});
    }
    {
        auto out = open_out(dir / "annual_table.csv");
        csv::write_row(out, {"year", "basket_size", "gross", "friction", "net", "avg_monthly", "annual_vol", "sortino",
                             "sortino_status", "win_rate", "max_dd"});
        for (const auto& r : m.annual.rows)
            csv::write_row(out, {std::to_string(r.year), std::to_string(r.basket_size), cell(r.gross), cell(r.friction),
                                 cell(r.net), cell(r.avg_period), cell(r.ann_vol), cell(r.sortino.value),
                                 metrics::to_string(r.sortino.status), cell(r.win_rate), cell(r.max_drawdown)});
    }
    write_text(dir / "run_timing.json",
               json{{"wall_clock_seconds", manifest.wall_clock_seconds}, {"engine_version", manifest.engine_version}}
                       .dump(2) + "\n");
}

void write_sweep_csv(const std::filesystem::path& path, const std::vector<SweepCell>& cells) {
    auto out = open_out(path);
    csv::write_row(out, {"lookback_months", "diversifiers", "status", "cagr", "max_dd", "avg_vol", "error"});
    for (const auto& c : cells) {
        std::string err = c.error;
        for (char& ch : err)
            if (ch == ',' || ch == '\n' || ch == '\r') ch = ';';
        csv::write_row(out, {std::to_string(c.lookback_months), std::to_string(c.diversifiers), c.ok ? "ok" : "failed",
                             c.ok ? cell(c.cagr) : "", c.ok ? cell(c.max_drawdown) : "", c.ok ? cell(c.avg_vol) : "", err});
    }
}

void write_compare(const std::filesystem::path& dir, const RunManifest& manifest,
                   const std::vector<backtest::BacktestResult>& results) {
    std::filesystem::create_directories(dir);
    std::vector<std::string> header{"date"};
    std::set<Date> dates;
    std::vector<std::map<Date, double>> curves;
    std::set<int> years;
    std::vector<std::map<int, double>> annual;
    std::set<std::string> seen;
    for (const auto& r : results) {
        std::string name = r.strategy;
        for (int k = 2; seen.count(name); ++k) name = fmt::format("{}_{}", r.strategy, k);
        seen.insert(name);
        header.push_back(name);
        auto& c = curves.emplace_back();
        for (const auto& e : r.equity_curve) {
            c[e.date] = e.value;
            dates.insert(e.date);
        }
        auto& a = annual.emplace_back();
        for (const auto& row : r.annual.rows) {
            a[row.year] = row.net;
            years.insert(row.year);
        }
    }
    {
        auto out = open_out(dir / "equity_curves.csv");
        csv::write_row(out, header);
        for (const Date& d : dates) {
            std::vector<std::string> row{d.iso()};
            for (const auto& c : curves) {
                auto it = c.find(d);
                row.push_back(it == c.end() ? "" : cell(it->second));
            }
            csv::write_row(out, row);
        }
    }
    {
        header[0] = "year";
        auto out = open_out(dir / "annual_net.csv");
        csv::write_row(out, header);
        for (int y : years) {
            std::vector<std::string> row{std::to_string(y)};
            for (const auto& a : annual) {
                auto it = a.find(y);
                row.push_back(it == a.end() ? "" : cell(it->second));
            }
            csv::write_row(out, row);
        }
    }
    write_text(dir / "compare.json", json{{"schema_version", kSchemaVersion},
                                          {"strategies", std::vector<std::string>(header.begin() + 1, header.end())},
                                          {"manifest", manifest_json(manifest)}}
                                             .dump(2) + "\n");
}

}  // namespace aegis::report
