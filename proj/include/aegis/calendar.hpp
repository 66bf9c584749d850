#pragma once

#include <chrono>
#include <compare>
#include <string>
#include <string_view>
#include <vector>

namespace aegis {

/// Calendar date (no time of day). Thin value wrapper over `sys_days` so that
/// comparisons and day arithmetic are cheap.
class Date {
public:
    constexpr Date() = default;
    constexpr explicit Date(std::chrono::sys_days days) : days_(days) {}
    constexpr Date(int y, unsigned m, unsigned d)
        : days_(std::chrono::year_month_day{std::chrono::year{y}, std::chrono::month{m},
                                            std::chrono::day{d}}) {}

    /// Parses strict ISO-8601 `YYYY-MM-DD`. Throws ParseError otherwise.
    static Date parse(std::string_view text);

    std::string iso() const;

    int year() const;
    unsigned month() const;
    unsigned day() const;
    std::chrono::sys_days days() const { return days_; }

    /// Month arithmetic that clamps to the last day of the target month.
    Date add_months(int months) const;

    friend constexpr auto operator<=>(const Date&, const Date&) = default;

private:
    std::chrono::sys_days days_{};
};

/// Inclusive date range.
struct DateRange {
    Date first;
    Date last;
    bool contains(Date d) const { return first <= d && d <= last; }
};

/// Monday-to-Friday dates in [first, last]. No holiday calendar.
std::vector<Date> business_days(Date first, Date last);

}  // namespace aegis
