#include "aegis/calendar.hpp"

#include <fmt/format.h>

#include "aegis/error.hpp"

namespace aegis {

namespace {

bool parse_digits(std::string_view s, int& out) {
    out = 0;
    for (char c : s) {
        if (c < '0' || c > '9') return false;
        out = out * 10 + (c - '0');
    }
    return !s.empty();
}

}  // namespace

Date Date::parse(std::string_view text) {
    int y = 0, m = 0, d = 0;
    if (text.size() != 10 || text[4] != '-' || text[7] != '-' || !parse_digits(text.substr(0, 4), y) ||
        !parse_digits(text.substr(5, 2), m) || !parse_digits(text.substr(8, 2), d)) {
        throw ParseError("invalid ISO-8601 date '" + std::string(text) + "'", 0);
    }
    std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(m)},
                                    std::chrono::day{static_cast<unsigned>(d)}};
    if (!ymd.ok()) throw ParseError("invalid calendar date '" + std::string(text) + "'", 0);
    return Date(std::chrono::sys_days(ymd));
}

std::string Date::iso() const {
    std::chrono::year_month_day ymd(days_);
    return fmt::format("{:04d}-{:02d}-{:02d}", static_cast<int>(ymd.year()),
                       static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
}

int Date::year() const { return static_cast<int>(std::chrono::year_month_day(days_).year()); }
unsigned Date::month() const { return static_cast<unsigned>(std::chrono::year_month_day(days_).month()); }
unsigned Date::day() const { return static_cast<unsigned>(std::chrono::year_month_day(days_).day()); }

Date Date::add_months(int months) const {
    using namespace std::chrono;
    year_month_day ymd(days_);
    year_month ym = year_month(ymd.year(), ymd.month()) + std::chrono::months(months);
    auto last = year_month_day_last(ym.year(), month_day_last(ym.month())).day();
    auto d = ymd.day() > last ? last : ymd.day();
    return Date(sys_days(year_month_day(ym.year(), ym.month(), d)));
}

std::vector<Date> business_days(Date first, Date last) {
    using namespace std::chrono;
    std::vector<Date> out;
    for (sys_days d = first.days(); d <= last.days(); d += days{1}) {
        const weekday wd{d};
        if (wd != Saturday && wd != Sunday) out.emplace_back(d);
    }
    return out;
}

}  // namespace aegis
