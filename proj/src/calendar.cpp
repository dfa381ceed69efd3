#include "lrshield/calendar.hpp"

#include <array>
#include <cstdio>

#include "lrshield/errors.hpp"

namespace lrshield {

namespace {

bool is_leap(int y) { return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0; }

int days_in_month(int y, int m) {
    static constexpr std::array<int, 12> len = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    if (m == 2 && is_leap(y)) return 29;
    return len[static_cast<std::size_t>(m - 1)];
}

} // namespace

// Howard Hinnant's civil-from-days / days-from-civil arithmetic.
std::int64_t day_serial(int y, int m, int d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = static_cast<unsigned>((153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1);
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_serial(std::int64_t z, int& year, int& month, int& day) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    const unsigned d = doy - (153 * mp + 2) / 5 + 1;
    const unsigned m = mp + (mp < 10 ? 3 : -9);
    year = static_cast<int>(y + (m <= 2));
    month = static_cast<int>(m);
    day = static_cast<int>(d);
}

int day_of_week(const CivilHour& h) {
    // 1970-01-01 was a Thursday; map serial 0 -> 4.
    std::int64_t s = day_serial(h.year, h.month, h.day);
    std::int64_t w = (s + 4) % 7;
    if (w < 0) w += 7;
    return static_cast<int>(w);
}

bool is_weekend(const CivilHour& h) {
    int w = day_of_week(h);
    return w == 0 || w == 6;
}

bool is_valid_civil(const CivilHour& h) {
    if (h.month < 1 || h.month > 12) return false;
    if (h.day < 1 || h.day > days_in_month(h.year, h.month)) return false;
    return h.hour >= 0 && h.hour <= 23;
}

std::int64_t naive_hour_serial(const CivilHour& h) {
    return day_serial(h.year, h.month, h.day) * 24 + h.hour;
}

CivilHour civil_from_hour_serial(std::int64_t serial) {
    std::int64_t days = serial >= 0 ? serial / 24 : (serial - 23) / 24;
    int hour = static_cast<int>(serial - days * 24);
    CivilHour out;
    out.hour = hour;
    civil_from_serial(days, out.year, out.month, out.day);
    return out;
}

CivilHour next_naive(const CivilHour& h) {
    return civil_from_hour_serial(naive_hour_serial(h) + 1);
}

namespace {

// Day-of-month of the n-th Sunday (1-based) of a month.
int nth_sunday(int year, int month, int n) {
    CivilHour first{year, month, 1, 0};
    int w = day_of_week(first); // 0 == Sunday
    int first_sunday = 1 + (7 - w) % 7;
    return first_sunday + 7 * (n - 1);
}

} // namespace

int second_sunday_of_march(int year) { return nth_sunday(year, 3, 2); }
int first_sunday_of_november(int year) { return nth_sunday(year, 11, 1); }

bool is_skipped_label(const CivilHour& h) {
    return h.month == 3 && h.hour == 2 && h.day == second_sunday_of_march(h.year);
}

bool is_duplicated_label(const CivilHour& h) {
    return h.month == 11 && h.hour == 1 && h.day == first_sunday_of_november(h.year);
}

PrevailingHour next_prevailing(const PrevailingHour& h) {
    if (is_duplicated_label(h.label) && !h.second_occurrence)
        return {h.label, true};
    CivilHour n = next_naive(h.label);
    if (is_skipped_label(n)) n = next_naive(n);
    return {n, false};
}

std::int64_t prevailing_hours_between(const CivilHour& first, const CivilHour& last) {
    if (last < first) throw ValidationError("prevailing_hours_between: end before start");
    PrevailingHour cur{first, false};
    std::int64_t count = 1;
    // Bounded walk; the ranges used here are a handful of years.
    while (cur.label != last || (is_duplicated_label(last) && !cur.second_occurrence)) {
        cur = next_prevailing(cur);
        ++count;
        if (count > 2000000)
            throw ValidationError("prevailing_hours_between: range too large or unreachable");
    }
    return count;
}

int day_of_year(const CivilHour& h) {
    return static_cast<int>(day_serial(h.year, h.month, h.day) - day_serial(h.year, 1, 1)) + 1;
}

std::string format_civil(const CivilHour& h) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d %02d:00", h.year, h.month, h.day, h.hour);
    return std::string(buf);
}

CivilHour parse_civil(const std::string& text) {
    int y = 0, mo = 0, d = 0, hh = 0, mi = 0, ss = 0;
    char sep = 0;
    int n = std::sscanf(text.c_str(), "%d-%d-%d%c%d:%d:%d", &y, &mo, &d, &sep, &hh, &mi, &ss);
    if (n < 6 || (sep != ' ' && sep != 'T'))
        throw ParseError("invalid datetime '" + text + "' (expected YYYY-MM-DD HH:MM[:SS])");
    if (mi != 0 || (n >= 7 && ss != 0))
        throw ParseError("datetime '" + text + "' is not on an hour boundary");
    CivilHour h{y, mo, d, hh};
    if (!is_valid_civil(h))
        throw ParseError("datetime '" + text + "' is out of range");
    return h;
}

} // namespace lrshield
