#pragma once

#include <compare>
#include <cstdint>
#include <string>

namespace lrshield {

// One civil (wall-clock) hour label, e.g. 2015-03-08 01:00.  Labels follow US
// Eastern *prevailing* time: on the spring-forward day (second Sunday of
// March) the 02:00 label never occurs, and on the fall-back day (first Sunday
// of November) the 01:00 label occurs twice on the physical timeline.
struct CivilHour {
    int year = 0;
    int month = 1; // 1..12
    int day = 1;   // 1..31
    int hour = 0;  // 0..23

    auto operator<=>(const CivilHour&) const = default;
};

// Days since 1970-01-01 (proleptic Gregorian).
std::int64_t day_serial(int year, int month, int day);

// Inverse of day_serial.
void civil_from_serial(std::int64_t serial, int& year, int& month, int& day);

// 0 = Sunday ... 6 = Saturday.
int day_of_week(const CivilHour& h);

// Saturday or Sunday.
bool is_weekend(const CivilHour& h);

bool is_valid_civil(const CivilHour& h);

// Hours since 1970-01-01 00:00 in the naive (no-DST) calendar.
std::int64_t naive_hour_serial(const CivilHour& h);
CivilHour civil_from_hour_serial(std::int64_t serial);

// Naive successor: +1 hour, every label exists.
CivilHour next_naive(const CivilHour& h);

// Day-of-month of the DST transition days for a given year (US rules, 2007+).
int second_sunday_of_march(int year);
int first_sunday_of_november(int year);

// True for the label that is skipped at spring-forward (Mar, 2nd Sun, 02:00).
bool is_skipped_label(const CivilHour& h);
// True for the label that repeats at fall-back (Nov, 1st Sun, 01:00).
bool is_duplicated_label(const CivilHour& h);

// Physical-timeline successor in prevailing time.  `second_occurrence` tracks
// which copy of a duplicated label we are on; it is false for all other hours.
struct PrevailingHour {
    CivilHour label;
    bool second_occurrence = false;
};
PrevailingHour next_prevailing(const PrevailingHour& h);

// Count of physical hours from `first` (inclusive) to `last` (inclusive)
// when walking the prevailing timeline.  `last` must be reachable.
std::int64_t prevailing_hours_between(const CivilHour& first, const CivilHour& last);

// 1-based ordinal of the day within its year (Jan 1 -> 1).
int day_of_year(const CivilHour& h);

// "YYYY-MM-DD HH:00" (zero padded).
std::string format_civil(const CivilHour& h);

// Accepts "YYYY-MM-DD HH:MM[:SS]" with ' ' or 'T' separator; minutes/seconds
// must be zero when present.  Throws ParseError on malformed input.
CivilHour parse_civil(const std::string& text);

} // namespace lrshield
