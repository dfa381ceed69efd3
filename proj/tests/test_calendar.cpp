#include <doctest.h>

#include "lrshield/calendar.hpp"
#include "lrshield/errors.hpp"

using namespace lrshield;

TEST_CASE("day serial round trips across leap boundaries") {
    CHECK(day_serial(1970, 1, 1) == 0);
    CHECK(day_serial(1970, 1, 2) == 1);
    CHECK(day_serial(1969, 12, 31) == -1);
    CHECK(day_serial(2000, 3, 1) - day_serial(2000, 2, 28) == 2); // leap century
    CHECK(day_serial(1900, 3, 1) - day_serial(1900, 2, 28) == 1); // non-leap century

    for (std::int64_t s : {-1000L, 0L, 10957L, 16436L, 17897L, 20000L}) {
        int y, m, d;
        civil_from_serial(s, y, m, d);
        CHECK(day_serial(y, m, d) == s);
    }
}

TEST_CASE("weekday arithmetic") {
    CHECK(day_of_week({1970, 1, 1, 0}) == 4);  // Thursday
    CHECK(day_of_week({2018, 1, 1, 0}) == 1);  // Monday
    CHECK(day_of_week({2015, 3, 8, 0}) == 0);  // Sunday
    CHECK(is_weekend({2018, 1, 6, 12}));
    CHECK(is_weekend({2018, 1, 7, 12}));
    CHECK_FALSE(is_weekend({2018, 1, 8, 12}));
}

TEST_CASE("civil validation") {
    CHECK(is_valid_civil({2016, 2, 29, 0}));
    CHECK_FALSE(is_valid_civil({2017, 2, 29, 0}));
    CHECK_FALSE(is_valid_civil({2017, 4, 31, 0}));
    CHECK_FALSE(is_valid_civil({2017, 1, 1, 24}));
    CHECK_FALSE(is_valid_civil({2017, 0, 1, 0}));
}

TEST_CASE("naive hour serial inverts") {
    for (CivilHour h : {CivilHour{2015, 1, 1, 0}, CivilHour{2016, 2, 29, 23},
                        CivilHour{2018, 12, 31, 23}, CivilHour{1999, 7, 4, 5}}) {
        CHECK(civil_from_hour_serial(naive_hour_serial(h)) == h);
    }
    CHECK(naive_hour_serial({1970, 1, 1, 5}) == 5);
    CHECK(next_naive({2017, 12, 31, 23}) == CivilHour{2018, 1, 1, 0});
}

TEST_CASE("us dst transition days") {
    CHECK(second_sunday_of_march(2015) == 8);
    CHECK(second_sunday_of_march(2016) == 13);
    CHECK(second_sunday_of_march(2017) == 12);
    CHECK(second_sunday_of_march(2018) == 11);
    CHECK(first_sunday_of_november(2015) == 1);
    CHECK(first_sunday_of_november(2016) == 6);
    CHECK(first_sunday_of_november(2017) == 5);
    CHECK(first_sunday_of_november(2018) == 4);

    CHECK(is_skipped_label({2018, 3, 11, 2}));
    CHECK_FALSE(is_skipped_label({2018, 3, 11, 3}));
    CHECK_FALSE(is_skipped_label({2018, 3, 12, 2}));
    CHECK(is_duplicated_label({2018, 11, 4, 1}));
    CHECK_FALSE(is_duplicated_label({2018, 11, 4, 2}));
}

TEST_CASE("prevailing walk skips spring-forward and repeats fall-back") {
    PrevailingHour h{{2018, 3, 11, 1}, false};
    h = next_prevailing(h);
    CHECK(h.label == CivilHour{2018, 3, 11, 3}); // 02:00 never happens

    PrevailingHour f{{2018, 11, 4, 0}, false};
    f = next_prevailing(f);
    CHECK(f.label == CivilHour{2018, 11, 4, 1});
    CHECK_FALSE(f.second_occurrence);
    f = next_prevailing(f);
    CHECK(f.label == CivilHour{2018, 11, 4, 1});
    CHECK(f.second_occurrence);
    f = next_prevailing(f);
    CHECK(f.label == CivilHour{2018, 11, 4, 2});
    CHECK_FALSE(f.second_occurrence);
}

TEST_CASE("prevailing hour counts match physical duration") {
    // A normal day has 24 physical hours; spring-forward day 23; fall-back 25.
    CHECK(prevailing_hours_between({2018, 1, 1, 0}, {2018, 1, 1, 23}) == 24);
    CHECK(prevailing_hours_between({2018, 3, 11, 0}, {2018, 3, 11, 23}) == 23);
    CHECK(prevailing_hours_between({2018, 11, 4, 0}, {2018, 11, 4, 23}) == 25);
    // A full prevailing year nets out to the physical hour count.
    CHECK(prevailing_hours_between({2018, 1, 1, 0}, {2018, 12, 31, 23}) == 8760);
    CHECK(prevailing_hours_between({2016, 1, 1, 0}, {2016, 12, 31, 23}) == 8784);
    // Four study years: 365*3 + 366 days.
    CHECK(prevailing_hours_between({2015, 1, 1, 0}, {2018, 12, 31, 23}) == 35064);
}

TEST_CASE("day of year") {
    CHECK(day_of_year({2018, 1, 1, 0}) == 1);
    CHECK(day_of_year({2018, 12, 31, 0}) == 365);
    CHECK(day_of_year({2016, 12, 31, 0}) == 366);
    CHECK(day_of_year({2016, 3, 1, 0}) == 61);
}

TEST_CASE("format and parse") {
    CHECK(format_civil({2018, 3, 9, 7}) == "2018-03-09 07:00");
    CHECK(parse_civil("2018-03-09 07:00") == CivilHour{2018, 3, 9, 7});
    CHECK(parse_civil("2018-03-09T07:00:00") == CivilHour{2018, 3, 9, 7});
    CHECK(parse_civil("2018-3-9 7:00") == CivilHour{2018, 3, 9, 7});
    CHECK_THROWS_AS(parse_civil("2018-03-09 07:30"), ParseError);
    CHECK_THROWS_AS(parse_civil("2018-03-09"), ParseError);
    CHECK_THROWS_AS(parse_civil("not a date"), ParseError);
    CHECK_THROWS_AS(parse_civil("2018-02-30 00:00"), ParseError);
}
