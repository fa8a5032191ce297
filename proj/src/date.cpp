#include "odcast/date.hpp"

#include "odcast/error.hpp"

#include <cstdio>

namespace odcast {

namespace {

bool parse_digits(std::string_view s, int& out) {
	out = 0;
	if (s.empty())
		return false;
	for (char c : s) {
		if (c < '0' || c > '9')
			return false;
		out = out * 10 + (c - '0');
	}
	return true;
}

} // namespace

Date Date::parse(std::string_view iso) {
	int y = 0, m = 0, d = 0;
	if (iso.size() != 10 || iso[4] != '-' || iso[7] != '-' || !parse_digits(iso.substr(0, 4), y) ||
	    !parse_digits(iso.substr(5, 2), m) || !parse_digits(iso.substr(8, 2), d))
		throw ParseError("invalid date '" + std::string(iso) + "', expected YYYY-MM-DD");
	std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{unsigned(m)},
	                                std::chrono::day{unsigned(d)}};
	if (!ymd.ok())
		throw ParseError("invalid calendar date '" + std::string(iso) + "'");
	return Date{std::chrono::sys_days{ymd}};
}

Date Date::from_ymd(int year, unsigned month, unsigned day) {
	std::chrono::year_month_day ymd{std::chrono::year{year}, std::chrono::month{month}, std::chrono::day{day}};
	if (!ymd.ok())
		throw InvalidArgument("invalid calendar date");
	return Date{std::chrono::sys_days{ymd}};
}

std::string Date::to_string() const {
	auto v = ymd();
	char buf[16];
	std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", int(v.year()), unsigned(v.month()), unsigned(v.day()));
	return buf;
}

int Date::day_of_year() const {
	using namespace std::chrono;
	auto jan1 = sys_days{ymd().year() / January / 1};
	return int((days_ - jan1).count()) + 1;
}

int Date::day_of_week() const {
	// iso_encoding: Monday = 1 ... Sunday = 7
	return int(std::chrono::weekday{days_}.iso_encoding()) - 1;
}

} // namespace odcast
