#pragma once

#include <chrono>
#include <compare>
#include <string>
#include <string_view>

namespace odcast {

/// Calendar day. Thin value wrapper over std::chrono::sys_days.
class Date {
public:
	constexpr Date() = default;
	constexpr explicit Date(std::chrono::sys_days days) : days_(days) {}

	/// Parses `YYYY-MM-DD`; throws ParseError on anything else.
	static Date parse(std::string_view iso);
	static Date from_ymd(int year, unsigned month, unsigned day);

	std::string to_string() const;

	std::chrono::year_month_day ymd() const { return std::chrono::year_month_day{days_}; }
	int year() const { return int(ymd().year()); }
	unsigned month() const { return unsigned(ymd().month()); }
	/// 1-based day of year.
	int day_of_year() const;
	/// Monday = 0 ... Sunday = 6.
	int day_of_week() const;
	/// Monday of the ISO-8601 week containing this day.
	Date week_start() const { return *this - day_of_week(); }

	long serial() const { return long(days_.time_since_epoch().count()); }

	Date operator+(long n) const { return Date{days_ + std::chrono::days{n}}; }
	Date operator-(long n) const { return Date{days_ - std::chrono::days{n}}; }
	long operator-(Date other) const { return serial() - other.serial(); }
	Date& operator+=(long n) {
		days_ += std::chrono::days{n};
		return *this;
	}

	friend constexpr auto operator<=>(const Date&, const Date&) = default;

private:
	std::chrono::sys_days days_{};
};

/// Inclusive day range. Empty when last < first.
struct DateRange {
	Date first;
	Date last;

	long days() const { return last < first ? 0 : (last - first) + 1; }
	bool empty() const { return last < first; }
	bool contains(Date d) const { return first <= d && d <= last; }
	DateRange intersect(const DateRange& other) const {
		return {first < other.first ? other.first : first, last < other.last ? last : other.last};
	}
};

} // namespace odcast
