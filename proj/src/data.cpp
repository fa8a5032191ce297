#include "odcast/data.hpp"

#include "odcast/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <numbers>
#include <sstream>
#include <tuple>

namespace odcast {

bool is_station_code(const std::string& code) {
	return code.size() == 3 && std::all_of(code.begin(), code.end(), [](char c) { return c >= 'A' && c <= 'Z'; });
}

ODKey::ODKey(std::string origin, std::string destination)
    : origin_(std::move(origin)), destination_(std::move(destination)) {
	if (!is_station_code(origin_) || !is_station_code(destination_))
		throw InvalidArgument("station codes must match [A-Z]{3}: '" + origin_ + "', '" + destination_ + "'");
	if (origin_ == destination_)
		throw InvalidArgument("origin equals destination: " + origin_);
}

PanelDataset::PanelDataset(std::vector<DemandRecord> records, std::optional<DateRange> span) {
	if (records.empty() && !span)
		throw InvalidArgument("dataset has no records");
	std::sort(records.begin(), records.end(), [](const DemandRecord& a, const DemandRecord& b) {
		return std::tie(a.od, a.departure_date) < std::tie(b.od, b.departure_date);
	});
	DateRange hull{records.empty() ? span->first : records.front().departure_date,
	               records.empty() ? span->last : records.front().departure_date};
	for (std::size_t i = 0; i < records.size(); ++i) {
		const auto& r = records[i];
		if (!std::isfinite(r.weight_kg) || !std::isfinite(r.revenue) || r.weight_kg < 0 || r.revenue < 0)
			throw InvalidArgument("record " + r.od.to_string() + " " + r.departure_date.to_string() +
			                      " has negative or non-finite values");
		if (i > 0 && records[i - 1].od == r.od && records[i - 1].departure_date == r.departure_date)
			throw InvalidArgument("duplicate record " + r.od.to_string() + " " + r.departure_date.to_string());
		hull.first = std::min(hull.first, r.departure_date);
		hull.last = std::max(hull.last, r.departure_date);
	}
	if (span) {
		if (span->empty() || hull.first < span->first || span->last < hull.last)
			throw InvalidArgument("dataset span does not cover its records");
		span_ = *span;
	} else {
		span_ = hull;
	}
	count_ = records.size();
	for (auto& r : records)
		by_od_[r.od].push_back(std::move(r));
}

std::vector<ODKey> PanelDataset::ods() const {
	std::vector<ODKey> out;
	out.reserve(by_od_.size());
	for (const auto& [od, _] : by_od_)
		out.push_back(od);
	return out;
}

std::span<const DemandRecord> PanelDataset::records(const ODKey& od) const {
	auto it = by_od_.find(od);
	if (it == by_od_.end())
		throw NotFound("OD " + od.to_string() + " not in dataset");
	return it->second;
}

std::vector<DemandRecord> PanelDataset::all_records() const {
	std::vector<DemandRecord> out;
	out.reserve(count_);
	for (const auto& [_, recs] : by_od_)
		out.insert(out.end(), recs.begin(), recs.end());
	return out;
}

namespace {

template <class F>
double sum_in(std::span<const DemandRecord> recs, const DateRange& window, F field) {
	double total = 0.0;
	auto lo = std::lower_bound(recs.begin(), recs.end(), window.first,
	                           [](const DemandRecord& r, Date d) { return r.departure_date < d; });
	for (auto it = lo; it != recs.end() && it->departure_date <= window.last; ++it)
		total += field(*it);
	return total;
}

} // namespace

double PanelDataset::weight_in(const ODKey& od, const DateRange& window) const {
	return sum_in(records(od), window, [](const DemandRecord& r) { return r.weight_kg; });
}

double PanelDataset::revenue_in(const ODKey& od, const DateRange& window) const {
	return sum_in(records(od), window, [](const DemandRecord& r) { return r.revenue; });
}

bool operator==(const PanelDataset& a, const PanelDataset& b) {
	if (a.span_.first != b.span_.first || a.span_.last != b.span_.last || a.count_ != b.count_ ||
	    a.by_od_.size() != b.by_od_.size())
		return false;
	for (auto ia = a.by_od_.begin(), ib = b.by_od_.begin(); ia != a.by_od_.end(); ++ia, ++ib) {
		if (ia->first != ib->first || ia->second.size() != ib->second.size())
			return false;
		for (std::size_t i = 0; i < ia->second.size(); ++i) {
			const auto& ra = ia->second[i];
			const auto& rb = ib->second[i];
			if (ra.departure_date != rb.departure_date || ra.weight_kg != rb.weight_kg || ra.revenue != rb.revenue)
				return false;
		}
	}
	return true;
}

// ---------------------------------------------------------------------------
// CSV

namespace {

constexpr const char* kBookingsHeader = "origin,destination,departure_date,weight_kg,revenue";

std::vector<std::string> split_csv(const std::string& line) {
	std::vector<std::string> out;
	std::string cur;
	for (char c : line) {
		if (c == ',') {
			out.push_back(cur);
			cur.clear();
		} else {
			cur.push_back(c);
		}
	}
	out.push_back(cur);
	return out;
}

double parse_amount(const std::string& s, const char* field, long row) {
	if (s.empty())
		throw ParseError("row " + std::to_string(row) + ": empty " + field, row);
	char* end = nullptr;
	double v = std::strtod(s.c_str(), &end);
	if (end != s.c_str() + s.size() || !std::isfinite(v))
		throw ParseError("row " + std::to_string(row) + ": invalid " + field + " '" + s + "'", row);
	if (v < 0)
		throw ParseError("row " + std::to_string(row) + ": negative " + field + " '" + s + "'", row);
	return v;
}

std::string fmt_double(double v) {
	char buf[40];
	std::snprintf(buf, sizeof buf, "%.17g", v);
	return buf;
}

} // namespace

PanelDataset parse_bookings(std::istream& in) {
	std::string line;
	if (!std::getline(in, line))
		throw ParseError("bookings file is empty");
	if (!line.empty() && line.back() == '\r')
		line.pop_back();
	if (line != kBookingsHeader)
		throw ParseError(std::string("unexpected header, expected '") + kBookingsHeader + "'");

	std::map<std::pair<ODKey, Date>, DemandRecord> merged;
	long row = 0;
	while (std::getline(in, line)) {
		if (!line.empty() && line.back() == '\r')
			line.pop_back();
		++row;
		if (line.empty())
			continue;
		auto cells = split_csv(line);
		if (cells.size() != 5)
			throw ParseError("row " + std::to_string(row) + ": expected 5 fields, got " + std::to_string(cells.size()),
			                 row);
		ODKey od;
		Date date;
		try {
			od = ODKey(cells[0], cells[1]);
			date = Date::parse(cells[2]);
		} catch (const Error& e) {
			throw ParseError("row " + std::to_string(row) + ": " + e.what(), row);
		}
		double weight = parse_amount(cells[3], "weight_kg", row);
		double revenue = parse_amount(cells[4], "revenue", row);
		auto [it, inserted] = merged.try_emplace({od, date}, DemandRecord{od, date, weight, revenue});
		if (!inserted) {
			it->second.weight_kg += weight;
			it->second.revenue += revenue;
		}
	}
	if (merged.empty())
		throw ParseError("bookings file has no records");
	std::vector<DemandRecord> records;
	records.reserve(merged.size());
	for (auto& [_, r] : merged)
		records.push_back(std::move(r));
	return PanelDataset(std::move(records));
}

PanelDataset ingest_bookings(const std::filesystem::path& path) {
	std::ifstream in(path);
	if (!in)
		throw IoError("cannot open bookings file " + path.string());
	return parse_bookings(in);
}

void write_bookings(const PanelDataset& ds, std::ostream& out) {
	out << kBookingsHeader << '\n';
	for (const auto& r : ds.all_records())
		out << r.od.origin() << ',' << r.od.destination() << ',' << r.departure_date.to_string() << ','
		    << fmt_double(r.weight_kg) << ',' << fmt_double(r.revenue) << '\n';
}

void write_bookings(const PanelDataset& ds, const std::filesystem::path& path) {
	std::ofstream out(path);
	if (!out)
		throw IoError("cannot write " + path.string());
	write_bookings(ds, out);
	if (!out)
		throw IoError("write failed for " + path.string());
}

// ---------------------------------------------------------------------------
// Features

std::vector<double> build_features(Date date, const FeatureConfig& cfg) {
	if (cfg.yearly_harmonics < 0 || cfg.weekly_harmonics < 0)
		throw InvalidArgument("harmonic counts must be non-negative");
	constexpr double two_pi = 2.0 * std::numbers::pi;
	const double doy = date.day_of_year();
	const double dow = date.day_of_week();
	std::vector<double> f;
	f.reserve(cfg.width());
	for (int k = 1; k <= cfg.yearly_harmonics; ++k) {
		f.push_back(std::sin(two_pi * k * doy / 365.25));
		f.push_back(std::cos(two_pi * k * doy / 365.25));
	}
	for (int k = 1; k <= cfg.weekly_harmonics; ++k) {
		f.push_back(std::sin(two_pi * k * dow / 7.0));
		f.push_back(std::cos(two_pi * k * dow / 7.0));
	}
	for (const auto& ev : cfg.events)
		f.push_back(std::abs(date.day_of_year() - ev.day_of_year) <= ev.half_width ? 1.0 : 0.0);
	return f;
}

std::vector<std::vector<double>> ladd_window(Date date, int half_width, const FeatureConfig& cfg) {
	if (half_width < 0)
		throw InvalidArgument("LADD half width must be >= 0");
	std::vector<std::vector<double>> out;
	out.reserve(std::size_t(2 * half_width + 1));
	for (int off = -half_width; off <= half_width; ++off)
		out.push_back(build_features(date + off, cfg));
	return out;
}

// ---------------------------------------------------------------------------
// Series

std::size_t ODSeries::index_of(Date d) const {
	if (!range().contains(d))
		throw InvalidArgument(d.to_string() + " outside series " + od.to_string());
	return std::size_t(d - start_date);
}

std::span<const double> ODSeries::history_through(Date last) const {
	if (last < start_date)
		return {};
	std::size_t n = std::min(values.size(), std::size_t(last - start_date) + 1);
	return {values.data(), n};
}

ODSeries regularize(const PanelDataset& ds, const ODKey& od, const DateRange& range, const FeatureConfig& features) {
	auto recs = ds.records(od);
	DateRange r = range.intersect(ds.span());
	if (r.empty())
		throw InvalidArgument("range " + range.first.to_string() + ".." + range.last.to_string() +
		                      " does not intersect the dataset span");
	ODSeries s;
	s.od = od;
	s.start_date = r.first;
	s.values.assign(std::size_t(r.days()), 0.0);
	for (const auto& rec : recs)
		if (r.contains(rec.departure_date))
			s.values[std::size_t(rec.departure_date - r.first)] = rec.weight_kg;
	s.feature_width = features.width();
	s.features.reserve(s.values.size() * s.feature_width);
	for (std::size_t i = 0; i < s.values.size(); ++i) {
		auto f = build_features(r.first + long(i), features);
		s.features.insert(s.features.end(), f.begin(), f.end());
	}
	return s;
}

void SplitSpec::validate() const {
	if (!(train_end < valid_end) || valid_end > test_end)
		throw ConfigError("split requires train_end < valid_end <= test_end");
}

// ---------------------------------------------------------------------------
// Clustering

const char* cluster_name(RankCluster c) {
	switch (c) {
	case RankCluster::Top100:
		return "Top 100";
	case RankCluster::R101_500:
		return "101-500";
	case RankCluster::R501_1000:
		return "501-1000";
	case RankCluster::Above1001:
		return "Above 1001";
	}
	return "?";
}

namespace {

std::vector<std::pair<ODKey, double>> ranked(const PanelDataset& ds, const DateRange& window, bool by_revenue) {
	std::vector<std::pair<ODKey, double>> v;
	for (const auto& od : ds.ods())
		v.emplace_back(od, by_revenue ? ds.revenue_in(od, window) : ds.weight_in(od, window));
	std::stable_sort(v.begin(), v.end(), [](const auto& a, const auto& b) {
		if (a.second != b.second)
			return a.second > b.second;
		return a.first < b.first;
	});
	return v;
}

} // namespace

std::set<ODKey> significant_cluster(const PanelDataset& ds, const DateRange& window, double share) {
	if (!(share > 0.0 && share <= 1.0))
		throw InvalidArgument("significant share must lie in (0, 1]");
	if (window.empty())
		throw InvalidArgument("reference window is empty");
	auto v = ranked(ds, window, true);
	double total = 0.0;
	for (const auto& [_, rev] : v)
		total += rev;
	if (!(total > 0.0))
		throw InvalidArgument("zero total revenue in reference window");
	std::set<ODKey> out;
	double cum = 0.0;
	const double target = share * total * (1.0 - 1e-12);
	for (const auto& [od, rev] : v) {
		if (rev <= 0.0)
			break;
		out.insert(od);
		cum += rev;
		if (cum >= target)
			break;
	}
	return out;
}

std::map<ODKey, ClusterLabel> rank_clusters(const PanelDataset& ds, const DateRange& window, double share) {
	if (ds.num_ods() == 0)
		throw InvalidArgument("empty dataset");
	std::set<ODKey> sig;
	try {
		sig = significant_cluster(ds, window, share);
	} catch (const InvalidArgument&) {
		// zero revenue: nothing is significant
	}
	std::map<ODKey, ClusterLabel> out;
	auto v = ranked(ds, window, false);
	for (std::size_t i = 0; i < v.size(); ++i) {
		std::size_t rank = i + 1;
		ClusterLabel label;
		label.rank = rank;
		label.cluster = rank <= 100    ? RankCluster::Top100
		                : rank <= 500  ? RankCluster::R101_500
		                : rank <= 1000 ? RankCluster::R501_1000
		                               : RankCluster::Above1001;
		label.in_significant_cluster = sig.count(v[i].first) != 0;
		out.emplace(v[i].first, label);
	}
	return out;
}

WeeklyPanel weekly_aggregate(const DailyPanel& daily) {
	WeeklyPanel out;
	for (const auto& [key, value] : daily)
		out[{key.first, key.second.week_start()}] += value;
	return out;
}

std::vector<std::pair<Date, double>> weekly_sums(Date start, std::span<const double> daily) {
	std::vector<std::pair<Date, double>> out;
	for (std::size_t i = 0; i < daily.size(); ++i) {
		Date wk = (start + long(i)).week_start();
		if (out.empty() || out.back().first != wk)
			out.emplace_back(wk, 0.0);
		out.back().second += daily[i];
	}
	return out;
}

} // namespace odcast
