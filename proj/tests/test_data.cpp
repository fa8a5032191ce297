#include "doctest.h"

#include "odcast/data.hpp"
#include "odcast/error.hpp"
#include "odcast/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

using namespace odcast;

namespace {

PanelDataset from_csv(const std::string& text) {
	std::istringstream in(text);
	return parse_bookings(in);
}

const std::string kHeader = "origin,destination,departure_date,weight_kg,revenue\n";

PanelDataset revenue_fixture(const std::vector<std::pair<std::string, double>>& revs) {
	std::vector<DemandRecord> recs;
	for (const auto& [origin, rev] : revs)
		recs.push_back({ODKey(origin, "ZZZ"), Date::from_ymd(2023, 1, 2), rev, rev});
	return PanelDataset(recs);
}

} // namespace

TEST_CASE("date basics") {
	Date d = Date::parse("2023-01-02");
	CHECK(d.day_of_week() == 0);
	CHECK(d.day_of_year() == 2);
	CHECK(d.to_string() == "2023-01-02");
	CHECK((d + 6).week_start() == d);
	CHECK((d + 7).week_start() == d + 7);
	CHECK((d - 1).week_start() == d - 7);
	CHECK_THROWS_AS(Date::parse("2023-02-30"), ParseError);
	CHECK_THROWS_AS(Date::parse("23-1-2"), ParseError);
}

TEST_CASE("ODKey validation") {
	CHECK_NOTHROW(ODKey("AMS", "JFK"));
	CHECK_THROWS_AS(ODKey("AMS", "AMS"), InvalidArgument);
	CHECK_THROWS_AS(ODKey("ams", "JFK"), InvalidArgument);
	CHECK_THROWS_AS(ODKey("AMSX", "JFK"), InvalidArgument);
}

TEST_CASE("ingest_bookings merges duplicate keys") {
	auto ds = from_csv(kHeader + "AAA,BBB,2023-01-01,5,10\nAAA,BBB,2023-01-01,3,6\n");
	REQUIRE(ds.num_records() == 1);
	auto recs = ds.records(ODKey("AAA", "BBB"));
	CHECK(recs[0].weight_kg == 8.0);
	CHECK(recs[0].revenue == 16.0);
}

TEST_CASE("ingest_bookings rejects bad rows with their row number") {
	try {
		from_csv(kHeader + "AAA,BBB,2023-01-01,-1,10\n");
		FAIL("expected a parse error");
	} catch (const ParseError& e) {
		CHECK(e.row() == 1);
		CHECK(std::string(e.what()).find("row 1") != std::string::npos);
	}
	CHECK_THROWS_AS(from_csv(kHeader + "AAA,BBB,2023-13-01,1,1\n"), ParseError);
	CHECK_THROWS_AS(from_csv(kHeader + "AAA,BBB,2023-01-01,1\n"), ParseError);
	CHECK_THROWS_AS(from_csv(""), ParseError);
	CHECK_THROWS_AS(from_csv(kHeader), ParseError);
	CHECK_THROWS_AS(ingest_bookings("/nonexistent/bookings.csv"), IoError);
}

TEST_CASE("ingest_bookings computes OD set and span") {
	auto ds = from_csv(kHeader + "AAA,BBB,2023-01-03,1,1\nCCC,DDD,2023-01-01,2,2\nAAA,BBB,2023-01-05,3,3\n");
	CHECK(ds.num_ods() == 2);
	CHECK(ds.date_min() == Date::parse("2023-01-01"));
	CHECK(ds.date_max() == Date::parse("2023-01-05"));
}

TEST_CASE("regularize zero-fills absent days") {
	auto ds = from_csv(kHeader + "AAA,BBB,2023-01-01,2,1\nAAA,BBB,2023-01-03,4,1\n");
	DateRange r{Date::parse("2023-01-01"), Date::parse("2023-01-03")};
	auto s = regularize(ds, ODKey("AAA", "BBB"), r);
	CHECK(s.values == std::vector<double>{2, 0, 4});
	CHECK(s.features.size() == s.values.size() * s.feature_width);

	CHECK_THROWS_AS(regularize(ds, ODKey("AAA", "CCC"), r), NotFound);
	CHECK_THROWS_AS(regularize(ds, ODKey("AAA", "BBB"), {Date::parse("2024-01-01"), Date::parse("2024-01-05")}),
	                InvalidArgument);
}

TEST_CASE("regularize conserves mass on synthetic panels") {
	SyntheticConfig cfg;
	cfg.n_ods = 12;
	cfg.n_days = 90;
	auto ds = generate_synthetic(cfg);
	for (const auto& od : ds.ods()) {
		auto s = regularize(ds, od, ds.span());
		double total = std::accumulate(s.values.begin(), s.values.end(), 0.0);
		double recs = 0.0;
		for (const auto& r : ds.records(od))
			recs += r.weight_kg;
		CHECK(total == doctest::Approx(recs).epsilon(1e-12));
	}
}

TEST_CASE("significant_cluster takes the smallest covering prefix") {
	auto ds = revenue_fixture({{"AAA", 50}, {"BBB", 30}, {"CCC", 15}, {"DDD", 5}});
	DateRange w{Date::from_ymd(2023, 1, 1), Date::from_ymd(2023, 1, 31)};
	auto sig = significant_cluster(ds, w, 0.9);
	CHECK(sig == std::set<ODKey>{ODKey("AAA", "ZZZ"), ODKey("BBB", "ZZZ"), ODKey("CCC", "ZZZ")});
	CHECK(significant_cluster(ds, w, 1.0).size() == 4);

	auto single = revenue_fixture({{"AAA", 3}});
	CHECK(significant_cluster(single, w, 0.01).size() == 1);
	CHECK(significant_cluster(single, w, 1.0).size() == 1);

	auto zero = revenue_fixture({{"AAA", 0}});
	CHECK_THROWS_AS(significant_cluster(zero, w, 0.9), InvalidArgument);
	CHECK_THROWS_AS(significant_cluster(ds, w, 0.0), InvalidArgument);
}

TEST_CASE("significant_cluster is monotone in share") {
	SyntheticConfig cfg;
	cfg.n_ods = 60;
	cfg.n_days = 60;
	auto ds = generate_synthetic(cfg);
	std::set<ODKey> prev;
	for (double share = 0.05; share <= 1.0; share += 0.05) {
		auto cur = significant_cluster(ds, ds.span(), share);
		CHECK(std::includes(cur.begin(), cur.end(), prev.begin(), prev.end()));
		prev = cur;
	}
}

TEST_CASE("rank_clusters bucket counts") {
	auto counts = [](const std::map<ODKey, ClusterLabel>& labels) {
		std::array<std::size_t, 4> c{};
		for (const auto& [_, l] : labels)
			++c[std::size_t(l.cluster)];
		return c;
	};
	auto small = revenue_fixture({{"AAA", 3}, {"BBB", 2}, {"CCC", 1}});
	DateRange w{Date::from_ymd(2023, 1, 1), Date::from_ymd(2023, 1, 31)};
	CHECK(counts(rank_clusters(small, w)) == std::array<std::size_t, 4>{3, 0, 0, 0});

	for (int n : {600, 1100}) {
		SyntheticConfig cfg;
		cfg.n_ods = n;
		cfg.n_days = 14;
		auto ds = generate_synthetic(cfg);
		auto labels = rank_clusters(ds, ds.span());
		std::size_t un = std::size_t(n);
		std::array<std::size_t, 4> expect{std::min<std::size_t>(un, 100),
		                                  std::min<std::size_t>(un > 100 ? un - 100 : 0, 400),
		                                  std::min<std::size_t>(un > 500 ? un - 500 : 0, 500), un > 1000 ? un - 1000 : 0};
		CHECK(counts(labels) == expect);
		for (const auto& [_, l] : labels) {
			if (l.rank == 101)
				CHECK(l.cluster == RankCluster::R101_500);
			if (l.rank == 100)
				CHECK(l.cluster == RankCluster::Top100);
		}
	}
}

TEST_CASE("build_features") {
	FeatureConfig cfg;
	cfg.yearly_harmonics = 0;
	cfg.weekly_harmonics = 1;
	auto monday = Date::parse("2023-01-02");
	auto f = build_features(monday, cfg);
	REQUIRE(f.size() == 2);
	CHECK(f[0] == doctest::Approx(0.0));
	CHECK(f[1] == doctest::Approx(1.0));

	cfg.yearly_harmonics = 1;
	cfg.weekly_harmonics = 0;
	auto d91 = Date::from_ymd(2023, 1, 1) + 90; // day-of-year 91
	REQUIRE(d91.day_of_year() == 91);
	auto y = build_features(d91, cfg);
	CHECK(std::abs(y[0] - 1.0) < 0.02);
	CHECK(std::abs(y[1]) < 0.02);

	FeatureConfig full;
	full.events = {{45, 2.0, 3}};
	for (int i = 0; i < 400; ++i) {
		auto v = build_features(monday + i, full);
		CHECK(v == build_features(monday + i, full));
		for (std::size_t k = 0; k + 1 < v.size(); ++k)
			CHECK(std::abs(v[k]) <= 1.0);
		int doy = (monday + i).day_of_year();
		CHECK(v.back() == (std::abs(doy - 45) <= 3 ? 1.0 : 0.0));
	}
}

TEST_CASE("ladd_window") {
	FeatureConfig cfg;
	auto d = Date::parse("2023-03-15");
	auto w0 = ladd_window(d, 0, cfg);
	REQUIRE(w0.size() == 1);
	CHECK(w0[0] == build_features(d, cfg));
	auto w2 = ladd_window(d, 2, cfg);
	REQUIRE(w2.size() == 5);
	CHECK(w2[2] == build_features(d, cfg));
	auto next = ladd_window(d + 1, 2, cfg);
	for (int i = 0; i < 4; ++i)
		CHECK(next[std::size_t(i)] == w2[std::size_t(i + 1)]);
	CHECK_THROWS_AS(ladd_window(d, -1, cfg), InvalidArgument);
}

TEST_CASE("weekly_aggregate") {
	ODKey od("AAA", "BBB");
	DailyPanel daily;
	Date mon = Date::parse("2023-01-02");
	for (int i = 0; i < 7; ++i)
		daily[{od, mon + i}] = 1.0;
	auto w = weekly_aggregate(daily);
	REQUIRE(w.size() == 1);
	CHECK(w.begin()->second == 7.0);
	CHECK(w.begin()->first.second == mon);

	DailyPanel boundary{{{od, mon - 1}, 2.0}, {{od, mon}, 3.0}};
	auto b = weekly_aggregate(boundary);
	CHECK(b.size() == 2);
	CHECK(weekly_aggregate({}).empty());

	std::mt19937 rng(3);
	std::uniform_real_distribution<double> u(0, 10);
	DailyPanel rnd;
	double total = 0;
	for (int i = 0; i < 100; ++i) {
		double v = u(rng);
		rnd[{od, mon + i * 3}] = v;
		total += v;
	}
	double wtotal = 0;
	for (const auto& [_, v] : weekly_aggregate(rnd))
		wtotal += v;
	CHECK(wtotal == doctest::Approx(total).epsilon(1e-12));
}

TEST_CASE("weekly_sums groups by Monday") {
	std::vector<double> daily(10, 1.0);
	auto w = weekly_sums(Date::parse("2023-01-04"), daily); // Wednesday
	REQUIRE(w.size() == 2);
	CHECK(w[0].first == Date::parse("2023-01-02"));
	CHECK(w[0].second == 5.0);
	CHECK(w[1].second == 5.0);
}
