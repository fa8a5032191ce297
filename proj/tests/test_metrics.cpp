#include "doctest.h"

#include "odcast/error.hpp"
#include "odcast/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

using namespace odcast;

namespace {

ODKey od(int i) {
	std::string o = "AA" + std::string(1, char('A' + i));
	return ODKey(o, "ZZZ");
}

ModelId mid(const std::string& s) {
	return ModelId::parse(s);
}

} // namespace

TEST_CASE("rmse and nrmse") {
	CHECK(rmse(std::vector<double>{2, 4}, std::vector<double>{2, 4}) == 0.0);
	CHECK(rmse(std::vector<double>{1, 3}, std::vector<double>{3, 1}) == doctest::Approx(2.0));
	CHECK(rmse(std::vector<double>{1, 5, 9}, std::vector<double>{3.5, 7.5, 11.5}) == doctest::Approx(2.5));
	CHECK_THROWS_AS(rmse(std::vector<double>{1}, std::vector<double>{1, 2}), InvalidArgument);

	CHECK(*nrmse(std::vector<double>{1, 3}, std::vector<double>{3, 1}) == doctest::Approx(1.0));
	CHECK(*nrmse(std::vector<double>{1, 3}, std::vector<double>{1, 3}) == 0.0);
	CHECK_FALSE(nrmse(std::vector<double>{0, 0}, std::vector<double>{1, 2}).has_value());
}

TEST_CASE("wnrmse") {
	std::vector<ODScore> two{{od(0), 10, 1.0}, {od(1), 30, 0.5}};
	CHECK(wnrmse(two) == doctest::Approx(0.625));
	std::vector<ODScore> one{{od(0), 7, 0.3}};
	CHECK(wnrmse(one) == doctest::Approx(0.3));
	std::vector<ODScore> eq{{od(0), 5, 0.2}, {od(1), 5, 0.8}};
	CHECK(wnrmse(eq) == doctest::Approx(0.5));

	std::vector<ODScore> with_excluded{{od(0), 10, 1.0}, {od(1), 30, 0.5}, {od(2), 0, std::nullopt}};
	CHECK(wnrmse(with_excluded) == doctest::Approx(0.625));
	std::vector<ODScore> none{{od(0), 0, std::nullopt}};
	CHECK_THROWS_AS(wnrmse(none), InvalidArgument);

	std::vector<SeriesPair> pairs{{od(0), {1, 3}, {3, 1}}, {od(1), {0, 0}, {1, 1}}};
	CHECK(wnrmse(pairs) == doctest::Approx(1.0));
}

TEST_CASE("wnrmse is a convex combination and nrmse is scale invariant") {
	std::mt19937_64 rng(4);
	std::uniform_real_distribution<double> u(0.1, 50.0);
	for (int trial = 0; trial < 50; ++trial) {
		std::vector<SeriesPair> pairs;
		for (int i = 0; i < 6; ++i) {
			SeriesPair p{od(i), {}, {}};
			for (int w = 0; w < 8; ++w) {
				p.actual.push_back(u(rng));
				p.predicted.push_back(u(rng));
			}
			pairs.push_back(p);
		}
		double lo = 1e300, hi = -1e300;
		for (const auto& p : pairs) {
			lo = std::min(lo, *nrmse(p));
			hi = std::max(hi, *nrmse(p));
		}
		double w = wnrmse(pairs);
		CHECK(w >= lo - 1e-12);
		CHECK(w <= hi + 1e-12);

		SeriesPair scaled = pairs[0];
		for (auto& v : scaled.actual)
			v *= 7.5;
		for (auto& v : scaled.predicted)
			v *= 7.5;
		CHECK(*nrmse(scaled) == doctest::Approx(*nrmse(pairs[0])).epsilon(1e-12));
	}
}

TEST_CASE("loss table argmin uses the fixed tie order") {
	LossTable t({od(0)}, {mid("tft"), mid("ses"), mid("historic_avg")});
	t.set(0, 0, 1.0);
	t.set(0, 1, 1.0);
	t.set(0, 2, 1.0);
	CHECK(*t.argmin(0) == 2);
	t.set(0, 2, std::nullopt);
	CHECK(*t.argmin(0) == 1);
	t.set(0, 0, 0.5);
	CHECK(*t.argmin(0) == 0);
	CHECK_THROWS_AS(t.set(0, 0, std::nan("")), NumericError);

	LossTable meta({od(0)}, {mid("nbeats+meta"), mid("nbeats")});
	meta.set(0, 0, 2.0);
	meta.set(0, 1, 2.0);
	CHECK(*meta.argmin(0) == 1);

	LossTable empty({od(0)}, {mid("ses")});
	CHECK_FALSE(empty.argmin(0).has_value());
}

TEST_CASE("win ratios") {
	LossTable t({od(0), od(1), od(2), od(3)}, {mid("ses"), mid("dot")});
	for (std::size_t o = 0; o < 4; ++o) {
		t.set(o, 0, o < 3 ? 1.0 : 2.0);
		t.set(o, 1, o < 3 ? 2.0 : 1.0);
	}
	auto r = win_ratios(t);
	CHECK(r["ses"] == doctest::Approx(0.75));
	CHECK(r["dot"] == doctest::Approx(0.25));

	std::set<ODKey> first_two{od(0), od(1)};
	auto r2 = win_ratios(t, &first_two);
	CHECK(r2["ses"] == 1.0);
	CHECK(r2["dot"] == 0.0);

	std::mt19937_64 rng(12);
	std::uniform_int_distribution<int> small(0, 3);
	for (int trial = 0; trial < 30; ++trial) {
		std::vector<ODKey> ods;
		for (int i = 0; i < 10; ++i)
			ods.push_back(od(i));
		LossTable rt(ods, {mid("ses"), mid("dot"), mid("tft"), mid("tft+meta"), mid("yoy")});
		for (std::size_t o = 0; o < 10; ++o)
			for (std::size_t m = 0; m < 5; ++m)
				rt.set(o, m, double(small(rng)));
		auto ratios = win_ratios(rt);
		double total = 0;
		for (const auto& [_, v] : ratios) {
			CHECK(v >= 0.0);
			total += v;
		}
		CHECK(std::abs(total - 1.0) < 1e-9);
	}
}

TEST_CASE("argmin is the same under RMSE and nRMSE") {
	std::mt19937_64 rng(77);
	std::uniform_real_distribution<double> u(0.0, 20.0);
	std::vector<std::string> names{"ses", "dot", "tft", "yoy"};
	for (int trial = 0; trial < 30; ++trial) {
		std::vector<double> actual(6);
		for (auto& v : actual)
			v = u(rng) + 1.0;
		LossTable by_rmse({od(0)}, {mid("ses"), mid("dot"), mid("tft"), mid("yoy")});
		LossTable by_nrmse = by_rmse;
		for (std::size_t m = 0; m < names.size(); ++m) {
			std::vector<double> pred(6);
			for (auto& v : pred)
				v = u(rng);
			by_rmse.set(0, m, rmse(actual, pred));
			by_nrmse.set(0, m, *nrmse(actual, pred));
		}
		CHECK(*by_rmse.argmin(0) == *by_nrmse.argmin(0));
	}
}

TEST_CASE("ml vs baseline win rate") {
	std::vector<ODKey> ods{od(0), od(1), od(2), od(3)};
	std::set<ODKey> all(ods.begin(), ods.end());
	LossTable t(ods, {mid("tft"), mid("nbeats"), mid("ses"), mid("yoy")});
	double vals[4][4] = {{1, 5, 2, 3}, {3, 2.5, 2, 9}, {4, 4, 4, 4}, {0.5, 9, 1, 1}};
	for (std::size_t o = 0; o < 4; ++o)
		for (std::size_t m = 0; m < 4; ++m)
			t.set(o, m, vals[o][m]);
	std::set<std::string> ml{"tft", "nbeats"};
	CHECK(*ml_vs_baseline_winrate(t, ml, {"ses"}, all) == doctest::Approx(0.5));
	CHECK(*ml_vs_baseline_winrate(t, ml, {"yoy"}, all) == doctest::Approx(0.75));

	LossTable same(ods, {mid("tft"), mid("ses")});
	for (std::size_t o = 0; o < 4; ++o) {
		same.set(o, 0, 1.0);
		same.set(o, 1, 1.0);
	}
	CHECK(*ml_vs_baseline_winrate(same, {"tft"}, {"ses"}, all) == 0.0);
	for (std::size_t o = 0; o < 4; ++o)
		same.set(o, 0, 0.5);
	CHECK(*ml_vs_baseline_winrate(same, {"tft"}, {"ses"}, all) == 1.0);
	CHECK_THROWS_AS(ml_vs_baseline_winrate(same, {}, {"ses"}, all), InvalidArgument);
}

TEST_CASE("cluster report") {
	// Three ODs: A and B in Top 100 and the significant cluster, C in Top 100 only.
	std::map<ODKey, ODScore> scores{{od(0), {od(0), 60, 0.2}}, {od(1), {od(1), 30, 0.4}}, {od(2), {od(2), 10, 1.0}}};
	std::map<ODKey, ClusterLabel> labels{{od(0), {RankCluster::Top100, true, 1}},
	                                     {od(1), {RankCluster::Top100, true, 2}},
	                                     {od(2), {RankCluster::Top100, false, 3}}};
	std::map<ODKey, double> revenue{{od(0), 500}, {od(1), 300}, {od(2), 200}};
	auto rows = cluster_report(scores, labels, revenue);
	REQUIRE(rows.size() == 5);
	CHECK(rows[0].group == "Significant cluster");
	CHECK(rows[0].sample_size == 2);
	CHECK(rows[0].revenue_share == doctest::Approx(0.8));
	CHECK(*rows[0].nrmse == doctest::Approx(0.3));
	CHECK(*rows[0].wnrmse == doctest::Approx((60 * 0.2 + 30 * 0.4) / 90));
	CHECK(rows[1].group == "Top 100");
	CHECK(rows[1].sample_size == 3);
	CHECK(*rows[1].wnrmse == doctest::Approx(0.6 * 0.2 + 0.3 * 0.4 + 0.1 * 1.0));
	std::vector<ODScore> all;
	for (const auto& [_, s] : scores)
		all.push_back(s);
	CHECK(*rows[1].wnrmse == doctest::Approx(wnrmse(all)));
	CHECK(rows[2].sample_size == 0);
	CHECK_FALSE(rows[2].nrmse.has_value());

	double share = 0;
	for (std::size_t i = 1; i < rows.size(); ++i)
		share += rows[i].revenue_share;
	CHECK(std::abs(share - 1.0) < 1e-9);
}

TEST_CASE("model ids") {
	CHECK(mid("tft+meta").meta);
	CHECK(mid("tft+meta").to_string() == "tft+meta");
	CHECK(mid("yoy").type() == ModelType::Benchmark);
	CHECK(mid("dot").type() == ModelType::Stat);
	CHECK(mid("nbeats").type() == ModelType::ML);
	CHECK_THROWS_AS(mid("ses+meta"), InvalidArgument);
	CHECK_THROWS_AS(mid("prophet"), InvalidArgument);
	CHECK(mid("historic_avg").priority() < mid("tft").priority());
	CHECK(mid("tft").priority() < mid("tft+meta").priority());
}
