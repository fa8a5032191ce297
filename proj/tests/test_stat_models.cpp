#include "doctest.h"

#include "odcast/error.hpp"
#include "odcast/stat_models.hpp"

#include <cmath>
#include <random>

using namespace odcast;
using namespace odcast::stat;

namespace {

using Vec = std::vector<double>;

Vec fit_predict(Forecaster& f, const Vec& y, int h) {
	f.fit(y);
	return f.predict_raw(h);
}

// Textbook additive Holt-Winters written with explicit time-indexed arrays
// (l[t], b[t], s[t]); independent of the library's rolling-state version.
Vec oracle_holt_winters(const Vec& y, int m, double a, double b, double g, int horizon) {
	const int n = int(y.size());
	double l0 = 0, l1 = 0;
	for (int i = 0; i < m; ++i) {
		l0 += y[std::size_t(i)];
		l1 += y[std::size_t(i + m)];
	}
	l0 /= m;
	l1 /= m;
	const auto N = static_cast<std::size_t>(n);
	Vec L(N), B(N), S(N);
	for (int i = 0; i < m; ++i)
		S[std::size_t(i)] = y[std::size_t(i)] - l0;
	L[std::size_t(m - 1)] = l0;
	B[std::size_t(m - 1)] = (l1 - l0) / m;
	for (int t = m; t < n; ++t) {
		auto T = std::size_t(t);
		L[T] = a * (y[T] - S[T - std::size_t(m)]) + (1 - a) * (L[T - 1] + B[T - 1]);
		B[T] = b * (L[T] - L[T - 1]) + (1 - b) * B[T - 1];
		S[T] = g * (y[T] - L[T]) + (1 - g) * S[T - std::size_t(m)];
	}
	Vec out;
	for (int h = 1; h <= horizon; ++h) {
		int k = (h + m - 1) / m;
		out.push_back(L.back() + h * B.back() + S[std::size_t(n - 1 + h - m * k)]);
	}
	return out;
}

// Theta forecast from the stated formulas: least-squares line refit on each
// prefix, theta line, SES of the theta line.
double oracle_theta(const Vec& y, double theta, double alpha, int h) {
	auto line = [&](std::size_t len, double& A, double& B) {
		if (len == 1) {
			A = y[0];
			B = 0;
			return;
		}
		double mt = 0, my = 0;
		for (std::size_t i = 0; i < len; ++i) {
			mt += double(i + 1);
			my += y[i];
		}
		mt /= double(len);
		my /= double(len);
		double num = 0, den = 0;
		for (std::size_t i = 0; i < len; ++i) {
			num += (double(i + 1) - mt) * (y[i] - my);
			den += (double(i + 1) - mt) * (double(i + 1) - mt);
		}
		B = num / den;
		A = my - B * mt;
	};
	double level = 0, A = 0, B = 0;
	for (std::size_t i = 0; i < y.size(); ++i) {
		line(i + 1, A, B);
		double z = theta * y[i] + (1 - theta) * (A + B * double(i + 1));
		level = i == 0 ? z : alpha * z + (1 - alpha) * level;
	}
	double T = double(y.size());
	return level / theta + (1 - 1 / theta) * (A + B * (T + h));
}

Vec noisy_weekly(std::size_t n, unsigned seed, double base = 50.0) {
	std::mt19937_64 rng(seed);
	std::normal_distribution<double> nd(0, 2.0);
	Vec y(n);
	for (std::size_t t = 0; t < n; ++t)
		y[t] = base + 0.05 * double(t) + 10.0 * std::sin(2 * M_PI * double(t) / 7.0) + nd(rng);
	return y;
}

void check_close(const Vec& a, const Vec& b, double rel = 1e-9) {
	REQUIRE(a.size() == b.size());
	for (std::size_t i = 0; i < a.size(); ++i)
		CHECK(a[i] == doctest::Approx(b[i]).epsilon(rel).scale(1.0));
}

const char* kAllModels[] = {"historic_avg", "window_avg", "seasonal_naive", "yoy", "ses",
                            "croston",      "holt_winters", "auto_ets",     "dot"};

} // namespace

TEST_CASE("historic and window averages") {
	HistoricAverage ha;
	CHECK(fit_predict(ha, {1, 2, 3}, 2) == Vec{2, 2});
	CHECK(fit_predict(ha, {0, 0, 0}, 3) == Vec{0, 0, 0});
	CHECK(fit_predict(ha, {4.5, 4.5}, 1) == Vec{4.5});

	WindowAverage w2(2);
	CHECK(fit_predict(w2, {1, 2, 3}, 2) == Vec{2.5, 2.5});
	WindowAverage w1(1);
	CHECK(fit_predict(w1, {0, 0, 6}, 3) == Vec{6, 6, 6});
	WindowAverage wide(1000);
	auto y = noisy_weekly(60, 1);
	check_close(fit_predict(wide, y, 5), fit_predict(ha, y, 5), 1e-14);
}

TEST_CASE("seasonal naive") {
	SeasonalNaive sn(2);
	CHECK(fit_predict(sn, {1, 2, 3, 4}, 3) == Vec{3, 4, 3});
	SeasonalNaive naive(1);
	CHECK(fit_predict(naive, {5, 1, 7}, 3) == Vec{7, 7, 7});
	SeasonalNaive weekly(7);
	CHECK(fit_predict(weekly, Vec(14, 3.0), 10) == Vec(10, 3.0));
}

TEST_CASE("year over year benchmark") {
	YearOverYear yoy;
	Vec y(400);
	for (std::size_t t = 0; t < y.size(); ++t)
		y[t] = double(t % 364) + 1.0;
	auto f = fit_predict(yoy, y, 400);
	for (std::size_t k = 0; k < f.size(); ++k)
		CHECK(f[k] == double((400 + k) % 364) + 1.0);

	Vec nine(364, 1.0);
	nine[0] = 9.0;
	CHECK(fit_predict(yoy, nine, 1)[0] == 9.0);

	Vec shorty{2, 4, 6};
	CHECK(fit_predict(yoy, shorty, 2) == Vec{4, 4});
}

TEST_CASE("simple exponential smoothing") {
	SES half(0.5);
	CHECK(fit_predict(half, {2, 4}, 1)[0] == doctest::Approx(3.0));
	SES one(1.0);
	CHECK(fit_predict(one, {2, 5, 8}, 2) == Vec{8, 8});
	SES zero(0.0);
	CHECK(fit_predict(zero, {2, 5, 8}, 2) == Vec{2, 2});

	// Optimised alpha must not do worse than any grid alpha.
	auto y = noisy_weekly(120, 3);
	SES opt;
	opt.fit(y);
	double best = ses_sse(y, opt.alpha());
	for (double a = 0.01; a <= 0.99; a += 0.01)
		CHECK(best <= ses_sse(y, a) * (1 + 1e-6));
	CHECK_THROWS_AS(SES(1.5), InvalidArgument);
}

TEST_CASE("Holt-Winters") {
	HoltWinters constant;
	auto c = fit_predict(constant, Vec(28, 7.0), 14);
	for (double v : c)
		CHECK(v == doctest::Approx(7.0));
	CHECK(constant.state().trend == doctest::Approx(0.0));
	for (double s : constant.state().seasonals)
		CHECK(s == doctest::Approx(0.0));

	HoltWinters periodic(2, SmoothingParams{0.3, 0.2, 0.4});
	auto p = fit_predict(periodic, {1, 3, 1, 3, 1, 3, 1, 3}, 4);
	check_close(p, {1, 3, 1, 3}, 1e-12);
	CHECK(run_smoothing(Vec{1, 3, 1, 3, 1, 3}, true, true, 2, {0.3, 0.2, 0.4}, 2) == doctest::Approx(0.0));

	// y_t = t with a one-step season: the stated initialisation yields an
	// exact linear continuation.
	Vec lin(30);
	for (std::size_t t = 0; t < lin.size(); ++t)
		lin[t] = double(t + 1);
	HoltWinters hw_lin(1);
	auto l = fit_predict(hw_lin, lin, 28);
	for (int h = 1; h <= 28; ++h)
		CHECK(l[std::size_t(h - 1)] == doctest::Approx(30.0 + h));
	check_close(l, oracle_holt_winters(lin, 1, hw_lin.state().alpha, hw_lin.state().beta, hw_lin.state().gamma, 28));

	SUBCASE("matches the direct recursion for arbitrary parameters") {
		auto y = noisy_weekly(91, 5);
		for (SmoothingParams sp : {SmoothingParams{0.2, 0.1, 0.3}, SmoothingParams{0.9, 0.0, 1.0},
		                           SmoothingParams{0.05, 0.5, 0.0}}) {
			HoltWinters hw(7, sp);
			check_close(fit_predict(hw, y, 21), oracle_holt_winters(y, 7, sp.alpha, sp.beta, sp.gamma, 21));
		}
		HoltWinters opt;
		auto f = fit_predict(opt, y, 21);
		const auto& st = opt.state();
		check_close(f, oracle_holt_winters(y, 7, st.alpha, st.beta, st.gamma, 21));
		CHECK(st.seasonals.size() == 7u);
	}
	CHECK_THROWS_AS(HoltWinters(7, SmoothingParams{1.2, 0, 0}), InvalidArgument);
}

TEST_CASE("Croston") {
	Croston cr(0.5);
	CHECK(fit_predict(cr, {0, 2, 0, 0, 3}, 3) == Vec{1.0, 1.0, 1.0});
	CHECK(cr.size_level() == 2.5);
	CHECK(cr.interval_level() == 2.5);
	CHECK(fit_predict(cr, Vec(10, 0.0), 2) == Vec{0, 0});

	auto y = noisy_weekly(50, 9);
	Croston cr3(0.3);
	SES ses(0.3);
	check_close(fit_predict(cr3, y, 4), fit_predict(ses, y, 4), 1e-14);
}

TEST_CASE("AutoETS selection") {
	// AICc recomputed from the reported residual counts and SSEs.
	auto check_aicc = [](const AutoETS& ets) {
		const EtsCandidate* best = nullptr;
		for (const auto& c : ets.candidates()) {
			double n = double(c.n), k = double(c.k);
			if (c.sse > 0)
				CHECK(c.aicc == doctest::Approx(n * std::log(c.sse / n) + 2 * k * n / (n - k - 1)));
			if (!best || c.aicc < best->aicc)
				best = &c;
		}
		REQUIRE(best);
		CHECK(best->variant == ets.selected());
		for (const auto& a : ets.candidates())
			for (const auto& b : ets.candidates())
				if (a.sse > b.sse && a.k > b.k)
					CHECK(a.variant != ets.selected());
	};

	AutoETS constant;
	constant.fit(Vec(56, 12.0));
	CHECK(constant.selected() == EtsVariant::ANN);
	check_aicc(constant);
	for (double v : constant.predict(7))
		CHECK(v == doctest::Approx(12.0));

	Vec lin(60);
	for (std::size_t t = 0; t < lin.size(); ++t)
		lin[t] = 5.0 + 2.0 * double(t);
	AutoETS trend;
	trend.fit(lin);
	CHECK(trend.selected() == EtsVariant::AAN);
	check_aicc(trend);
	auto f = trend.predict(10);
	for (int h = 1; h <= 10; ++h)
		CHECK(f[std::size_t(h - 1)] == doctest::Approx(5.0 + 2.0 * (59 + h)).epsilon(1e-6));

	Vec periodic = noisy_weekly(140, 21, 80.0);
	AutoETS seasonal;
	seasonal.fit(periodic);
	CHECK((seasonal.selected() == EtsVariant::ANA || seasonal.selected() == EtsVariant::AAA));
	check_aicc(seasonal);

	AutoETS tiny;
	CHECK_THROWS_AS(tiny.fit(Vec{1, 2, 3}), InsufficientHistory);
}

TEST_CASE("dynamic optimised theta") {
	auto y = noisy_weekly(80, 13);
	DynamicTheta one(1.0);
	SES ses;
	CHECK(fit_predict(one, y, 7) == fit_predict(ses, y, 7));

	DynamicTheta free_theta;
	for (double v : fit_predict(free_theta, Vec(30, 4.0), 10))
		CHECK(v == doctest::Approx(4.0));

	Vec lin(84);
	for (std::size_t t = 0; t < lin.size(); ++t)
		lin[t] = 10.0 + 0.5 * double(t + 1);
	DynamicTheta ten(10.0);
	auto f = fit_predict(ten, lin, 28);
	double truth = 10.0 + 0.5 * (84 + 28);
	CHECK(std::abs(f[27] - truth) / truth < 0.05);
	CHECK(f[27] == doctest::Approx(oracle_theta(lin, 10.0, ten.alpha(), 28)).epsilon(1e-9));

	auto g = fit_predict(free_theta, y, 14);
	CHECK(free_theta.theta() >= 1.0);
	CHECK(free_theta.theta() <= 10.0);
	for (int h = 1; h <= 14; ++h)
		CHECK(g[std::size_t(h - 1)] ==
		      doctest::Approx(oracle_theta(y, free_theta.theta(), free_theta.alpha(), h)).epsilon(1e-9));
}

TEST_CASE("uniform contract across all statistical models") {
	auto y = noisy_weekly(120, 17);
	y[5] = 0.0;
	for (const char* name : kAllModels) {
		CAPTURE(name);
		auto m = make_forecaster(name);
		CHECK_THROWS_AS(m->predict(3), InvalidArgument);
		m->fit(y);
		for (int h : {1, 7, 28, 60}) {
			auto out = m->predict(h);
			REQUIRE(out.size() == std::size_t(h));
			for (double v : out) {
				CHECK(std::isfinite(v));
				CHECK(v >= 0.0);
			}
		}
		CHECK_THROWS_AS(m->predict(0), InvalidArgument);
		Vec too_short(m->min_history() - 1, 1.0);
		auto fresh = make_forecaster(name);
		if (!too_short.empty() || m->min_history() == 1)
			CHECK_THROWS_AS(fresh->fit(too_short), InsufficientHistory);
	}
	CHECK_THROWS_AS(make_forecaster("arima"), InvalidArgument);
}

TEST_CASE("clamp at zero") {
	Vec falling(40);
	for (std::size_t t = 0; t < falling.size(); ++t)
		falling[t] = 40.0 - double(t);
	AutoETS ets;
	ets.fit(falling);
	auto raw = ets.predict_raw(60);
	auto clamped = ets.predict(60);
	CHECK(raw.back() < 0.0);
	for (std::size_t i = 0; i < raw.size(); ++i)
		CHECK(clamped[i] == std::max(0.0, raw[i]));
}

TEST_CASE("scale equivariance") {
	auto y = noisy_weekly(112, 23);
	for (double c : {0.25, 3.0, 1000.0}) {
		Vec cy(y);
		for (auto& v : cy)
			v *= c;
		for (const char* name : kAllModels) {
			CAPTURE(name);
			CAPTURE(c);
			auto a = make_forecaster(name);
			auto b = make_forecaster(name);
			auto fa = fit_predict(*a, y, 28);
			auto fb = fit_predict(*b, cy, 28);
			for (auto& v : fa)
				v *= c;
			check_close(fb, fa, 1e-7);
		}
	}
}

TEST_CASE("shift equivariance of the linear family") {
	auto y = noisy_weekly(112, 29);
	for (double c : {5.0, 250.0}) {
		Vec sy(y);
		for (auto& v : sy)
			v += c;
		for (const char* name : {"historic_avg", "window_avg", "ses", "holt_winters"}) {
			CAPTURE(name);
			auto a = make_forecaster(name);
			auto b = make_forecaster(name);
			auto fa = fit_predict(*a, y, 28);
			auto fb = fit_predict(*b, sy, 28);
			for (auto& v : fa)
				v += c;
			check_close(fb, fa, 1e-7);
		}
	}
}

TEST_CASE("fit on an ODSeries slice") {
	ODSeries s;
	s.od = ODKey("AAA", "BBB");
	s.start_date = Date::parse("2023-01-01");
	s.values = {1, 2, 3, 4, 5, 6};
	s.feature_width = 0;
	HistoricAverage ha;
	ha.fit(s, {Date::parse("2023-01-02"), Date::parse("2023-01-04")});
	CHECK(ha.predict(1)[0] == 3.0);
	CHECK_THROWS_AS(ha.fit(s, {Date::parse("2024-01-01"), Date::parse("2024-01-04")}), InsufficientHistory);
}
