#include "odcast/stat_models.hpp"

#include "odcast/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace odcast::stat {

// ---------------------------------------------------------------------------
// Forecaster

void Forecaster::fit(std::span<const double> history) {
	if (history.size() < min_history())
		throw InsufficientHistory(name() + " needs at least " + std::to_string(min_history()) + " observations, got " +
		                          std::to_string(history.size()));
	for (double v : history)
		if (!std::isfinite(v))
			throw InvalidArgument(name() + ": non-finite observation");
	do_fit(history);
	fitted_ = true;
}

void Forecaster::fit(const ODSeries& series, const DateRange& train) {
	DateRange r = train.intersect(series.range());
	if (r.empty())
		throw InsufficientHistory(name() + ": training range does not overlap the series");
	fit(std::span<const double>(series.values).subspan(series.index_of(r.first), std::size_t(r.days())));
}

std::vector<double> Forecaster::predict_raw(int horizon) const {
	if (!fitted_)
		throw InvalidArgument(name() + ": predict called before fit");
	if (horizon <= 0)
		throw InvalidArgument("horizon must be positive");
	auto out = do_predict(horizon);
	for (double v : out)
		if (!std::isfinite(v))
			throw NumericError(name() + " produced a non-finite forecast");
	return out;
}

std::vector<double> Forecaster::predict(int horizon) const {
	auto out = predict_raw(horizon);
	for (auto& v : out)
		v = std::max(0.0, v);
	return out;
}

namespace {

double mean_of(std::span<const double> y) {
	return std::accumulate(y.begin(), y.end(), 0.0) / double(y.size());
}

inline double smooth(double alpha, double x, double prev) {
	return alpha * x + (1.0 - alpha) * prev;
}

} // namespace

// ---------------------------------------------------------------------------
// Averages and naive models

void HistoricAverage::do_fit(std::span<const double> y) {
	mean_ = mean_of(y);
}

std::vector<double> HistoricAverage::do_predict(int horizon) const {
	return std::vector<double>(std::size_t(horizon), mean_);
}

WindowAverage::WindowAverage(int window) : window_(window) {
	if (window <= 0)
		throw InvalidArgument("window must be positive");
}

void WindowAverage::do_fit(std::span<const double> y) {
	std::size_t w = std::min(y.size(), std::size_t(window_));
	mean_ = mean_of(y.last(w));
}

std::vector<double> WindowAverage::do_predict(int horizon) const {
	return std::vector<double>(std::size_t(horizon), mean_);
}

SeasonalNaive::SeasonalNaive(int season) : season_(season) {
	if (season <= 0)
		throw InvalidArgument("season length must be positive");
}

void SeasonalNaive::do_fit(std::span<const double> y) {
	auto tail = y.last(std::size_t(season_));
	last_season_.assign(tail.begin(), tail.end());
}

std::vector<double> SeasonalNaive::do_predict(int horizon) const {
	// y_{T+h-m*ceil(h/m)}: position (h-1) mod m within the last observed season
	std::vector<double> out(static_cast<std::size_t>(horizon));
	for (int h = 1; h <= horizon; ++h)
		out[std::size_t(h - 1)] = last_season_[std::size_t((h - 1) % season_)];
	return out;
}

YearOverYear::YearOverYear(int lag) : lag_(lag) {
	if (lag <= 0)
		throw InvalidArgument("lag must be positive");
}

void YearOverYear::do_fit(std::span<const double> y) {
	history_.assign(y.begin(), y.end());
	mean_ = mean_of(y);
}

std::vector<double> YearOverYear::do_predict(int horizon) const {
	const long n = long(history_.size());
	std::vector<double> out(static_cast<std::size_t>(horizon));
	for (long k = 1; k <= horizon; ++k) {
		long src = n - 1 + k - lag_;
		if (src < 0)
			out[std::size_t(k - 1)] = mean_;
		else if (src < n)
			out[std::size_t(k - 1)] = history_[std::size_t(src)];
		else
			out[std::size_t(k - 1)] = out[std::size_t(src - n)];
	}
	return out;
}

// ---------------------------------------------------------------------------
// SES

double golden_section(const std::function<double(double)>& f, double lo, double hi, int iterations) {
	const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
	double a = lo, b = hi;
	double c = b - gr * (b - a), d = a + gr * (b - a);
	double fc = f(c), fd = f(d);
	for (int i = 0; i < iterations; ++i) {
		if (fc <= fd) {
			b = d;
			d = c;
			fd = fc;
			c = b - gr * (b - a);
			fc = f(c);
		} else {
			a = c;
			c = d;
			fc = fd;
			d = a + gr * (b - a);
			fd = f(d);
		}
	}
	return fc <= fd ? c : d;
}

double ses_sse(std::span<const double> y, double alpha) {
	double s = y[0], sse = 0.0;
	for (std::size_t t = 1; t < y.size(); ++t) {
		const double e = y[t] - s;
		sse += e * e;
		s = smooth(alpha, y[t], s);
	}
	return sse;
}

SES::SES(std::optional<double> alpha) : alpha_fixed_(alpha.has_value()), alpha_(alpha.value_or(0.5)) {
	if (alpha_fixed_ && !(alpha_ >= 0.0 && alpha_ <= 1.0))
		throw InvalidArgument("SES alpha must lie in [0, 1]");
}

void SES::do_fit(std::span<const double> y) {
	if (!alpha_fixed_)
		alpha_ = golden_section([&](double a) { return ses_sse(y, a); }, 0.01, 0.99);
	double s = y[0];
	for (std::size_t t = 1; t < y.size(); ++t)
		s = smooth(alpha_, y[t], s);
	level_ = s;
}

std::vector<double> SES::do_predict(int horizon) const {
	return std::vector<double>(std::size_t(horizon), level_);
}

// ---------------------------------------------------------------------------
// Additive smoothing family

double SmoothingState::forecast(int h) const {
	double s = seasonals.empty() ? 0.0 : seasonals[(last_index + std::size_t(h)) % std::size_t(m)];
	return level + double(h) * trend + s;
}

double run_smoothing(std::span<const double> y, bool trend, bool season, int m, const SmoothingParams& p,
                     std::size_t eval_from, SmoothingState* final_state, std::size_t* n_resid) {
	const std::size_t n = y.size();
	SmoothingState st;
	st.alpha = p.alpha;
	st.beta = trend ? p.beta : 0.0;
	st.gamma = season ? p.gamma : 0.0;
	st.m = season ? m : 1;
	std::size_t start;
	if (season) {
		const auto M = std::size_t(m);
		if (n < (trend ? 2 * M : M))
			throw InsufficientHistory("seasonal smoothing needs more history");
		st.level = mean_of(y.first(M));
		st.trend = trend ? (mean_of(y.subspan(M, M)) - st.level) / double(m) : 0.0;
		st.seasonals.resize(M);
		for (std::size_t i = 0; i < M; ++i)
			st.seasonals[i] = y[i] - st.level;
		start = M;
	} else {
		if (n < (trend ? 2u : 1u))
			throw InsufficientHistory("trend smoothing needs two observations");
		st.level = y[0];
		st.trend = trend ? y[1] - y[0] : 0.0;
		start = 1;
	}

	double sse = 0.0;
	std::size_t count = 0;
	for (std::size_t t = start; t < n; ++t) {
		double* s_slot = season ? &st.seasonals[t % std::size_t(m)] : nullptr;
		const double s_old = s_slot ? *s_slot : 0.0;
		const double e = y[t] - (st.level + st.trend + s_old);
		if (t >= eval_from) {
			sse += e * e;
			++count;
		}
		const double level = st.alpha * (y[t] - s_old) + (1.0 - st.alpha) * (st.level + st.trend);
		if (trend)
			st.trend = st.beta * (level - st.level) + (1.0 - st.beta) * st.trend;
		if (s_slot)
			*s_slot = st.gamma * (y[t] - level) + (1.0 - st.gamma) * s_old;
		st.level = level;
	}
	st.last_index = n - 1;
	if (final_state)
		*final_state = std::move(st);
	if (n_resid)
		*n_resid = count;
	return sse;
}

SmoothingParams optimize_smoothing(std::span<const double> y, bool trend, bool season, int m, std::size_t eval_from) {
	constexpr int kGrid = 21;
	auto grid = [](int i) { return double(i) / double(kGrid - 1); };
	int idx[3] = {10, 2, 2}; // alpha 0.5, beta 0.1, gamma 0.1
	const bool active[3] = {true, trend, season};
	auto eval = [&](const int* ix) {
		return run_smoothing(y, trend, season, m, {grid(ix[0]), grid(ix[1]), grid(ix[2])}, eval_from);
	};
	double best = eval(idx);
	for (int sweep = 0; sweep < 10; ++sweep) {
		bool moved = false;
		for (int axis = 0; axis < 3; ++axis) {
			if (!active[axis])
				continue;
			int cand[3] = {idx[0], idx[1], idx[2]};
			for (int g = 0; g < kGrid; ++g) {
				if (g == idx[axis])
					continue;
				cand[axis] = g;
				double v = eval(cand);
				if (v < best) {
					best = v;
					idx[axis] = g;
					moved = true;
				}
			}
		}
		if (!moved)
			break;
	}
	return {grid(idx[0]), grid(idx[1]), grid(idx[2])};
}

HoltWinters::HoltWinters(int season, std::optional<SmoothingParams> params) : season_(season), params_(params) {
	if (season <= 0)
		throw InvalidArgument("season length must be positive");
	if (params) {
		auto unit = [](double v) { return v >= 0.0 && v <= 1.0; };
		if (!unit(params->alpha) || !unit(params->beta) || !unit(params->gamma))
			throw InvalidArgument("Holt-Winters parameters must lie in [0, 1]");
	}
}

void HoltWinters::do_fit(std::span<const double> y) {
	const auto m = std::size_t(season_);
	SmoothingParams p = params_ ? *params_ : optimize_smoothing(y, true, true, season_, m);
	run_smoothing(y, true, true, season_, p, m, &state_);
}

std::vector<double> HoltWinters::do_predict(int horizon) const {
	std::vector<double> out(static_cast<std::size_t>(horizon));
	for (int h = 1; h <= horizon; ++h)
		out[std::size_t(h - 1)] = state_.forecast(h);
	return out;
}

// ---------------------------------------------------------------------------
// Croston

Croston::Croston(double alpha) : alpha_(alpha) {
	if (!(alpha >= 0.0 && alpha <= 1.0))
		throw InvalidArgument("Croston alpha must lie in [0, 1]");
}

void Croston::do_fit(std::span<const double> y) {
	any_demand_ = false;
	std::size_t last = 0; // 1-based index of the previous demand, 0 = none yet
	for (std::size_t t = 0; t < y.size(); ++t) {
		if (y[t] == 0.0)
			continue;
		const double interval = double(t + 1 - last);
		if (!any_demand_) {
			size_level_ = y[t];
			interval_level_ = interval;
			any_demand_ = true;
		} else {
			size_level_ = smooth(alpha_, y[t], size_level_);
			interval_level_ = smooth(alpha_, interval, interval_level_);
		}
		last = t + 1;
	}
}

std::vector<double> Croston::do_predict(int horizon) const {
	return std::vector<double>(std::size_t(horizon), any_demand_ ? size_level_ / interval_level_ : 0.0);
}

// ---------------------------------------------------------------------------
// AutoETS

const char* ets_variant_name(EtsVariant v) {
	switch (v) {
	case EtsVariant::ANN:
		return "ANN";
	case EtsVariant::AAN:
		return "AAN";
	case EtsVariant::ANA:
		return "ANA";
	case EtsVariant::AAA:
		return "AAA";
	}
	return "?";
}

AutoETS::AutoETS(int season) : season_(season) {
	if (season <= 0)
		throw InvalidArgument("season length must be positive");
}

void AutoETS::do_fit(std::span<const double> y) {
	const std::size_t n = y.size();
	const auto m = std::size_t(season_);
	const std::size_t eval_from = std::max<std::size_t>(m, 1);
	double sq = 0.0;
	for (double v : y)
		sq += v * v;
	// SSE floor relative to the data scale: keeps ln() finite on exact fits
	// without breaking scale equivariance.
	const double floor_per_obs = 1e-20 * (sq / double(n)) + std::numeric_limits<double>::min();

	candidates_.clear();
	struct Spec {
		EtsVariant v;
		bool trend, season;
		std::size_t k, need;
	};
	std::vector<Spec> specs = {{EtsVariant::ANN, false, false, 2, 1}, {EtsVariant::AAN, true, false, 4, 2}};
	if (season_ >= 2) {
		specs.push_back({EtsVariant::ANA, false, true, 3 + m, m});
		specs.push_back({EtsVariant::AAA, true, true, 5 + m, 2 * m});
	}
	for (const auto& s : specs) {
		if (n < s.need)
			continue;
		SmoothingParams p;
		if (!s.trend && !s.season)
			p.alpha = golden_section(
			    [&](double a) { return run_smoothing(y, false, false, season_, {a, 0, 0}, eval_from); }, 0.01, 0.99);
		else
			p = optimize_smoothing(y, s.trend, s.season, season_, eval_from);
		EtsCandidate c{s.v, 0.0, 0, s.k, 0.0, {}};
		c.sse = run_smoothing(y, s.trend, s.season, season_, p, eval_from, &c.state, &c.n);
		if (c.n <= s.k + 1)
			continue;
		const double nn = double(c.n), kk = double(s.k);
		const double sse = std::max(c.sse, nn * floor_per_obs);
		c.aicc = nn * std::log(sse / nn) + 2.0 * kk * nn / (nn - kk - 1.0);
		candidates_.push_back(std::move(c));
	}
	if (candidates_.empty())
		throw InsufficientHistory("auto_ets: no candidate has more observations than parameters");
	const EtsCandidate* best = &candidates_.front();
	for (const auto& c : candidates_)
		if (c.aicc < best->aicc)
			best = &c;
	selected_ = best->variant;
	state_ = best->state;
}

std::vector<double> AutoETS::do_predict(int horizon) const {
	std::vector<double> out(static_cast<std::size_t>(horizon));
	for (int h = 1; h <= horizon; ++h)
		out[std::size_t(h - 1)] = state_.forecast(h);
	return out;
}

// ---------------------------------------------------------------------------
// Dynamic optimised theta

namespace {

struct ThetaRun {
	double sse = 0.0;
	double level = 0.0;
	double intercept = 0.0;
	double slope = 0.0;
};

/// One pass: at each t the trend is refit on y_1..y_t, the theta line value
/// is smoothed, and y_{t+1} is predicted from data through t.
ThetaRun run_theta(std::span<const double> y, double theta, double alpha) {
	ThetaRun r;
	double st = 0, stt = 0, sy = 0, sty = 0;
	const double inv = 1.0 / theta;
	for (std::size_t i = 0; i < y.size(); ++i) {
		const double t = double(i + 1);
		st += t;
		stt += t * t;
		sy += y[i];
		sty += t * y[i];
		double a, b;
		if (i == 0) {
			a = y[0];
			b = 0.0;
		} else {
			b = (t * sty - st * sy) / (t * stt - st * st);
			a = (sy - b * st) / t;
		}
		const double z = theta * y[i] + (1.0 - theta) * (a + b * t);
		r.level = i == 0 ? z : smooth(alpha, z, r.level);
		r.intercept = a;
		r.slope = b;
		if (i + 1 < y.size()) {
			const double pred = inv * r.level + (1.0 - inv) * (a + b * (t + 1.0));
			const double e = y[i + 1] - pred;
			r.sse += e * e;
		}
	}
	return r;
}

} // namespace

DynamicTheta::DynamicTheta(std::optional<double> theta) : fixed_theta_(theta) {
	if (theta && !(*theta >= 1.0))
		throw InvalidArgument("theta must be >= 1");
}

void DynamicTheta::do_fit(std::span<const double> y) {
	auto best_alpha = [&](double th) {
		return golden_section([&](double a) { return run_theta(y, th, a).sse; }, 0.01, 0.99);
	};
	if (fixed_theta_) {
		theta_ = *fixed_theta_;
		alpha_ = best_alpha(theta_);
	} else {
		double best = std::numeric_limits<double>::infinity();
		for (int k = 0; k <= 18; ++k) {
			const double th = 1.0 + 0.5 * k;
			const double a = best_alpha(th);
			const double sse = run_theta(y, th, a).sse;
			if (sse < best) {
				best = sse;
				theta_ = th;
				alpha_ = a;
			}
		}
	}
	auto r = run_theta(y, theta_, alpha_);
	level_ = r.level;
	intercept_ = r.intercept;
	slope_ = r.slope;
	n_ = y.size();
}

std::vector<double> DynamicTheta::do_predict(int horizon) const {
	const double inv = 1.0 / theta_;
	std::vector<double> out(static_cast<std::size_t>(horizon));
	for (int h = 1; h <= horizon; ++h)
		out[std::size_t(h - 1)] = inv * level_ + (1.0 - inv) * (intercept_ + slope_ * double(n_ + std::size_t(h)));
	return out;
}

// ---------------------------------------------------------------------------

std::unique_ptr<Forecaster> make_forecaster(const std::string& name, const StatOptions& opt) {
	if (name == "historic_avg")
		return std::make_unique<HistoricAverage>();
	if (name == "window_avg")
		return std::make_unique<WindowAverage>(opt.window);
	if (name == "seasonal_naive")
		return std::make_unique<SeasonalNaive>(opt.season);
	if (name == "yoy")
		return std::make_unique<YearOverYear>(opt.yoy_lag);
	if (name == "ses")
		return std::make_unique<SES>();
	if (name == "croston")
		return std::make_unique<Croston>(opt.croston_alpha);
	if (name == "holt_winters")
		return std::make_unique<HoltWinters>(opt.season);
	if (name == "auto_ets")
		return std::make_unique<AutoETS>(opt.season);
	if (name == "dot")
		return std::make_unique<DynamicTheta>();
	throw InvalidArgument("unknown statistical model '" + name + "'");
}

bool is_stat_model(const std::string& name) {
	static const char* names[] = {"historic_avg", "window_avg", "seasonal_naive", "yoy",     "ses",
	                              "croston",      "holt_winters", "auto_ets",      "dot"};
	return std::find(std::begin(names), std::end(names), name) != std::end(names);
}

} // namespace odcast::stat
