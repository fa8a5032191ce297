#pragma once

#include "odcast/data.hpp"

#include <algorithm>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace odcast::stat {

/// Uniform fit/predict contract shared by every statistical model.
class Forecaster {
public:
	virtual ~Forecaster() = default;

	virtual std::string name() const = 0;
	/// Minimum number of observations fit() accepts.
	virtual std::size_t min_history() const = 0;

	/// Throws InsufficientHistory when history is shorter than min_history().
	void fit(std::span<const double> history);
	void fit(const ODSeries& series, const DateRange& train);

	/// Unclamped forecast; equivariance properties are stated on this.
	std::vector<double> predict_raw(int horizon) const;
	/// Forecast clamped at zero.
	std::vector<double> predict(int horizon) const;

	bool fitted() const { return fitted_; }

protected:
	virtual void do_fit(std::span<const double> y) = 0;
	virtual std::vector<double> do_predict(int horizon) const = 0;

private:
	bool fitted_ = false;
};

class HistoricAverage final : public Forecaster {
public:
	std::string name() const override { return "historic_avg"; }
	std::size_t min_history() const override { return 1; }
	double mean() const { return mean_; }

protected:
	void do_fit(std::span<const double> y) override;
	std::vector<double> do_predict(int horizon) const override;

private:
	double mean_ = 0.0;
};

class WindowAverage final : public Forecaster {
public:
	explicit WindowAverage(int window = 28);
	std::string name() const override { return "window_avg"; }
	std::size_t min_history() const override { return 1; }

protected:
	void do_fit(std::span<const double> y) override;
	std::vector<double> do_predict(int horizon) const override;

private:
	int window_;
	double mean_ = 0.0;
};

class SeasonalNaive final : public Forecaster {
public:
	explicit SeasonalNaive(int season = 7);
	std::string name() const override { return "seasonal_naive"; }
	std::size_t min_history() const override { return std::size_t(season_); }

protected:
	void do_fit(std::span<const double> y) override;
	std::vector<double> do_predict(int horizon) const override;

private:
	int season_;
	std::vector<double> last_season_;
};

/// Industry benchmark: the value observed `lag` days earlier (364 keeps the
/// weekday). Days whose lag falls before the history use the historic mean.
class YearOverYear final : public Forecaster {
public:
	explicit YearOverYear(int lag = 364);
	std::string name() const override { return "yoy"; }
	std::size_t min_history() const override { return 1; }

protected:
	void do_fit(std::span<const double> y) override;
	std::vector<double> do_predict(int horizon) const override;

private:
	int lag_;
	std::vector<double> history_;
	double mean_ = 0.0;
};

/// Simple exponential smoothing with s_1 = y_1. Without a fixed alpha, alpha
/// minimises the one-step SSE by golden-section search on [0.01, 0.99].
class SES final : public Forecaster {
public:
	explicit SES(std::optional<double> alpha = std::nullopt);
	std::string name() const override { return "ses"; }
	std::size_t min_history() const override { return alpha_fixed_ ? 1 : 2; }
	double alpha() const { return alpha_; }
	double level() const { return level_; }

protected:
	void do_fit(std::span<const double> y) override;
	std::vector<double> do_predict(int horizon) const override;

private:
	bool alpha_fixed_;
	double alpha_;
	double level_ = 0.0;
};

/// Additive-error smoothing state shared by Holt-Winters and the ETS family.
struct SmoothingState {
	double level = 0.0;
	double trend = 0.0;
	std::vector<double> seasonals; // indexed by absolute time mod m
	double alpha = 0.0;
	double beta = 0.0;
	double gamma = 0.0;
	int m = 1;
	std::size_t last_index = 0; // 0-based time of the final observation

	double forecast(int h) const;
};

struct SmoothingParams {
	double alpha = 0.0;
	double beta = 0.0;
	double gamma = 0.0;
};

/// Additive Holt-Winters. Parameters are chosen by coordinate search over a
/// 21-point grid per axis unless given.
class HoltWinters final : public Forecaster {
public:
	explicit HoltWinters(int season = 7, std::optional<SmoothingParams> params = std::nullopt);
	std::string name() const override { return "holt_winters"; }
	std::size_t min_history() const override { return std::size_t(2 * season_); }
	const SmoothingState& state() const { return state_; }

protected:
	void do_fit(std::span<const double> y) override;
	std::vector<double> do_predict(int horizon) const override;

private:
	int season_;
	std::optional<SmoothingParams> params_;
	SmoothingState state_;
};

class Croston final : public Forecaster {
public:
	explicit Croston(double alpha = 0.1);
	std::string name() const override { return "croston"; }
	std::size_t min_history() const override { return 1; }
	double size_level() const { return size_level_; }
	double interval_level() const { return interval_level_; }

protected:
	void do_fit(std::span<const double> y) override;
	std::vector<double> do_predict(int horizon) const override;

private:
	double alpha_;
	double size_level_ = 0.0;
	double interval_level_ = 1.0;
	bool any_demand_ = false;
};

enum class EtsVariant { ANN, AAN, ANA, AAA };
const char* ets_variant_name(EtsVariant v);

struct EtsCandidate {
	EtsVariant variant;
	double sse = 0.0;
	std::size_t n = 0;      // residuals in the common evaluation window
	std::size_t k = 0;      // smoothing parameters + initial states
	double aicc = 0.0;
	SmoothingState state;
};

/// Chooses among ANN, AAN, ANA and AAA by AICc on a common one-step
/// evaluation window (observations after the first season).
class AutoETS final : public Forecaster {
public:
	explicit AutoETS(int season = 7);
	std::string name() const override { return "auto_ets"; }
	/// ANN needs more than three residuals after the first season.
	std::size_t min_history() const override { return std::size_t(std::max(season_, 1)) + 4; }
	EtsVariant selected() const { return selected_; }
	const std::vector<EtsCandidate>& candidates() const { return candidates_; }

protected:
	void do_fit(std::span<const double> y) override;
	std::vector<double> do_predict(int horizon) const override;

private:
	int season_;
	EtsVariant selected_ = EtsVariant::ANN;
	std::vector<EtsCandidate> candidates_;
	SmoothingState state_;
};

/// Dynamic optimised theta: theta line around an expanding-window linear
/// trend, smoothed by SES. theta and alpha are searched jointly unless theta is
/// fixed.
class DynamicTheta final : public Forecaster {
public:
	explicit DynamicTheta(std::optional<double> theta = std::nullopt);
	std::string name() const override { return "dot"; }
	std::size_t min_history() const override { return 2; }
	double theta() const { return theta_; }
	double alpha() const { return alpha_; }

protected:
	void do_fit(std::span<const double> y) override;
	std::vector<double> do_predict(int horizon) const override;

private:
	std::optional<double> fixed_theta_;
	double theta_ = 1.0;
	double alpha_ = 0.5;
	double level_ = 0.0;
	double intercept_ = 0.0;
	double slope_ = 0.0;
	std::size_t n_ = 0;
};

/// Minimiser of a unimodal function on [lo, hi]; fixed iteration count.
double golden_section(const std::function<double(double)>& f, double lo, double hi, int iterations = 60);

/// One-step SSE of SES over observations 2..n.
double ses_sse(std::span<const double> y, double alpha);

/// Runs the additive smoothing recursion; returns SSE over residuals at
/// 0-based times >= eval_from.
double run_smoothing(std::span<const double> y, bool trend, bool season, int m, const SmoothingParams& p,
                     std::size_t eval_from, SmoothingState* final_state = nullptr, std::size_t* n_resid = nullptr);

/// Coordinate search over the 21-point grid {0, 0.05, ..., 1} on the active axes.
SmoothingParams optimize_smoothing(std::span<const double> y, bool trend, bool season, int m, std::size_t eval_from);

struct StatOptions {
	int window = 28;
	int season = 7;
	int yoy_lag = 364;
	double croston_alpha = 0.1;
};

/// Names: historic_avg, window_avg, seasonal_naive, yoy, ses, croston,
/// holt_winters, auto_ets, dot. Throws InvalidArgument otherwise.
std::unique_ptr<Forecaster> make_forecaster(const std::string& name, const StatOptions& opt = {});
bool is_stat_model(const std::string& name);

} // namespace odcast::stat
