#pragma once

#include "odcast/data.hpp"
#include "odcast/meta.hpp"
#include "odcast/metrics.hpp"
#include "odcast/model_id.hpp"
#include "odcast/neural.hpp"
#include "odcast/stat_models.hpp"

#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace odcast::moe {

/// A pool member ready to forecast any OD from its history.
class Expert {
public:
	virtual ~Expert() = default;
	virtual ModelId id() const = 0;
	/// Daily forecast for the `horizon` days after `history` ends.
	/// Throws InsufficientHistory when the model cannot serve this OD.
	virtual std::vector<double> forecast(const ODSeries& history, int horizon) const = 0;
};

/// Refits the statistical model on each call's history.
std::unique_ptr<Expert> make_stat_expert(const std::string& name, const stat::StatOptions& opt = {});

/// Neural model with frozen parameters. When `meta` is set every forecast
/// fine-tunes a private copy on the OD first.
std::unique_ptr<Expert> make_neural_expert(ModelId id, nn::NeuralModel model,
                                           std::optional<meta::MetaConfig> meta = std::nullopt);

/// Expert that is unavailable everywhere (e.g. a neural model with no
/// trainable series); `reason` is reported for each OD.
std::unique_ptr<Expert> make_unavailable_expert(ModelId id, std::string reason);

struct PoolEntry {
	ModelId id;
	stat::StatOptions stat;  // statistical models
	nn::NeuralConfig neural; // neural models
};

struct PoolConfig {
	std::vector<PoolEntry> entries;
	meta::MetaConfig meta;
};

using Log = std::function<void(const std::string&)>;

/// Trains every pool entry on `train` (train-split series only). Neural
/// entries that cannot be trained become unavailable experts.
std::vector<std::unique_ptr<Expert>> train_pool(const PoolConfig& pool, std::span<const ODSeries> train,
                                                const Log& log = {});

/// Weekly forecasts of every (OD, model) over one window.
struct ForecastGrid {
	std::vector<ODKey> ods;
	std::vector<ModelId> models;
	std::vector<Date> weeks; // ISO week starts covering the window
	std::vector<std::optional<std::vector<double>>> cells; // nullopt = unavailable
	std::vector<std::string> reasons;                      // why a cell is unavailable

	ForecastGrid() = default;
	ForecastGrid(std::vector<ODKey> ods, std::vector<ModelId> models, std::vector<Date> weeks);
	std::size_t index(std::size_t od, std::size_t model) const { return od * models.size() + model; }
	const std::optional<std::vector<double>>& at(std::size_t od, std::size_t model) const {
		return cells[index(od, model)];
	}
};

/// ISO week starts of the days in `window`, in order.
std::vector<Date> window_weeks(const DateRange& window);

/// Weekly sums of `series` over `window`, aligned with window_weeks(window).
std::vector<double> weekly_actual(const ODSeries& series, const DateRange& window);

/// Forecasts `window` for each history (each must end the day before the
/// window starts). Insufficient history marks a cell unavailable; any other
/// error is rethrown naming the model and OD.
ForecastGrid forecast_grid(std::span<const std::unique_ptr<Expert>> experts, std::span<const ODSeries> histories,
                           const DateRange& window);

/// Per-OD loss: weekly nRMSE, or weekly RMSE for ODs whose actuals are all
/// zero (the normaliser is per OD, so the ranking is the same).
double selection_loss(std::span<const double> actual, std::span<const double> predicted);

/// Loss of every available cell against `actual` (keyed by OD, aligned with
/// grid.weeks). Throws NumericError on a NaN loss.
LossTable score_grid(const ForecastGrid& grid, const std::map<ODKey, std::vector<double>>& actual);

struct Scored {
	ForecastGrid grid;
	LossTable table;
};

/// forecast_grid followed by score_grid against the histories' own values
/// over the validation window.
Scored score_pool(std::span<const std::unique_ptr<Expert>> experts, std::span<const ODSeries> train_histories,
                  std::span<const ODSeries> full_series, const DateRange& validation);

struct ExpertAssignment {
	std::map<ODKey, ModelId> expert;
	std::map<ODKey, double> validation_loss;
};

/// Per-OD argmin of the validation losses, ties by model priority.
/// Throws InvalidArgument when an OD has no available model.
ExpertAssignment select_experts(const LossTable& table);

/// Models available for `od`, best validation loss first (ties by priority).
std::vector<std::size_t> ranked_models(const LossTable& table, std::size_t od);

struct MoeForecast {
	std::vector<Date> weeks;
	std::map<ODKey, std::vector<double>> weekly;
	std::map<ODKey, ModelId> served_by;
	std::vector<std::string> substitutions; // one line per fallback
};

/// Source of an expert's weekly test forecast; nullopt means it failed.
using ForecastSource = std::function<std::optional<std::vector<double>>(std::size_t od, std::size_t model,
                                                                        std::string* reason)>;

/// Routes each OD to its assigned expert, falling back to the next best
/// model by validation loss when the expert fails. Throws InsufficientHistory
/// when every model fails for an OD.
MoeForecast predict_moe(const ExpertAssignment& assignment, const LossTable& validation, const std::vector<Date>& weeks,
                        const ForecastSource& source);
/// Variant that reads precomputed test forecasts from `test_grid`.
MoeForecast predict_moe(const ExpertAssignment& assignment, const LossTable& validation, const ForecastGrid& test_grid);

/// CSV `origin,destination,model_id,validation_loss`.
void write_assignment(const ExpertAssignment& a, std::ostream& out);
ExpertAssignment read_assignment(std::istream& in);

} // namespace odcast::moe
