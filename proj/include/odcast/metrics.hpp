#pragma once

#include "odcast/data.hpp"
#include "odcast/model_id.hpp"

#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace odcast {

/// Actual and predicted values of one OD, aligned by period.
struct SeriesPair {
	ODKey od;
	std::vector<double> actual;
	std::vector<double> predicted;
};

double rmse(std::span<const double> actual, std::span<const double> predicted);
double rmse(const SeriesPair& pair);

/// RMSE divided by mean(actual); nullopt for zero-mean ODs.
std::optional<double> nrmse(std::span<const double> actual, std::span<const double> predicted);
std::optional<double> nrmse(const SeriesPair& pair);

/// Per-OD ingredients of the weighted metric.
struct ODScore {
	ODKey od;
	double weight_sum = 0.0;       // total actual weight over the evaluation window
	std::optional<double> nrmse;   // nullopt = excluded
};

/// Weight-share weighted mean of per-OD nRMSE; excluded ODs drop out and the
/// weights renormalise. Throws InvalidArgument when every OD is excluded.
double wnrmse(std::span<const ODScore> scores);
double wnrmse(std::span<const SeriesPair> pairs);

/// Unweighted mean of the non-excluded nRMSE values; nullopt if none.
std::optional<double> mean_nrmse(std::span<const ODScore> scores);

/// Per-(OD, model) loss; nullopt marks an unavailable model.
class LossTable {
public:
	LossTable() = default;
	LossTable(std::vector<ODKey> ods, std::vector<ModelId> models);

	const std::vector<ODKey>& ods() const { return ods_; }
	const std::vector<ModelId>& models() const { return models_; }
	std::size_t od_index(const ODKey& od) const;
	std::size_t model_index(const ModelId& id) const;

	void set(std::size_t od, std::size_t model, std::optional<double> loss);
	const std::optional<double>& get(std::size_t od, std::size_t model) const {
		return cells_[od * models_.size() + model];
	}

	/// Index of the lowest available loss for `od`, ties broken by ModelId
	/// priority; nullopt when nothing is available. `subset` restricts the
	/// candidate models.
	std::optional<std::size_t> argmin(std::size_t od, const std::vector<bool>* subset = nullptr) const;

private:
	std::vector<ODKey> ods_;
	std::vector<ModelId> models_;
	std::vector<std::optional<double>> cells_;
};

/// Fraction of ODs (restricted to `od_set` when given) each model wins.
/// ODs with no available model are not scored.
std::map<std::string, double> win_ratios(const LossTable& table, const std::set<ODKey>* od_set = nullptr);

/// Fraction of `od_set` ODs where the best ML loss is strictly below the best
/// baseline loss. Ties, and ODs with no available ML model, count for the
/// baseline. nullopt when the set has no OD with an available model.
std::optional<double> ml_vs_baseline_winrate(const LossTable& table, const std::set<std::string>& ml_models,
                                             const std::set<std::string>& baseline_models,
                                             const std::set<ODKey>& od_set);

struct ClusterRow {
	std::string group;
	std::size_t sample_size = 0;
	double revenue_share = 0.0;
	std::optional<double> nrmse;
	std::optional<double> wnrmse;
};

/// Rows for the significant cluster then Top 100, 101-500, 501-1000 and
/// Above 1001. `revenue` is per-OD revenue in the reference window.
std::vector<ClusterRow> cluster_report(const std::map<ODKey, ODScore>& scores,
                                       const std::map<ODKey, ClusterLabel>& labels,
                                       const std::map<ODKey, double>& revenue);

} // namespace odcast
