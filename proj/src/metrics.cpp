#include "odcast/metrics.hpp"

#include "odcast/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace odcast {

double rmse(std::span<const double> actual, std::span<const double> predicted) {
	if (actual.size() != predicted.size())
		throw InvalidArgument("rmse: length mismatch " + std::to_string(actual.size()) + " vs " +
		                      std::to_string(predicted.size()));
	if (actual.empty())
		throw InvalidArgument("rmse: empty series");
	double s = 0.0;
	for (std::size_t i = 0; i < actual.size(); ++i) {
		const double d = actual[i] - predicted[i];
		s += d * d;
	}
	return std::sqrt(s / double(actual.size()));
}

double rmse(const SeriesPair& pair) {
	return rmse(pair.actual, pair.predicted);
}

std::optional<double> nrmse(std::span<const double> actual, std::span<const double> predicted) {
	const double r = rmse(actual, predicted);
	const double mean = std::accumulate(actual.begin(), actual.end(), 0.0) / double(actual.size());
	if (!(mean > 0.0))
		return std::nullopt;
	return r / mean;
}

std::optional<double> nrmse(const SeriesPair& pair) {
	return nrmse(pair.actual, pair.predicted);
}

double wnrmse(std::span<const ODScore> scores) {
	double total = 0.0;
	for (const auto& s : scores)
		if (s.nrmse)
			total += s.weight_sum;
	if (!(total > 0.0))
		throw InvalidArgument("wnrmse: every OD is excluded");
	double out = 0.0;
	for (const auto& s : scores)
		if (s.nrmse)
			out += (s.weight_sum / total) * *s.nrmse;
	return out;
}

double wnrmse(std::span<const SeriesPair> pairs) {
	std::vector<ODScore> scores;
	scores.reserve(pairs.size());
	for (const auto& p : pairs)
		scores.push_back({p.od, std::accumulate(p.actual.begin(), p.actual.end(), 0.0), nrmse(p)});
	return wnrmse(scores);
}

std::optional<double> mean_nrmse(std::span<const ODScore> scores) {
	double s = 0.0;
	std::size_t n = 0;
	for (const auto& sc : scores)
		if (sc.nrmse) {
			s += *sc.nrmse;
			++n;
		}
	if (n == 0)
		return std::nullopt;
	return s / double(n);
}

// ---------------------------------------------------------------------------

LossTable::LossTable(std::vector<ODKey> ods, std::vector<ModelId> models)
    : ods_(std::move(ods)), models_(std::move(models)), cells_(ods_.size() * models_.size()) {}

std::size_t LossTable::od_index(const ODKey& od) const {
	auto it = std::find(ods_.begin(), ods_.end(), od);
	if (it == ods_.end())
		throw NotFound("OD " + od.to_string() + " not in loss table");
	return std::size_t(it - ods_.begin());
}

std::size_t LossTable::model_index(const ModelId& id) const {
	auto it = std::find(models_.begin(), models_.end(), id);
	if (it == models_.end())
		throw NotFound("model " + id.to_string() + " not in loss table");
	return std::size_t(it - models_.begin());
}

void LossTable::set(std::size_t od, std::size_t model, std::optional<double> loss) {
	if (loss && !std::isfinite(*loss))
		throw NumericError("non-finite loss for " + ods_.at(od).to_string() + " / " + models_.at(model).to_string());
	cells_.at(od * models_.size() + model) = loss;
}

std::optional<std::size_t> LossTable::argmin(std::size_t od, const std::vector<bool>* subset) const {
	std::optional<std::size_t> best;
	for (std::size_t m = 0; m < models_.size(); ++m) {
		if (subset && !(*subset)[m])
			continue;
		const auto& v = get(od, m);
		if (!v)
			continue;
		if (!best) {
			best = m;
			continue;
		}
		const double b = *get(od, *best);
		if (*v < b || (*v == b && models_[m].priority() < models_[*best].priority()))
			best = m;
	}
	return best;
}

std::map<std::string, double> win_ratios(const LossTable& table, const std::set<ODKey>* od_set) {
	std::vector<std::size_t> wins(table.models().size(), 0);
	std::size_t scored = 0;
	for (std::size_t o = 0; o < table.ods().size(); ++o) {
		if (od_set && !od_set->count(table.ods()[o]))
			continue;
		if (auto w = table.argmin(o)) {
			++wins[*w];
			++scored;
		}
	}
	std::map<std::string, double> out;
	for (std::size_t m = 0; m < wins.size(); ++m)
		out[table.models()[m].to_string()] = scored ? double(wins[m]) / double(scored) : 0.0;
	return out;
}

std::optional<double> ml_vs_baseline_winrate(const LossTable& table, const std::set<std::string>& ml_models,
                                             const std::set<std::string>& baseline_models,
                                             const std::set<ODKey>& od_set) {
	if (ml_models.empty() || baseline_models.empty())
		throw InvalidArgument("ml and baseline model sets must be non-empty");
	auto best_of = [&](std::size_t o, const std::set<std::string>& names) {
		std::optional<double> best;
		for (std::size_t m = 0; m < table.models().size(); ++m) {
			if (!names.count(table.models()[m].to_string()))
				continue;
			const auto& v = table.get(o, m);
			if (v && (!best || *v < *best))
				best = v;
		}
		return best;
	};
	std::size_t wins = 0, scored = 0;
	for (std::size_t o = 0; o < table.ods().size(); ++o) {
		if (!od_set.count(table.ods()[o]))
			continue;
		auto ml = best_of(o, ml_models);
		auto base = best_of(o, baseline_models);
		if (!ml && !base)
			continue;
		++scored;
		if (ml && (!base || *ml < *base))
			++wins;
	}
	if (scored == 0)
		return std::nullopt;
	return double(wins) / double(scored);
}

std::vector<ClusterRow> cluster_report(const std::map<ODKey, ODScore>& scores,
                                       const std::map<ODKey, ClusterLabel>& labels,
                                       const std::map<ODKey, double>& revenue) {
	double total_revenue = 0.0;
	for (const auto& [od, _] : labels) {
		auto it = revenue.find(od);
		if (it != revenue.end())
			total_revenue += it->second;
	}
	auto build = [&](const std::string& name, auto member) {
		ClusterRow row;
		row.group = name;
		std::vector<ODScore> members;
		double rev = 0.0;
		for (const auto& [od, label] : labels) {
			if (!member(label))
				continue;
			++row.sample_size;
			if (auto it = revenue.find(od); it != revenue.end())
				rev += it->second;
			if (auto it = scores.find(od); it != scores.end())
				members.push_back(it->second);
		}
		row.revenue_share = total_revenue > 0 ? rev / total_revenue : 0.0;
		row.nrmse = mean_nrmse(members);
		double w = 0.0;
		for (const auto& m : members)
			if (m.nrmse)
				w += m.weight_sum;
		if (w > 0.0)
			row.wnrmse = wnrmse(members);
		return row;
	};
	std::vector<ClusterRow> rows;
	rows.push_back(build("Significant cluster", [](const ClusterLabel& l) { return l.in_significant_cluster; }));
	for (auto c : {RankCluster::Top100, RankCluster::R101_500, RankCluster::R501_1000, RankCluster::Above1001})
		rows.push_back(build(cluster_name(c), [c](const ClusterLabel& l) { return l.cluster == c; }));
	return rows;
}

} // namespace odcast
