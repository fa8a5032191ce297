#include "odcast/moe.hpp"

#include "odcast/error.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

namespace odcast::moe {

namespace {

class StatExpert final : public Expert {
public:
	StatExpert(std::string name, stat::StatOptions opt) : name_(std::move(name)), opt_(opt) {
		stat::make_forecaster(name_, opt_); // validates the name
	}
	ModelId id() const override { return {name_, false}; }
	std::vector<double> forecast(const ODSeries& history, int horizon) const override {
		auto f = stat::make_forecaster(name_, opt_);
		f->fit(history.values);
		return f->predict(horizon);
	}

private:
	std::string name_;
	stat::StatOptions opt_;
};

class NeuralExpert final : public Expert {
public:
	NeuralExpert(ModelId id, nn::NeuralModel model, std::optional<meta::MetaConfig> meta)
	    : id_(std::move(id)), model_(std::move(model)), meta_(meta) {}
	ModelId id() const override { return id_; }
	std::vector<double> forecast(const ODSeries& history, int horizon) const override {
		if (meta_)
			return meta::finetune_and_predict(model_, history, *meta_, horizon);
		return nn::predict_series(model_, history, horizon);
	}

private:
	ModelId id_;
	nn::NeuralModel model_;
	std::optional<meta::MetaConfig> meta_;
};

class UnavailableExpert final : public Expert {
public:
	UnavailableExpert(ModelId id, std::string reason) : id_(std::move(id)), reason_(std::move(reason)) {}
	ModelId id() const override { return id_; }
	std::vector<double> forecast(const ODSeries&, int) const override { throw InsufficientHistory(reason_); }

private:
	ModelId id_;
	std::string reason_;
};

std::string cell_name(const ModelId& m, const ODKey& od) { return m.to_string() + " on " + od.to_string(); }

} // namespace

std::unique_ptr<Expert> make_stat_expert(const std::string& name, const stat::StatOptions& opt) {
	return std::make_unique<StatExpert>(name, opt);
}

std::unique_ptr<Expert> make_neural_expert(ModelId id, nn::NeuralModel model, std::optional<meta::MetaConfig> meta) {
	if (!id.is_neural())
		throw InvalidArgument(id.to_string() + " is not a neural model");
	return std::make_unique<NeuralExpert>(std::move(id), std::move(model), meta);
}

std::unique_ptr<Expert> make_unavailable_expert(ModelId id, std::string reason) {
	return std::make_unique<UnavailableExpert>(std::move(id), std::move(reason));
}

std::vector<std::unique_ptr<Expert>> train_pool(const PoolConfig& pool, std::span<const ODSeries> train,
                                                const Log& log) {
	auto say = [&](const std::string& s) {
		if (log)
			log(s);
	};
	std::vector<std::unique_ptr<Expert>> out;
	for (const auto& e : pool.entries) {
		if (!e.id.is_neural()) {
			out.push_back(make_stat_expert(e.id.name, e.stat));
			continue;
		}
		const auto kind = nn::parse_kind(e.id.name);
		try {
			if (e.id.meta) {
				pool.meta.validate();
				e.neural.validate();
				nn::NeuralModel m{kind, e.neural, nn::build_vocab(train), {}};
				m.params = nn::init_params(kind, e.neural, m.vocab.size(), substream(e.neural.seed, "init"));
				meta::MetaTrace trace;
				meta::meta_train_model(m, train, pool.meta, &trace);
				for (const auto& od : trace.skipped)
					say(e.id.to_string() + ": no support/query episode for " + od.to_string() + ", skipped");
				if (!trace.query_loss.empty())
					say(e.id.to_string() + ": final meta query loss " + std::to_string(trace.query_loss.back()));
				out.push_back(make_neural_expert(e.id, std::move(m), pool.meta));
			} else {
				nn::TrainReport rep;
				auto m = nn::train_model(kind, train, e.neural, &rep);
				for (const auto& od : rep.excluded)
					say(e.id.to_string() + ": no training sample from " + od.to_string());
				if (!rep.epoch_loss.empty())
					say(e.id.to_string() + ": final epoch loss " + std::to_string(rep.epoch_loss.back()));
				out.push_back(make_neural_expert(e.id, std::move(m)));
			}
		} catch (const InsufficientHistory& ex) {
			say(e.id.to_string() + " unavailable: " + ex.what());
			out.push_back(make_unavailable_expert(e.id, ex.what()));
		}
	}
	return out;
}

ForecastGrid::ForecastGrid(std::vector<ODKey> o, std::vector<ModelId> m, std::vector<Date> w)
    : ods(std::move(o)), models(std::move(m)), weeks(std::move(w)), cells(ods.size() * models.size()),
      reasons(ods.size() * models.size()) {}

std::vector<Date> window_weeks(const DateRange& window) {
	std::vector<Date> out;
	for (Date d = window.first; d <= window.last; d = d + 1)
		if (out.empty() || out.back() != d.week_start())
			out.push_back(d.week_start());
	return out;
}

std::vector<double> weekly_actual(const ODSeries& series, const DateRange& window) {
	if (window.empty() || window.first < series.start_date || series.end_date() < window.last)
		throw InvalidArgument("series " + series.od.to_string() + " does not cover the evaluation window");
	const std::size_t i0 = series.index_of(window.first);
	auto sums = weekly_sums(window.first, std::span<const double>(series.values).subspan(i0, std::size_t(window.days())));
	std::vector<double> out;
	for (const auto& [_, v] : sums)
		out.push_back(v);
	return out;
}

ForecastGrid forecast_grid(std::span<const std::unique_ptr<Expert>> experts, std::span<const ODSeries> histories,
                           const DateRange& window) {
	std::vector<ODKey> ods;
	for (const auto& h : histories) {
		if (h.end_date() + 1 != window.first)
			throw InvalidArgument("history of " + h.od.to_string() + " must end the day before the window");
		ods.push_back(h.od);
	}
	std::vector<ModelId> models;
	for (const auto& e : experts)
		models.push_back(e->id());
	ForecastGrid grid(std::move(ods), std::move(models), window_weeks(window));
	const auto horizon = int(window.days());
	for (std::size_t o = 0; o < histories.size(); ++o) {
		for (std::size_t m = 0; m < experts.size(); ++m) {
			const auto& model = grid.models[m];
			std::vector<double> daily;
			try {
				daily = experts[m]->forecast(histories[o], horizon);
			} catch (const InsufficientHistory& e) {
				grid.reasons[grid.index(o, m)] = e.what();
				continue;
			} catch (const Error& e) {
				throw Error(e.code(), cell_name(model, grid.ods[o]) + ": " + e.what());
			}
			for (double v : daily)
				if (!std::isfinite(v))
					throw NumericError(cell_name(model, grid.ods[o]) + ": non-finite forecast");
			std::vector<double> weekly;
			for (const auto& [_, v] : weekly_sums(window.first, daily))
				weekly.push_back(v);
			grid.cells[grid.index(o, m)] = std::move(weekly);
		}
	}
	return grid;
}

double selection_loss(std::span<const double> actual, std::span<const double> predicted) {
	if (auto n = nrmse(actual, predicted))
		return *n;
	return rmse(actual, predicted);
}

LossTable score_grid(const ForecastGrid& grid, const std::map<ODKey, std::vector<double>>& actual) {
	LossTable table(grid.ods, grid.models);
	for (std::size_t o = 0; o < grid.ods.size(); ++o) {
		auto it = actual.find(grid.ods[o]);
		if (it == actual.end())
			throw NotFound("no actuals for " + grid.ods[o].to_string());
		for (std::size_t m = 0; m < grid.models.size(); ++m) {
			const auto& cell = grid.at(o, m);
			if (!cell)
				continue;
			const double loss = selection_loss(it->second, *cell);
			if (std::isnan(loss))
				throw NumericError(cell_name(grid.models[m], grid.ods[o]) + ": NaN loss");
			table.set(o, m, loss);
		}
	}
	return table;
}

Scored score_pool(std::span<const std::unique_ptr<Expert>> experts, std::span<const ODSeries> train_histories,
                  std::span<const ODSeries> full_series, const DateRange& validation) {
	std::map<ODKey, const ODSeries*> full;
	for (const auto& s : full_series)
		full[s.od] = &s;
	std::map<ODKey, std::vector<double>> actual;
	for (const auto& h : train_histories) {
		auto it = full.find(h.od);
		if (it == full.end())
			throw NotFound("no full series for " + h.od.to_string());
		actual[h.od] = weekly_actual(*it->second, validation);
	}
	Scored out;
	out.grid = forecast_grid(experts, train_histories, validation);
	out.table = score_grid(out.grid, actual);
	return out;
}

std::vector<std::size_t> ranked_models(const LossTable& table, std::size_t od) {
	std::vector<std::size_t> idx;
	for (std::size_t m = 0; m < table.models().size(); ++m)
		if (table.get(od, m))
			idx.push_back(m);
	std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
		const double la = *table.get(od, a), lb = *table.get(od, b);
		if (la != lb)
			return la < lb;
		return table.models()[a].priority() < table.models()[b].priority();
	});
	return idx;
}

ExpertAssignment select_experts(const LossTable& table) {
	ExpertAssignment a;
	for (std::size_t o = 0; o < table.ods().size(); ++o) {
		auto best = table.argmin(o);
		if (!best)
			throw InvalidArgument("no available model for " + table.ods()[o].to_string());
		a.expert[table.ods()[o]] = table.models()[*best];
		a.validation_loss[table.ods()[o]] = *table.get(o, *best);
	}
	return a;
}

MoeForecast predict_moe(const ExpertAssignment& assignment, const LossTable& validation, const std::vector<Date>& weeks,
                        const ForecastSource& source) {
	MoeForecast out;
	out.weeks = weeks;
	for (const auto& [od, expert] : assignment.expert) {
		const std::size_t o = validation.od_index(od);
		auto order = ranked_models(validation, o);
		// the frozen assignment leads even if the table was edited since
		const std::size_t assigned = validation.model_index(expert);
		order.erase(std::remove(order.begin(), order.end(), assigned), order.end());
		order.insert(order.begin(), assigned);

		std::string failures;
		bool served = false;
		for (std::size_t m : order) {
			std::string reason;
			auto f = source(o, m, &reason);
			const ModelId& id = validation.models()[m];
			if (!f) {
				failures += (failures.empty() ? "" : "; ") + id.to_string() + ": " + reason;
				continue;
			}
			if (f->size() != weeks.size())
				throw ShapeError(cell_name(id, od) + ": forecast has " + std::to_string(f->size()) + " weeks, expected " +
				                 std::to_string(weeks.size()));
			if (m != assigned)
				out.substitutions.push_back(od.to_string() + ": expert " + expert.to_string() + " failed (" + failures +
				                            "), served by " + id.to_string());
			out.weekly[od] = std::move(*f);
			out.served_by[od] = id;
			served = true;
			break;
		}
		if (!served)
			throw InsufficientHistory("every model failed for " + od.to_string() + ": " + failures);
	}
	return out;
}

MoeForecast predict_moe(const ExpertAssignment& assignment, const LossTable& validation, const ForecastGrid& test_grid) {
	std::map<ODKey, std::size_t> od_pos;
	for (std::size_t o = 0; o < test_grid.ods.size(); ++o)
		od_pos[test_grid.ods[o]] = o;
	auto source = [&](std::size_t o, std::size_t m, std::string* reason) -> std::optional<std::vector<double>> {
		const ODKey& od = validation.ods()[o];
		const ModelId& id = validation.models()[m];
		auto it = od_pos.find(od);
		auto mt = std::find(test_grid.models.begin(), test_grid.models.end(), id);
		if (it == od_pos.end() || mt == test_grid.models.end()) {
			*reason = "no test forecast";
			return std::nullopt;
		}
		const std::size_t tm = std::size_t(mt - test_grid.models.begin());
		const auto& cell = test_grid.at(it->second, tm);
		if (!cell)
			*reason = test_grid.reasons[test_grid.index(it->second, tm)];
		return cell;
	};
	return predict_moe(assignment, validation, test_grid.weeks, source);
}

void write_assignment(const ExpertAssignment& a, std::ostream& out) {
	out << "origin,destination,model_id,validation_loss\n";
	for (const auto& [od, id] : a.expert) {
		std::ostringstream loss;
		loss << std::setprecision(17) << a.validation_loss.at(od);
		out << od.origin() << ',' << od.destination() << ',' << id.to_string() << ',' << loss.str() << '\n';
	}
	if (!out)
		throw IoError("failed to write assignment");
}

ExpertAssignment read_assignment(std::istream& in) {
	std::string line;
	if (!std::getline(in, line) || line != "origin,destination,model_id,validation_loss")
		throw ParseError("assignment: bad header");
	ExpertAssignment a;
	long row = 0;
	while (std::getline(in, line)) {
		++row;
		if (line.empty())
			continue;
		std::vector<std::string> f;
		std::stringstream ss(line);
		std::string cell;
		while (std::getline(ss, cell, ','))
			f.push_back(cell);
		if (f.size() != 4)
			throw ParseError("assignment: expected 4 fields", row);
		try {
			ODKey od(f[0], f[1]);
			a.expert[od] = ModelId::parse(f[2]);
			a.validation_loss[od] = std::stod(f[3]);
		} catch (const std::logic_error&) {
			throw ParseError("assignment: bad field", row);
		} catch (const InvalidArgument& e) {
			throw ParseError(std::string("assignment: ") + e.what(), row);
		}
	}
	return a;
}

} // namespace odcast::moe
