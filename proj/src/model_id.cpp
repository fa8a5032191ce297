#include "odcast/model_id.hpp"

#include "odcast/error.hpp"

#include <algorithm>

namespace odcast {

const std::vector<std::string>& model_priority_order() {
	static const std::vector<std::string> order = {"historic_avg", "window_avg", "seasonal_naive", "yoy",
	                                               "ses",          "croston",    "holt_winters",   "auto_ets",
	                                               "dot",          "dnn_ladd",   "nbeats",         "tft"};
	return order;
}

namespace {

int name_rank(const std::string& name) {
	const auto& order = model_priority_order();
	auto it = std::find(order.begin(), order.end(), name);
	if (it == order.end())
		throw InvalidArgument("unknown model '" + name + "'");
	return int(it - order.begin());
}

} // namespace

ModelId ModelId::parse(const std::string& s) {
	const std::string suffix = "+meta";
	ModelId id;
	if (s.size() > suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0) {
		id.name = s.substr(0, s.size() - suffix.size());
		id.meta = true;
	} else {
		id.name = s;
	}
	name_rank(id.name);
	if (id.meta && !id.is_neural())
		throw InvalidArgument("meta-learning applies to neural models only: '" + s + "'");
	return id;
}

ModelType ModelId::type() const {
	if (name == "yoy")
		return ModelType::Benchmark;
	if (name == "dnn_ladd" || name == "nbeats" || name == "tft")
		return ModelType::ML;
	name_rank(name);
	return ModelType::Stat;
}

int ModelId::priority() const {
	return 2 * name_rank(name) + (meta ? 1 : 0);
}

const char* model_type_name(ModelType t) {
	switch (t) {
	case ModelType::Stat:
		return "Stat";
	case ModelType::Benchmark:
		return "Benchmark";
	case ModelType::ML:
		return "ML";
	}
	return "?";
}

} // namespace odcast
