#pragma once

#include <compare>
#include <string>
#include <vector>

namespace odcast {

enum class ModelType { Stat, Benchmark, ML };

/// Pool member: a model name plus the meta-learning flag (neural models only).
struct ModelId {
	std::string name;
	bool meta = false;

	/// "nbeats", "nbeats+meta", ...
	std::string to_string() const { return meta ? name + "+meta" : name; }
	/// Inverse of to_string(); throws InvalidArgument for unknown names.
	static ModelId parse(const std::string& s);

	ModelType type() const;
	bool is_neural() const { return type() == ModelType::ML; }

	/// Tie-break rank: simpler models first, a base model before its meta variant.
	int priority() const;

	friend bool operator==(const ModelId&, const ModelId&) = default;
	friend bool operator<(const ModelId& a, const ModelId& b) { return a.priority() < b.priority(); }
};

/// historic_avg, window_avg, seasonal_naive, yoy, ses, croston, holt_winters,
/// auto_ets, dot, dnn_ladd, nbeats, tft.
const std::vector<std::string>& model_priority_order();

const char* model_type_name(ModelType t);

} // namespace odcast
