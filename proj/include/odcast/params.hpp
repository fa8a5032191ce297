#pragma once

#include "odcast/tensor.hpp"

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace odcast::ad {

/// Named trainable tensors with deterministic (lexicographic) iteration.
/// Copies are deep, so a copy is an independent model.
class ParamStore {
public:
	using Map = std::map<std::string, Tensor>;

	void set(const std::string& name, Tensor value) { tensors_[name] = std::move(value); }
	const Tensor& at(const std::string& name) const;
	Tensor& at(const std::string& name);
	bool contains(const std::string& name) const { return tensors_.count(name) != 0; }

	std::size_t size() const { return tensors_.size(); }
	std::size_t num_values() const;
	std::vector<std::string> names() const;

	Map::const_iterator begin() const { return tensors_.begin(); }
	Map::const_iterator end() const { return tensors_.end(); }
	Map::iterator begin() { return tensors_.begin(); }
	Map::iterator end() { return tensors_.end(); }

	/// Same names and shapes, all zeros.
	ParamStore zeros_like() const;
	/// Throws InvalidArgument unless `other` has the same names and shapes.
	void check_aligned(const ParamStore& other) const;

	friend bool operator==(const ParamStore&, const ParamStore&) = default;

private:
	Map tensors_;
};

/// Text format, lossless at 64-bit precision (hex floats):
///   odcast-params 1
///   <count>
///   <name> <rank> <d0> ... then the row-major values on one line
void save_params(const ParamStore& params, std::ostream& out);
ParamStore load_params(std::istream& in);
void save_params(const ParamStore& params, const std::filesystem::path& path);
ParamStore load_params(const std::filesystem::path& path);

/// p - lr * g, leaving `params` untouched.
ParamStore sgd_step(const ParamStore& params, const ParamStore& grads, double lr);

struct AdamState {
	long step = 0;
	ParamStore m;
	ParamStore v;
};

struct AdamOptions {
	double lr = 1e-3;
	double beta1 = 0.9;
	double beta2 = 0.999;
	double eps = 1e-8;
};

/// One bias-corrected Adam update. `state` is initialised on first use.
ParamStore adam_step(AdamState& state, const ParamStore& params, const ParamStore& grads, const AdamOptions& opt);

/// Elementwise a + b over aligned stores.
ParamStore add(const ParamStore& a, const ParamStore& b);
/// Largest absolute value across all tensors.
double max_abs(const ParamStore& p);

} // namespace odcast::ad
