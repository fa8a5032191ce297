#include "odcast/params.hpp"

#include "odcast/error.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>

namespace odcast::ad {

const Tensor& ParamStore::at(const std::string& name) const {
	auto it = tensors_.find(name);
	if (it == tensors_.end())
		throw NotFound("no parameter named '" + name + "'");
	return it->second;
}

Tensor& ParamStore::at(const std::string& name) {
	auto it = tensors_.find(name);
	if (it == tensors_.end())
		throw NotFound("no parameter named '" + name + "'");
	return it->second;
}

std::size_t ParamStore::num_values() const {
	std::size_t n = 0;
	for (const auto& [_, t] : tensors_)
		n += t.size();
	return n;
}

std::vector<std::string> ParamStore::names() const {
	std::vector<std::string> out;
	for (const auto& [name, _] : tensors_)
		out.push_back(name);
	return out;
}

ParamStore ParamStore::zeros_like() const {
	ParamStore out;
	for (const auto& [name, t] : tensors_)
		out.set(name, Tensor(t.shape(), 0.0));
	return out;
}

void ParamStore::check_aligned(const ParamStore& other) const {
	if (tensors_.size() != other.tensors_.size())
		throw InvalidArgument("parameter stores differ in size");
	for (auto a = tensors_.begin(), b = other.tensors_.begin(); a != tensors_.end(); ++a, ++b) {
		if (a->first != b->first)
			throw InvalidArgument("parameter name mismatch: '" + a->first + "' vs '" + b->first + "'");
		if (a->second.shape() != b->second.shape())
			throw InvalidArgument("shape mismatch for '" + a->first + "': " + shape_str(a->second.shape()) + " vs " +
			                      shape_str(b->second.shape()));
	}
}

void save_params(const ParamStore& params, std::ostream& out) {
	out << "odcast-params 1\n" << params.size() << '\n';
	char buf[64];
	for (const auto& [name, t] : params) {
		out << name << ' ' << t.rank();
		for (auto d : t.shape())
			out << ' ' << d;
		out << '\n';
		for (std::size_t i = 0; i < t.size(); ++i) {
			std::snprintf(buf, sizeof buf, "%a", t[i]);
			out << (i ? " " : "") << buf;
		}
		out << '\n';
	}
}

ParamStore load_params(std::istream& in) {
	std::string magic;
	int version = 0;
	std::size_t count = 0;
	if (!(in >> magic >> version >> count) || magic != "odcast-params" || version != 1)
		throw ParseError("not an odcast parameter file");
	ParamStore out;
	for (std::size_t k = 0; k < count; ++k) {
		std::string name;
		std::size_t rank = 0;
		if (!(in >> name >> rank) || rank == 0)
			throw ParseError("truncated parameter header");
		Shape shape(rank);
		for (auto& d : shape)
			if (!(in >> d))
				throw ParseError("truncated shape for '" + name + "'");
		std::vector<double> data(shape_size(shape));
		for (auto& v : data) {
			std::string tok;
			if (!(in >> tok))
				throw ParseError("truncated values for '" + name + "'");
			char* end = nullptr;
			v = std::strtod(tok.c_str(), &end);
			if (end != tok.c_str() + tok.size())
				throw ParseError("bad value '" + tok + "' in '" + name + "'");
		}
		out.set(name, Tensor(std::move(shape), std::move(data)));
	}
	return out;
}

void save_params(const ParamStore& params, const std::filesystem::path& path) {
	std::ofstream out(path);
	if (!out)
		throw IoError("cannot write " + path.string());
	save_params(params, out);
}

ParamStore load_params(const std::filesystem::path& path) {
	std::ifstream in(path);
	if (!in)
		throw IoError("cannot open " + path.string());
	return load_params(in);
}

ParamStore sgd_step(const ParamStore& params, const ParamStore& grads, double lr) {
	if (!(lr > 0))
		throw InvalidArgument("learning rate must be positive");
	params.check_aligned(grads);
	ParamStore out = params;
	for (auto& [name, t] : out) {
		const auto& g = grads.at(name);
		for (std::size_t i = 0; i < t.size(); ++i)
			t[i] -= lr * g[i];
	}
	return out;
}

ParamStore adam_step(AdamState& state, const ParamStore& params, const ParamStore& grads, const AdamOptions& opt) {
	if (!(opt.lr > 0))
		throw InvalidArgument("learning rate must be positive");
	params.check_aligned(grads);
	if (state.step == 0) {
		state.m = params.zeros_like();
		state.v = params.zeros_like();
	}
	++state.step;
	const double c1 = 1.0 - std::pow(opt.beta1, double(state.step));
	const double c2 = 1.0 - std::pow(opt.beta2, double(state.step));
	ParamStore out = params;
	for (auto& [name, t] : out) {
		const auto& g = grads.at(name);
		auto& m = state.m.at(name);
		auto& v = state.v.at(name);
		for (std::size_t i = 0; i < t.size(); ++i) {
			m[i] = opt.beta1 * m[i] + (1.0 - opt.beta1) * g[i];
			v[i] = opt.beta2 * v[i] + (1.0 - opt.beta2) * g[i] * g[i];
			const double mhat = m[i] / c1;
			const double vhat = v[i] / c2;
			t[i] -= opt.lr * mhat / (std::sqrt(vhat) + opt.eps);
		}
	}
	return out;
}

ParamStore add(const ParamStore& a, const ParamStore& b) {
	a.check_aligned(b);
	ParamStore out = a;
	for (auto& [name, t] : out) {
		const auto& o = b.at(name);
		for (std::size_t i = 0; i < t.size(); ++i)
			t[i] += o[i];
	}
	return out;
}

double max_abs(const ParamStore& p) {
	double m = 0.0;
	for (const auto& [_, t] : p)
		for (double v : t.data())
			m = std::max(m, std::abs(v));
	return m;
}

} // namespace odcast::ad
