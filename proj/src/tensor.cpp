#include "odcast/tensor.hpp"

#include "odcast/error.hpp"

#include <cmath>
#include <functional>
#include <numeric>

namespace odcast::ad {

std::string shape_str(const Shape& s) {
	std::string out = "[";
	for (std::size_t i = 0; i < s.size(); ++i) {
		if (i)
			out += "x";
		out += std::to_string(s[i]);
	}
	return out + "]";
}

std::size_t shape_size(const Shape& s) {
	return std::accumulate(s.begin(), s.end(), std::size_t{1}, std::multiplies<>{});
}

namespace {

void check_shape(const Shape& s) {
	if (s.empty())
		throw ShapeError("tensor shape must have at least one axis");
	for (auto d : s)
		if (d == 0)
			throw ShapeError("tensor dimensions must be positive: " + shape_str(s));
}

} // namespace

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)) {
	check_shape(shape_);
	data_.assign(shape_size(shape_), fill);
}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
	check_shape(shape_);
	if (data_.size() != shape_size(shape_))
		throw ShapeError("data length " + std::to_string(data_.size()) + " does not match shape " + shape_str(shape_));
}

Tensor Tensor::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
	std::size_t cols = rows.size() ? rows.begin()->size() : 0;
	std::vector<double> data;
	for (const auto& r : rows) {
		if (r.size() != cols)
			throw ShapeError("ragged rows");
		data.insert(data.end(), r.begin(), r.end());
	}
	return Tensor({rows.size(), cols}, std::move(data));
}

double Tensor::item() const {
	if (data_.size() != 1)
		throw ShapeError("item() on tensor of shape " + shape_str(shape_));
	return data_[0];
}

bool Tensor::all_finite() const {
	for (double v : data_)
		if (!std::isfinite(v))
			return false;
	return true;
}

} // namespace odcast::ad
