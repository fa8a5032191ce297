#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace odcast::ad {

using Shape = std::vector<std::size_t>;

std::string shape_str(const Shape& s);
std::size_t shape_size(const Shape& s);

/// Dense row-major tensor of doubles.
class Tensor {
public:
	Tensor() = default;
	explicit Tensor(Shape shape, double fill = 0.0);
	Tensor(Shape shape, std::vector<double> data);
	static Tensor scalar(double v) { return Tensor({1}, {v}); }
	static Tensor from_rows(std::initializer_list<std::initializer_list<double>> rows);

	const Shape& shape() const { return shape_; }
	std::size_t rank() const { return shape_.size(); }
	std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
	std::size_t size() const { return data_.size(); }

	std::span<double> data() { return data_; }
	std::span<const double> data() const { return data_; }
	std::vector<double>& storage() { return data_; }

	double& operator[](std::size_t i) { return data_[i]; }
	double operator[](std::size_t i) const { return data_[i]; }
	double& at(std::size_t r, std::size_t c) { return data_[r * shape_.back() + c]; }
	double at(std::size_t r, std::size_t c) const { return data_[r * shape_.back() + c]; }

	/// Value of a single-element tensor.
	double item() const;
	bool all_finite() const;

	friend bool operator==(const Tensor&, const Tensor&) = default;

private:
	Shape shape_;
	std::vector<double> data_;
};

} // namespace odcast::ad
