#pragma once

#include "odcast/params.hpp"
#include "odcast/tensor.hpp"

#include <functional>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace odcast::ad {

struct Node {
	const char* op = "leaf";
	Tensor value;
	Tensor grad; // allocated on first accumulation
	std::vector<std::shared_ptr<Node>> inputs;
	std::function<void(Node&)> backward;

	Tensor& grad_buffer();
};

/// Handle to a node of a define-by-run graph.
class Var {
public:
	Var() = default;
	explicit Var(std::shared_ptr<Node> n) : node_(std::move(n)) {}

	const Tensor& value() const { return node_->value; }
	const Shape& shape() const { return node_->value.shape(); }
	std::size_t dim(std::size_t axis) const { return node_->value.dim(axis); }
	/// Accumulated gradient; zeros if nothing flowed into this node.
	Tensor grad() const;
	Node& node() const { return *node_; }
	const std::shared_ptr<Node>& ptr() const { return node_; }
	explicit operator bool() const { return bool(node_); }

private:
	std::shared_ptr<Node> node_;
};

/// Leaf node holding a constant (its gradient is computed but never read).
Var constant(Tensor t);

/// Binds ParamStore entries to leaf nodes for one forward/backward pass.
class Graph {
public:
	explicit Graph(const ParamStore& params) : params_(&params) {}

	Var param(const std::string& name);
	Var constant(Tensor t) { return ad::constant(std::move(t)); }

	/// Gradients of every parameter in the store (zeros for unused ones).
	ParamStore gradients() const;
	void zero_grad();

private:
	const ParamStore* params_;
	std::map<std::string, Var> leaves_;
};

/// Reverse pass from a single-element loss. Gradients accumulate.
void backward(const Var& loss);

// Elementwise binary ops. `b` may match `a` or a trailing suffix of its shape,
// in which case it is repeated over the leading axes.
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double s);
Var add_scalar(const Var& a, double s);

/// [..., k] x [k, m] -> [..., m]
Var matmul(const Var& a, const Var& b);
/// [B, n, k] x [B, k, m] -> [B, n, m]
Var bmm(const Var& a, const Var& b);
/// Swaps the last two axes.
Var transpose(const Var& a);
Var reshape(const Var& a, Shape shape);
Var concat(const std::vector<Var>& parts, std::size_t axis);
Var slice(const Var& a, std::size_t axis, std::size_t start, std::size_t length);

Var sum(const Var& a);
Var mean(const Var& a);
/// Mean over one axis, which is removed.
Var mean_axis(const Var& a, std::size_t axis);

Var tanh(const Var& a);
Var sigmoid(const Var& a);
Var relu(const Var& a);
/// Softmax over the last axis.
Var softmax(const Var& a);

/// Rows of `table` [V, E] at `indices` -> [n, E].
Var embedding_gather(const Var& table, const std::vector<int>& indices);

/// LSTM step with fused gate weights `w` [(in + H), 4H] and bias [4H];
/// gate order input, forget, cell, output. Returns (h', c').
std::pair<Var, Var> lstm_cell(const Var& x, const Var& h, const Var& c, const Var& w, const Var& b);

/// softmax(Q K^T / sqrt(d_k)) V over [B, n, d] inputs. With `causal`, query i
/// only sees keys j <= i + (m - n).
Var scaled_dot_attention(const Var& q, const Var& k, const Var& v, bool causal = false);

/// Mean squared error between equally shaped tensors.
Var mse(const Var& pred, const Var& target);

/// Compares backward() against central differences for every coordinate of
/// `params`. `loss` builds a scalar from a Graph bound to the given store.
/// Relative error uses max(1, |analytic|, |numeric|) as denominator.
double finite_difference_check(const std::function<Var(Graph&)>& loss, const ParamStore& params, double h = 1e-5);

} // namespace odcast::ad
