#include "odcast/autodiff.hpp"

#include "odcast/error.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace odcast::ad {

Tensor& Node::grad_buffer() {
	if (grad.size() != value.size())
		grad = Tensor(value.shape(), 0.0);
	return grad;
}

Tensor Var::grad() const {
	if (node_->grad.size() == node_->value.size())
		return node_->grad;
	return Tensor(node_->value.shape(), 0.0);
}

Var constant(Tensor t) {
	auto n = std::make_shared<Node>();
	n->op = "constant";
	n->value = std::move(t);
	return Var(std::move(n));
}

Var Graph::param(const std::string& name) {
	auto it = leaves_.find(name);
	if (it != leaves_.end())
		return it->second;
	auto n = std::make_shared<Node>();
	n->op = "param";
	n->value = params_->at(name);
	Var v(std::move(n));
	leaves_.emplace(name, v);
	return v;
}

ParamStore Graph::gradients() const {
	ParamStore out;
	for (const auto& [name, t] : *params_) {
		auto it = leaves_.find(name);
		out.set(name, it == leaves_.end() ? Tensor(t.shape(), 0.0) : it->second.grad());
	}
	return out;
}

void Graph::zero_grad() {
	for (auto& [_, v] : leaves_)
		v.node().grad = Tensor();
}

void backward(const Var& loss) {
	if (loss.value().size() != 1)
		throw ShapeError("backward() needs a single-element loss, got " + shape_str(loss.shape()));

	// Iterative post-order DFS gives a topological order.
	std::vector<Node*> order;
	std::unordered_set<Node*> seen;
	std::vector<std::pair<Node*, std::size_t>> stack{{&loss.node(), 0}};
	seen.insert(&loss.node());
	while (!stack.empty()) {
		auto& [node, next] = stack.back();
		if (next < node->inputs.size()) {
			Node* child = node->inputs[next++].get();
			if (seen.insert(child).second)
				stack.emplace_back(child, 0);
		} else {
			order.push_back(node);
			stack.pop_back();
		}
	}

	loss.node().grad_buffer()[0] += 1.0;
	for (auto it = order.rbegin(); it != order.rend(); ++it) {
		Node* n = *it;
		if (n->backward && n->grad.size() == n->value.size())
			n->backward(*n);
	}
}

namespace {

Var make(const char* op, Tensor value, std::vector<std::shared_ptr<Node>> inputs, std::function<void(Node&)> bw) {
	if (!value.all_finite())
		throw NumericError(std::string(op) + " produced a non-finite value");
	auto n = std::make_shared<Node>();
	n->op = op;
	n->value = std::move(value);
	n->inputs = std::move(inputs);
	n->backward = std::move(bw);
	return Var(std::move(n));
}

[[noreturn]] void shape_fail(const char* op, const Shape& a, const Shape& b) {
	throw ShapeError(std::string(op) + ": incompatible shapes " + shape_str(a) + " and " + shape_str(b));
}

/// Size of the broadcast block of `b` within `a`; throws unless b's shape is a
/// suffix of a's.
std::size_t broadcast_inner(const char* op, const Shape& a, const Shape& b) {
	if (b.size() > a.size() || !std::equal(b.rbegin(), b.rend(), a.rbegin()))
		shape_fail(op, a, b);
	return shape_size(b);
}

std::size_t normalize_axis(const char* op, std::size_t axis, const Shape& s) {
	if (axis >= s.size())
		throw ShapeError(std::string(op) + ": axis " + std::to_string(axis) + " out of range for " + shape_str(s));
	return axis;
}

template <class Fwd, class Deriv>
Var unary(const char* op, const Var& a, Fwd f, Deriv df) {
	Tensor out(a.shape());
	const auto& x = a.value();
	for (std::size_t i = 0; i < out.size(); ++i)
		out[i] = f(x[i]);
	return make(op, std::move(out), {a.ptr()}, [df](Node& self) {
		auto& in = *self.inputs[0];
		auto& g = in.grad_buffer();
		for (std::size_t i = 0; i < g.size(); ++i)
			g[i] += self.grad[i] * df(in.value[i], self.value[i]);
	});
}

} // namespace

Var add(const Var& a, const Var& b) {
	std::size_t inner = broadcast_inner("add", a.shape(), b.shape());
	Tensor out = a.value();
	const auto& bv = b.value();
	for (std::size_t i = 0; i < out.size(); ++i)
		out[i] += bv[i % inner];
	return make("add", std::move(out), {a.ptr(), b.ptr()}, [inner](Node& self) {
		auto& ga = self.inputs[0]->grad_buffer();
		auto& gb = self.inputs[1]->grad_buffer();
		for (std::size_t i = 0; i < self.grad.size(); ++i) {
			ga[i] += self.grad[i];
			gb[i % inner] += self.grad[i];
		}
	});
}

Var sub(const Var& a, const Var& b) {
	std::size_t inner = broadcast_inner("sub", a.shape(), b.shape());
	Tensor out = a.value();
	const auto& bv = b.value();
	for (std::size_t i = 0; i < out.size(); ++i)
		out[i] -= bv[i % inner];
	return make("sub", std::move(out), {a.ptr(), b.ptr()}, [inner](Node& self) {
		auto& ga = self.inputs[0]->grad_buffer();
		auto& gb = self.inputs[1]->grad_buffer();
		for (std::size_t i = 0; i < self.grad.size(); ++i) {
			ga[i] += self.grad[i];
			gb[i % inner] -= self.grad[i];
		}
	});
}

Var mul(const Var& a, const Var& b) {
	std::size_t inner = broadcast_inner("mul", a.shape(), b.shape());
	Tensor out = a.value();
	const auto& bv = b.value();
	for (std::size_t i = 0; i < out.size(); ++i)
		out[i] *= bv[i % inner];
	return make("mul", std::move(out), {a.ptr(), b.ptr()}, [inner](Node& self) {
		auto& A = *self.inputs[0];
		auto& B = *self.inputs[1];
		auto& ga = A.grad_buffer();
		auto& gb = B.grad_buffer();
		for (std::size_t i = 0; i < self.grad.size(); ++i) {
			ga[i] += self.grad[i] * B.value[i % inner];
			gb[i % inner] += self.grad[i] * A.value[i];
		}
	});
}

Var scale(const Var& a, double s) {
	return unary("scale", a, [s](double x) { return s * x; }, [s](double, double) { return s; });
}

Var add_scalar(const Var& a, double s) {
	return unary("add_scalar", a, [s](double x) { return x + s; }, [](double, double) { return 1.0; });
}

Var matmul(const Var& a, const Var& b) {
	const auto& as = a.shape();
	const auto& bs = b.shape();
	if (as.size() < 2 || bs.size() != 2 || as.back() != bs[0])
		shape_fail("matmul", as, bs);
	const std::size_t k = bs[0], m = bs[1], rows = a.value().size() / k;
	Shape os = as;
	os.back() = m;
	Tensor out(os, 0.0);
	const double* A = a.value().data().data();
	const double* B = b.value().data().data();
	double* C = out.data().data();
	for (std::size_t r = 0; r < rows; ++r)
		for (std::size_t p = 0; p < k; ++p) {
			const double av = A[r * k + p];
			if (av == 0.0)
				continue;
			const double* brow = B + p * m;
			double* crow = C + r * m;
			for (std::size_t j = 0; j < m; ++j)
				crow[j] += av * brow[j];
		}
	return make("matmul", std::move(out), {a.ptr(), b.ptr()}, [rows, k, m](Node& self) {
		auto& An = *self.inputs[0];
		auto& Bn = *self.inputs[1];
		const double* G = self.grad.data().data();
		const double* A = An.value.data().data();
		const double* B = Bn.value.data().data();
		double* gA = An.grad_buffer().data().data();
		double* gB = Bn.grad_buffer().data().data();
		for (std::size_t r = 0; r < rows; ++r) {
			const double* grow = G + r * m;
			for (std::size_t p = 0; p < k; ++p) {
				const double* brow = B + p * m;
				double acc = 0.0;
				for (std::size_t j = 0; j < m; ++j)
					acc += grow[j] * brow[j];
				gA[r * k + p] += acc;
				const double av = A[r * k + p];
				if (av != 0.0) {
					double* gbrow = gB + p * m;
					for (std::size_t j = 0; j < m; ++j)
						gbrow[j] += av * grow[j];
				}
			}
		}
	});
}

Var bmm(const Var& a, const Var& b) {
	const auto& as = a.shape();
	const auto& bs = b.shape();
	if (as.size() != 3 || bs.size() != 3 || as[0] != bs[0] || as[2] != bs[1])
		shape_fail("bmm", as, bs);
	const std::size_t B = as[0], n = as[1], k = as[2], m = bs[2];
	Tensor out({B, n, m}, 0.0);
	const auto& X = a.value();
	const auto& Y = b.value();
	for (std::size_t bi = 0; bi < B; ++bi)
		for (std::size_t i = 0; i < n; ++i)
			for (std::size_t p = 0; p < k; ++p) {
				const double xv = X[(bi * n + i) * k + p];
				for (std::size_t j = 0; j < m; ++j)
					out[(bi * n + i) * m + j] += xv * Y[(bi * k + p) * m + j];
			}
	return make("bmm", std::move(out), {a.ptr(), b.ptr()}, [B, n, k, m](Node& self) {
		auto& An = *self.inputs[0];
		auto& Bn = *self.inputs[1];
		auto& gA = An.grad_buffer();
		auto& gB = Bn.grad_buffer();
		const auto& G = self.grad;
		for (std::size_t bi = 0; bi < B; ++bi)
			for (std::size_t i = 0; i < n; ++i)
				for (std::size_t p = 0; p < k; ++p) {
					double acc = 0.0;
					const double xv = An.value[(bi * n + i) * k + p];
					for (std::size_t j = 0; j < m; ++j) {
						const double g = G[(bi * n + i) * m + j];
						acc += g * Bn.value[(bi * k + p) * m + j];
						gB[(bi * k + p) * m + j] += xv * g;
					}
					gA[(bi * n + i) * k + p] += acc;
				}
	});
}

Var transpose(const Var& a) {
	const auto& s = a.shape();
	if (s.size() < 2)
		throw ShapeError("transpose needs rank >= 2, got " + shape_str(s));
	const std::size_t r = s[s.size() - 2], c = s.back(), batch = a.value().size() / (r * c);
	Shape os = s;
	std::swap(os[os.size() - 2], os.back());
	Tensor out(os);
	const auto& x = a.value();
	for (std::size_t b = 0; b < batch; ++b)
		for (std::size_t i = 0; i < r; ++i)
			for (std::size_t j = 0; j < c; ++j)
				out[b * r * c + j * r + i] = x[b * r * c + i * c + j];
	return make("transpose", std::move(out), {a.ptr()}, [batch, r, c](Node& self) {
		auto& g = self.inputs[0]->grad_buffer();
		for (std::size_t b = 0; b < batch; ++b)
			for (std::size_t i = 0; i < r; ++i)
				for (std::size_t j = 0; j < c; ++j)
					g[b * r * c + i * c + j] += self.grad[b * r * c + j * r + i];
	});
}

Var reshape(const Var& a, Shape shape) {
	if (shape_size(shape) != a.value().size())
		shape_fail("reshape", a.shape(), shape);
	Tensor out(std::move(shape), std::vector<double>(a.value().data().begin(), a.value().data().end()));
	return make("reshape", std::move(out), {a.ptr()}, [](Node& self) {
		auto& g = self.inputs[0]->grad_buffer();
		for (std::size_t i = 0; i < g.size(); ++i)
			g[i] += self.grad[i];
	});
}

Var concat(const std::vector<Var>& parts, std::size_t axis) {
	if (parts.empty())
		throw ShapeError("concat of zero tensors");
	const Shape& s0 = parts[0].shape();
	normalize_axis("concat", axis, s0);
	Shape os = s0;
	os[axis] = 0;
	for (const auto& p : parts) {
		const auto& s = p.shape();
		if (s.size() != s0.size())
			shape_fail("concat", s0, s);
		for (std::size_t d = 0; d < s.size(); ++d)
			if (d != axis && s[d] != s0[d])
				shape_fail("concat", s0, s);
		os[axis] += s[axis];
	}
	std::size_t outer = 1, inner = 1;
	for (std::size_t d = 0; d < axis; ++d)
		outer *= s0[d];
	for (std::size_t d = axis + 1; d < s0.size(); ++d)
		inner *= s0[d];
	std::vector<std::size_t> widths;
	for (const auto& p : parts)
		widths.push_back(p.shape()[axis] * inner);
	const std::size_t row = os[axis] * inner;
	Tensor out(os);
	std::size_t off = 0;
	for (std::size_t k = 0; k < parts.size(); ++k) {
		const auto& x = parts[k].value();
		for (std::size_t o = 0; o < outer; ++o)
			std::copy_n(x.data().begin() + long(o * widths[k]), widths[k], out.data().begin() + long(o * row + off));
		off += widths[k];
	}
	std::vector<std::shared_ptr<Node>> inputs;
	for (const auto& p : parts)
		inputs.push_back(p.ptr());
	return make("concat", std::move(out), std::move(inputs), [outer, row, widths](Node& self) {
		std::size_t off = 0;
		for (std::size_t k = 0; k < self.inputs.size(); ++k) {
			auto& g = self.inputs[k]->grad_buffer();
			for (std::size_t o = 0; o < outer; ++o)
				for (std::size_t i = 0; i < widths[k]; ++i)
					g[o * widths[k] + i] += self.grad[o * row + off + i];
			off += widths[k];
		}
	});
}

Var slice(const Var& a, std::size_t axis, std::size_t start, std::size_t length) {
	const auto& s = a.shape();
	normalize_axis("slice", axis, s);
	if (length == 0 || start + length > s[axis])
		throw ShapeError("slice [" + std::to_string(start) + ", " + std::to_string(start + length) + ") out of range for " +
		                 shape_str(s) + " axis " + std::to_string(axis));
	std::size_t outer = 1, inner = 1;
	for (std::size_t d = 0; d < axis; ++d)
		outer *= s[d];
	for (std::size_t d = axis + 1; d < s.size(); ++d)
		inner *= s[d];
	Shape os = s;
	os[axis] = length;
	Tensor out(os);
	const std::size_t src_row = s[axis] * inner, dst_row = length * inner, off = start * inner;
	const auto& x = a.value();
	for (std::size_t o = 0; o < outer; ++o)
		std::copy_n(x.data().begin() + long(o * src_row + off), dst_row, out.data().begin() + long(o * dst_row));
	return make("slice", std::move(out), {a.ptr()}, [outer, src_row, dst_row, off](Node& self) {
		auto& g = self.inputs[0]->grad_buffer();
		for (std::size_t o = 0; o < outer; ++o)
			for (std::size_t i = 0; i < dst_row; ++i)
				g[o * src_row + off + i] += self.grad[o * dst_row + i];
	});
}

Var sum(const Var& a) {
	double s = 0.0;
	for (double v : a.value().data())
		s += v;
	return make("sum", Tensor::scalar(s), {a.ptr()}, [](Node& self) {
		auto& g = self.inputs[0]->grad_buffer();
		for (std::size_t i = 0; i < g.size(); ++i)
			g[i] += self.grad[0];
	});
}

Var mean(const Var& a) {
	const double n = double(a.value().size());
	double s = 0.0;
	for (double v : a.value().data())
		s += v;
	return make("mean", Tensor::scalar(s / n), {a.ptr()}, [n](Node& self) {
		auto& g = self.inputs[0]->grad_buffer();
		for (std::size_t i = 0; i < g.size(); ++i)
			g[i] += self.grad[0] / n;
	});
}

Var mean_axis(const Var& a, std::size_t axis) {
	const auto& s = a.shape();
	normalize_axis("mean_axis", axis, s);
	std::size_t outer = 1, inner = 1;
	for (std::size_t d = 0; d < axis; ++d)
		outer *= s[d];
	for (std::size_t d = axis + 1; d < s.size(); ++d)
		inner *= s[d];
	const std::size_t len = s[axis];
	Shape os;
	for (std::size_t d = 0; d < s.size(); ++d)
		if (d != axis)
			os.push_back(s[d]);
	if (os.empty())
		os = {1};
	Tensor out(os, 0.0);
	const auto& x = a.value();
	for (std::size_t o = 0; o < outer; ++o)
		for (std::size_t l = 0; l < len; ++l)
			for (std::size_t i = 0; i < inner; ++i)
				out[o * inner + i] += x[(o * len + l) * inner + i] / double(len);
	return make("mean_axis", std::move(out), {a.ptr()}, [outer, len, inner](Node& self) {
		auto& g = self.inputs[0]->grad_buffer();
		for (std::size_t o = 0; o < outer; ++o)
			for (std::size_t l = 0; l < len; ++l)
				for (std::size_t i = 0; i < inner; ++i)
					g[(o * len + l) * inner + i] += self.grad[o * inner + i] / double(len);
	});
}

Var tanh(const Var& a) {
	return unary("tanh", a, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Var sigmoid(const Var& a) {
	return unary(
	    "sigmoid", a,
	    [](double x) { return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x)); },
	    [](double, double y) { return y * (1.0 - y); });
}

Var relu(const Var& a) {
	return unary("relu", a, [](double x) { return x > 0 ? x : 0.0; }, [](double x, double) { return x > 0 ? 1.0 : 0.0; });
}

Var softmax(const Var& a) {
	const std::size_t n = a.shape().back(), rows = a.value().size() / n;
	Tensor out(a.shape());
	const auto& x = a.value();
	for (std::size_t r = 0; r < rows; ++r) {
		double mx = x[r * n];
		for (std::size_t j = 1; j < n; ++j)
			mx = std::max(mx, x[r * n + j]);
		double z = 0.0;
		for (std::size_t j = 0; j < n; ++j)
			z += out[r * n + j] = std::exp(x[r * n + j] - mx);
		for (std::size_t j = 0; j < n; ++j)
			out[r * n + j] /= z;
	}
	return make("softmax", std::move(out), {a.ptr()}, [rows, n](Node& self) {
		auto& g = self.inputs[0]->grad_buffer();
		for (std::size_t r = 0; r < rows; ++r) {
			double dot = 0.0;
			for (std::size_t j = 0; j < n; ++j)
				dot += self.grad[r * n + j] * self.value[r * n + j];
			for (std::size_t j = 0; j < n; ++j)
				g[r * n + j] += self.value[r * n + j] * (self.grad[r * n + j] - dot);
		}
	});
}

Var embedding_gather(const Var& table, const std::vector<int>& indices) {
	const auto& s = table.shape();
	if (s.size() != 2)
		throw ShapeError("embedding_gather: table must be rank 2, got " + shape_str(s));
	if (indices.empty())
		throw ShapeError("embedding_gather: no indices");
	const std::size_t V = s[0], E = s[1];
	Tensor out({indices.size(), E});
	for (std::size_t i = 0; i < indices.size(); ++i) {
		if (indices[i] < 0 || std::size_t(indices[i]) >= V)
			throw ShapeError("embedding_gather: index " + std::to_string(indices[i]) + " out of range for table " +
			                 shape_str(s));
		std::copy_n(table.value().data().begin() + long(std::size_t(indices[i]) * E), E,
		            out.data().begin() + long(i * E));
	}
	return make("embedding_gather", std::move(out), {table.ptr()}, [indices, E](Node& self) {
		auto& g = self.inputs[0]->grad_buffer();
		for (std::size_t i = 0; i < indices.size(); ++i)
			for (std::size_t e = 0; e < E; ++e)
				g[std::size_t(indices[i]) * E + e] += self.grad[i * E + e];
	});
}

std::pair<Var, Var> lstm_cell(const Var& x, const Var& h, const Var& c, const Var& w, const Var& b) {
	if (x.shape().size() != 2 || h.shape().size() != 2 || h.shape() != c.shape() || x.dim(0) != h.dim(0))
		shape_fail("lstm_cell", x.shape(), h.shape());
	const std::size_t H = h.dim(1);
	if (w.shape() != Shape{x.dim(1) + H, 4 * H} || b.shape() != Shape{4 * H})
		shape_fail("lstm_cell", w.shape(), Shape{x.dim(1) + H, 4 * H});
	Var z = add(matmul(concat({x, h}, 1), w), b);
	Var in_gate = sigmoid(slice(z, 1, 0, H));
	Var forget = sigmoid(slice(z, 1, H, H));
	Var cell = tanh(slice(z, 1, 2 * H, H));
	Var out_gate = sigmoid(slice(z, 1, 3 * H, H));
	Var c_next = add(mul(forget, c), mul(in_gate, cell));
	Var h_next = mul(out_gate, tanh(c_next));
	return {h_next, c_next};
}

Var scaled_dot_attention(const Var& q, const Var& k, const Var& v, bool causal) {
	const auto &qs = q.shape(), &ks = k.shape(), &vs = v.shape();
	if (qs.size() != 3 || ks.size() != 3 || vs.size() != 3 || qs[0] != ks[0] || qs[2] != ks[2] || ks[0] != vs[0] ||
	    ks[1] != vs[1])
		shape_fail("scaled_dot_attention", qs, ks);
	const std::size_t n = qs[1], m = ks[1];
	Var scores = scale(bmm(q, transpose(k)), 1.0 / std::sqrt(double(qs[2])));
	if (causal) {
		Tensor mask({n, m}, 0.0);
		for (std::size_t i = 0; i < n; ++i)
			for (std::size_t j = 0; j < m; ++j)
				if (j + n > i + m)
					mask.at(i, j) = -1e30;
		scores = add(scores, constant(std::move(mask)));
	}
	return bmm(softmax(scores), v);
}

Var mse(const Var& pred, const Var& target) {
	if (pred.shape() != target.shape())
		shape_fail("mse", pred.shape(), target.shape());
	Var d = sub(pred, target);
	return mean(mul(d, d));
}

double finite_difference_check(const std::function<Var(Graph&)>& loss, const ParamStore& params, double h) {
	if (!(h > 0))
		throw InvalidArgument("finite-difference step must be positive");
	ParamStore analytic;
	{
		Graph g(params);
		Var l = loss(g);
		backward(l);
		analytic = g.gradients();
	}
	auto eval = [&](const ParamStore& p) {
		Graph g(p);
		return loss(g).value().item();
	};
	double worst = 0.0;
	ParamStore probe = params;
	for (auto& [name, t] : probe) {
		const auto& ga = analytic.at(name);
		for (std::size_t i = 0; i < t.size(); ++i) {
			const double orig = t[i];
			t[i] = orig + h;
			const double fp = eval(probe);
			t[i] = orig - h;
			const double fm = eval(probe);
			t[i] = orig;
			const double numeric = (fp - fm) / (2 * h);
			const double denom = std::max({1.0, std::abs(ga[i]), std::abs(numeric)});
			worst = std::max(worst, std::abs(ga[i] - numeric) / denom);
		}
	}
	return worst;
}

} // namespace odcast::ad
