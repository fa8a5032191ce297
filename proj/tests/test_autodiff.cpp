#include "doctest.h"

#include "odcast/autodiff.hpp"
#include "odcast/error.hpp"
#include "odcast/params.hpp"

#include <cmath>
#include <random>
#include <sstream>

using namespace odcast;
using namespace odcast::ad;

namespace {

Tensor random_tensor(Shape shape, std::mt19937_64& rng, double scale = 1.0) {
	std::uniform_real_distribution<double> u(-scale, scale);
	Tensor t(std::move(shape));
	for (auto& v : t.storage())
		v = u(rng);
	return t;
}

ParamStore single(const std::string& name, Tensor t) {
	ParamStore p;
	p.set(name, std::move(t));
	return p;
}

} // namespace

TEST_CASE("forward op examples") {
	auto a = constant(Tensor::from_rows({{1, 2}, {3, 4}}));
	auto eye = constant(Tensor::from_rows({{1, 0}, {0, 1}}));
	CHECK(matmul(a, eye).value() == a.value());

	auto s = softmax(constant(Tensor({2}, {0.0, 0.0})));
	CHECK(s.value()[0] == doctest::Approx(0.5));
	CHECK(s.value()[1] == doctest::Approx(0.5));

	const std::size_t H = 3, in = 2;
	auto zero = constant(Tensor({1, H}));
	auto [h, c] = lstm_cell(constant(Tensor({1, in}, {0.4, -1.0})), zero, zero, constant(Tensor({in + H, 4 * H})),
	                        constant(Tensor({4 * H})));
	for (double v : h.value().data())
		CHECK(v == 0.0);
	for (double v : c.value().data())
		CHECK(v == 0.0);
}

TEST_CASE("shape errors name the op") {
	auto a = constant(Tensor({2, 3}));
	auto b = constant(Tensor({2, 2}));
	try {
		matmul(a, b);
		FAIL("expected shape error");
	} catch (const ShapeError& e) {
		CHECK(std::string(e.what()).find("matmul") != std::string::npos);
		CHECK(std::string(e.what()).find("[2x3]") != std::string::npos);
	}
	CHECK_THROWS_AS(add(a, constant(Tensor({3, 2}))), ShapeError);
	CHECK_THROWS_AS(concat({a, constant(Tensor({2, 2, 1}))}, 0), ShapeError);
	CHECK_THROWS_AS(slice(a, 1, 2, 2), ShapeError);
	CHECK_THROWS_AS(backward(a), ShapeError);
}

TEST_CASE("non-finite values are an error state") {
	auto big = constant(Tensor({1}, {1e308}));
	CHECK_THROWS_AS(scale(big, 10.0), NumericError);
}

TEST_CASE("backward examples") {
	ParamStore p;
	p.set("x", Tensor::scalar(3.0));
	p.set("y", Tensor::scalar(5.0));
	Graph g(p);
	backward(mul(g.param("x"), g.param("y")));
	auto grads = g.gradients();
	CHECK(grads.at("x")[0] == 5.0);
	CHECK(grads.at("y")[0] == 3.0);

	auto w = single("w", Tensor({4}, 0.0));
	Graph gw(w);
	backward(mean(tanh(gw.param("w"))));
	auto gw_grads = gw.gradients();
	for (double v : gw_grads.at("w").data())
		CHECK(v == doctest::Approx(0.25));
}

TEST_CASE("gradients accumulate until zeroed") {
	auto p = single("w", Tensor::scalar(2.0));
	Graph g(p);
	auto w = g.param("w");
	backward(mul(w, w));
	backward(mul(w, w));
	CHECK(g.gradients().at("w")[0] == 8.0);
	g.zero_grad();
	backward(mul(w, w));
	CHECK(g.gradients().at("w")[0] == 4.0);
}

TEST_CASE("finite difference oracle") {
	auto w = single("w", Tensor::scalar(1.0));
	CHECK(finite_difference_check([](Graph& g) { return scale(g.param("w"), 3.0); }, w) < 1e-10);
	CHECK(finite_difference_check([](Graph& g) { return mul(g.param("w"), g.param("w")); }, w) < 1e-8);

	std::mt19937_64 rng(42);
	ParamStore mlp;
	mlp.set("w1", random_tensor({3, 5}, rng));
	mlp.set("b1", random_tensor({5}, rng));
	mlp.set("w2", random_tensor({5, 2}, rng));
	mlp.set("b2", random_tensor({2}, rng));
	Tensor x = random_tensor({4, 3}, rng);
	Tensor y = random_tensor({4, 2}, rng);
	auto loss = [&](Graph& g) {
		auto h = tanh(add(matmul(g.constant(x), g.param("w1")), g.param("b1")));
		return mse(add(matmul(h, g.param("w2")), g.param("b2")), g.constant(y));
	};
	CHECK(finite_difference_check(loss, mlp) < 1e-4);
}

TEST_CASE("gradient checks for every op") {
	std::mt19937_64 rng(7);
	auto check = [&](const char* label, ParamStore p, const std::function<Var(Graph&)>& f) {
		CAPTURE(label);
		CHECK(finite_difference_check(f, p) < 1e-4);
	};

	ParamStore ab;
	ab.set("a", random_tensor({2, 3, 4}, rng));
	ab.set("b", random_tensor({3, 4}, rng));
	ab.set("c", random_tensor({2, 3, 4}, rng));
	check("broadcast add/sub/mul", ab, [](Graph& g) {
		auto a = g.param("a"), b = g.param("b"), c = g.param("c");
		return sum(mul(sub(add(a, b), c), mul(a, b)));
	});
	check("scalar ops", ab, [](Graph& g) { return sum(add_scalar(scale(g.param("a"), -1.5), 2.0)); });
	check("sigmoid relu", ab, [](Graph& g) { return sum(mul(sigmoid(g.param("a")), relu(g.param("c")))); });
	check("softmax", ab, [](Graph& g) { return sum(mul(softmax(g.param("a")), g.param("c"))); });
	check("transpose reshape", ab, [](Graph& g) {
		auto t = transpose(g.param("a"));
		return sum(mul(reshape(t, {2, 3, 4}), g.param("c")));
	});
	check("concat slice", ab, [](Graph& g) {
		auto cat = concat({g.param("a"), g.param("c")}, 2);
		auto cat0 = concat({g.param("a"), g.param("c")}, 0);
		return add(sum(mul(slice(cat, 2, 3, 4), g.param("c"))), sum(tanh(slice(cat0, 0, 1, 2))));
	});
	check("mean_axis", ab, [](Graph& g) { return sum(tanh(mean_axis(g.param("a"), 1))); });

	ParamStore bm;
	bm.set("x", random_tensor({2, 3, 4}, rng));
	bm.set("y", random_tensor({2, 4, 5}, rng));
	check("bmm", bm, [](Graph& g) { return sum(tanh(bmm(g.param("x"), g.param("y")))); });

	ParamStore emb;
	emb.set("table", random_tensor({6, 3}, rng));
	check("embedding", emb, [](Graph& g) { return sum(tanh(embedding_gather(g.param("table"), {1, 4, 1}))); });

	ParamStore lstm;
	lstm.set("w", random_tensor({2 + 3, 12}, rng, 0.5));
	lstm.set("b", random_tensor({12}, rng, 0.5));
	lstm.set("x", random_tensor({2, 2}, rng));
	lstm.set("h", random_tensor({2, 3}, rng));
	lstm.set("c", random_tensor({2, 3}, rng));
	check("lstm", lstm, [](Graph& g) {
		auto [h1, c1] = lstm_cell(g.param("x"), g.param("h"), g.param("c"), g.param("w"), g.param("b"));
		auto [h2, c2] = lstm_cell(g.param("x"), h1, c1, g.param("w"), g.param("b"));
		return add(sum(h2), sum(mul(c2, c2)));
	});

	ParamStore att;
	att.set("q", random_tensor({2, 3, 4}, rng));
	att.set("k", random_tensor({2, 5, 4}, rng));
	att.set("v", random_tensor({2, 5, 2}, rng));
	for (bool causal : {false, true})
		check(causal ? "causal attention" : "attention", att, [causal](Graph& g) {
			auto out = scaled_dot_attention(g.param("q"), g.param("k"), g.param("v"), causal);
			return sum(mul(out, out));
		});
}

TEST_CASE("attention semantics") {
	std::mt19937_64 rng(3);
	auto q = constant(random_tensor({1, 4, 2}, rng));
	auto k = constant(random_tensor({1, 4, 2}, rng));
	Tensor vt = random_tensor({1, 4, 3}, rng);
	auto out = scaled_dot_attention(q, k, constant(vt), true);
	// first query sees only the first key
	for (std::size_t j = 0; j < 3; ++j)
		CHECK(out.value()[j] == doctest::Approx(vt[j]));

	// oracle for an unmasked query: explicit softmax of q.k / sqrt(d)
	auto full = scaled_dot_attention(q, k, constant(vt), false);
	const auto& Q = q.value();
	const auto& K = k.value();
	for (std::size_t i = 0; i < 4; ++i) {
		double w[4], z = 0;
		for (std::size_t j = 0; j < 4; ++j) {
			w[j] = std::exp((Q[i * 2] * K[j * 2] + Q[i * 2 + 1] * K[j * 2 + 1]) / std::sqrt(2.0));
			z += w[j];
		}
		for (std::size_t c = 0; c < 3; ++c) {
			double expect = 0;
			for (std::size_t j = 0; j < 4; ++j)
				expect += w[j] / z * vt[j * 3 + c];
			CHECK(full.value()[i * 3 + c] == doctest::Approx(expect).epsilon(1e-12));
		}
	}
}

TEST_CASE("lstm_cell matches the gate equations") {
	std::mt19937_64 rng(5);
	const std::size_t H = 2, in = 3;
	Tensor x = random_tensor({1, in}, rng), h = random_tensor({1, H}, rng), c = random_tensor({1, H}, rng);
	Tensor w = random_tensor({in + H, 4 * H}, rng), b = random_tensor({4 * H}, rng);
	auto [h1, c1] = lstm_cell(constant(x), constant(h), constant(c), constant(w), constant(b));
	auto sig = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
	for (std::size_t u = 0; u < H; ++u) {
		double z[4];
		for (std::size_t gte = 0; gte < 4; ++gte) {
			std::size_t col = gte * H + u;
			double s = b[col];
			for (std::size_t r = 0; r < in; ++r)
				s += x[r] * w.at(r, col);
			for (std::size_t r = 0; r < H; ++r)
				s += h[r] * w.at(in + r, col);
			z[gte] = s;
		}
		double cn = sig(z[1]) * c[u] + sig(z[0]) * std::tanh(z[2]);
		CHECK(c1.value()[u] == doctest::Approx(cn).epsilon(1e-12));
		CHECK(h1.value()[u] == doctest::Approx(sig(z[3]) * std::tanh(cn)).epsilon(1e-12));
	}
}

TEST_CASE("softmax rows sum to one") {
	std::mt19937_64 rng(11);
	auto s = softmax(constant(random_tensor({5, 7}, rng, 50.0)));
	for (std::size_t r = 0; r < 5; ++r) {
		double total = 0;
		for (std::size_t c = 0; c < 7; ++c)
			total += s.value().at(r, c);
		CHECK(std::abs(total - 1.0) < 1e-12);
	}
}

TEST_CASE("embedding gradient scatters to gathered rows only") {
	std::mt19937_64 rng(2);
	auto p = single("t", random_tensor({5, 2}, rng));
	Graph g(p);
	backward(sum(embedding_gather(g.param("t"), {0, 3, 3})));
	auto grad = g.gradients().at("t");
	for (std::size_t r = 0; r < 5; ++r)
		for (std::size_t c = 0; c < 2; ++c)
			CHECK(grad.at(r, c) == (r == 0 ? 1.0 : r == 3 ? 2.0 : 0.0));
	CHECK_THROWS_AS(embedding_gather(constant(p.at("t")), {5}), Error);
}

TEST_CASE("ops do not mutate inputs and replay is bit-identical") {
	std::mt19937_64 rng(19);
	ParamStore p;
	p.set("a", random_tensor({3, 4}, rng));
	p.set("w", random_tensor({4, 4}, rng));
	const ParamStore before = p;
	auto run = [&] {
		Graph g(p);
		auto out = mean(softmax(tanh(matmul(g.param("a"), g.param("w")))));
		backward(out);
		return std::make_pair(out.value(), g.gradients());
	};
	auto r1 = run();
	auto r2 = run();
	CHECK(r1.first == r2.first);
	CHECK(r1.second == r2.second);
	CHECK(p == before);
}

TEST_CASE("random composed graphs pass the gradient check") {
	using Op = std::function<Var(const Var&, const Var&)>;
	std::vector<std::pair<const char*, Op>> ops = {
	    {"add", [](const Var& a, const Var& b) { return add(a, b); }},
	    {"sub", [](const Var& a, const Var& b) { return sub(a, b); }},
	    {"mul", [](const Var& a, const Var& b) { return mul(a, b); }},
	    {"matmul", [](const Var& a, const Var& b) { return matmul(a, b); }},
	    {"tanh", [](const Var& a, const Var&) { return tanh(a); }},
	    {"sigmoid", [](const Var& a, const Var&) { return sigmoid(a); }},
	    {"softmax", [](const Var& a, const Var&) { return softmax(a); }},
	    {"relu", [](const Var& a, const Var&) { return relu(add_scalar(a, 0.1)); }},
	};
	for (unsigned trial = 0; trial < 40; ++trial) {
		std::mt19937_64 rng(1000 + trial);
		ParamStore p;
		p.set("x", random_tensor({3, 3}, rng));
		p.set("y", random_tensor({3, 3}, rng));
		std::vector<std::size_t> seq;
		std::uniform_int_distribution<std::size_t> pick(0, ops.size() - 1);
		for (int d = 0; d < 5; ++d)
			seq.push_back(pick(rng));
		auto f = [&](Graph& g) {
			Var acc = g.param("x");
			Var other = g.param("y");
			for (std::size_t k : seq)
				acc = ops[k].second(acc, other);
			return mean(mul(acc, acc));
		};
		CAPTURE(trial);
		CHECK(finite_difference_check(f, p) < 1e-4);
	}
}

TEST_CASE("sgd_step") {
	auto w = single("w", Tensor::scalar(1.0));
	auto g = single("w", Tensor::scalar(-2.0));
	auto w1 = sgd_step(w, g, 0.1);
	CHECK(w1.at("w")[0] == doctest::Approx(1.2));
	CHECK(w.at("w")[0] == 1.0);
	CHECK(sgd_step(w, w.zeros_like(), 0.1) == w);

	std::mt19937_64 rng(8);
	ParamStore p;
	p.set("a", random_tensor({2, 2}, rng));
	auto ga = single("a", random_tensor({2, 2}, rng));
	auto twice = sgd_step(sgd_step(p, ga, 0.1), ga, 0.1);
	auto once = sgd_step(p, add(ga, ga), 0.1);
	for (std::size_t i = 0; i < 4; ++i)
		CHECK(twice.at("a")[i] == doctest::Approx(once.at("a")[i]).epsilon(1e-14));

	CHECK_THROWS_AS(sgd_step(w, single("v", Tensor::scalar(1.0)), 0.1), InvalidArgument);
	CHECK_THROWS_AS(sgd_step(w, g, 0.0), InvalidArgument);
}

TEST_CASE("adam_step") {
	auto w = single("w", Tensor::scalar(0.5));
	auto g = single("w", Tensor::scalar(1.0));
	AdamState st;
	auto w1 = adam_step(st, w, g, {});
	CHECK(w1.at("w")[0] - 0.5 == doctest::Approx(-0.001).epsilon(1e-6));

	AdamState zero_state;
	auto z = w;
	for (int i = 0; i < 5; ++i)
		z = adam_step(zero_state, z, w.zeros_like(), {});
	CHECK(z == w);

	AdamState s1, s2;
	CHECK(adam_step(s1, w, g, {}) == adam_step(s2, w, g, {}));
}

TEST_CASE("param store round trip is lossless") {
	std::mt19937_64 rng(31);
	ParamStore p;
	p.set("enc.w", random_tensor({3, 4}, rng, 1e3));
	p.set("bias", random_tensor({4}, rng, 1e-9));
	p.set("scalar", Tensor::scalar(M_PI));
	std::stringstream buf;
	save_params(p, buf);
	CHECK(load_params(buf) == p);

	ParamStore copy = p;
	copy.at("bias").storage()[0] = 42.0;
	CHECK_FALSE(copy == p);

	std::stringstream bad("not-a-param-file\n");
	CHECK_THROWS_AS(load_params(bad), ParseError);
}
