#include "odcast/neural.hpp"

#include "odcast/error.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>

namespace odcast::nn {

using ad::Graph;
using ad::ParamStore;
using ad::Tensor;
using ad::Var;

const char* kind_name(ModelKind kind) {
	switch (kind) {
	case ModelKind::DnnLadd:
		return "dnn_ladd";
	case ModelKind::NBeats:
		return "nbeats";
	case ModelKind::Tft:
		return "tft";
	}
	return "?";
}

ModelKind parse_kind(const std::string& name) {
	if (name == "dnn_ladd")
		return ModelKind::DnnLadd;
	if (name == "nbeats")
		return ModelKind::NBeats;
	if (name == "tft")
		return ModelKind::Tft;
	throw InvalidArgument("unknown neural model '" + name + "'");
}

void NeuralConfig::validate() const {
	auto positive = [](int v, const char* what) {
		if (v <= 0)
			throw ConfigError(std::string(what) + " must be positive");
	};
	positive(hidden_dim, "hidden_dim");
	positive(embed_dim, "embed_dim");
	positive(ladd_window, "ladd_window");
	positive(lookback, "lookback");
	positive(n_blocks, "n_blocks");
	positive(n_stacks, "n_stacks");
	positive(n_heads, "n_heads");
	positive(epochs, "epochs");
	positive(batch, "batch");
	positive(horizon, "horizon");
	if (steps_per_epoch < 0)
		throw ConfigError("steps_per_epoch must be >= 0");
	if (hidden_dim % n_heads != 0)
		throw ConfigError("n_heads (" + std::to_string(n_heads) + ") must divide hidden_dim (" +
		                  std::to_string(hidden_dim) + ")");
	if (!(dropout >= 0.0 && dropout < 1.0))
		throw ConfigError("dropout must lie in [0, 1)");
	if (!(lr > 0.0))
		throw ConfigError("lr must be positive");
	if (features.width() == 0)
		throw ConfigError("at least one calendar feature is required");
}

std::size_t NeuralConfig::output_width(ModelKind kind) const {
	return kind == ModelKind::DnnLadd ? 1 : std::size_t(horizon);
}

// ---------------------------------------------------------------------------
// Vocabulary, profiles and batches

Vocab::Vocab(std::vector<std::string> stations) : stations_(std::move(stations)) {
	std::sort(stations_.begin(), stations_.end());
	stations_.erase(std::unique(stations_.begin(), stations_.end()), stations_.end());
}

int Vocab::id(const std::string& station) const {
	auto it = std::lower_bound(stations_.begin(), stations_.end(), station);
	if (it == stations_.end() || *it != station)
		return 0;
	return int(it - stations_.begin()) + 1;
}

Vocab build_vocab(std::span<const ODSeries> series) {
	std::vector<std::string> codes;
	for (const auto& s : series) {
		codes.push_back(s.od.origin());
		codes.push_back(s.od.destination());
	}
	return Vocab(std::move(codes));
}

SeriesProfile profile_of(std::span<const double> history) {
	SeriesProfile p;
	if (history.empty())
		return p;
	const double n = double(history.size());
	double sum = 0.0, zeros = 0.0;
	for (double v : history) {
		sum += v;
		zeros += v == 0.0;
	}
	p.scale = sum / n;
	p.zero_fraction = zeros / n;
	if (p.scale > 0.0) {
		double ss = 0.0;
		for (double v : history)
			ss += (v - p.scale) * (v - p.scale);
		p.cv = std::sqrt(ss / n) / p.scale;
	}
	return p;
}

namespace {

void put_features(double* dst, Date d, const FeatureConfig& fc) {
	auto f = build_features(d, fc);
	std::copy(f.begin(), f.end(), dst);
}

} // namespace

SampleBatch make_batch(ModelKind kind, const NeuralConfig& cfg, const Vocab& vocab, std::span<const Sample> samples) {
	if (samples.empty())
		throw InvalidArgument("make_batch: no samples");
	const std::size_t B = samples.size();
	const auto L = std::size_t(cfg.lookback);
	const auto H = std::size_t(cfg.horizon);
	const auto W = cfg.ladd_window;
	const std::size_t F = cfg.feature_width();
	const std::size_t T = std::size_t(2 * W + 1);
	const std::size_t out_w = cfg.output_width(kind);

	SampleBatch b;
	b.size = B;
	b.history = Tensor({B, L});
	b.ladd = Tensor({B, T, F});
	b.dense = Tensor({B, kDenseWidth});
	b.label = Tensor({B, out_w});
	if (kind == ModelKind::Tft) {
		b.past_features = Tensor({B, L, F});
		b.future_features = Tensor({B, H, F});
	}
	for (std::size_t i = 0; i < B; ++i) {
		const Sample& s = samples[i];
		const ODSeries& ser = *s.series;
		if (s.origin < L)
			throw InsufficientHistory("sample origin " + std::to_string(s.origin) + " precedes the lookback for " +
			                          ser.od.to_string());
		if (!(s.profile.scale > 0.0))
			throw InvalidArgument("sample for " + ser.od.to_string() + " has zero scale");
		const double inv = 1.0 / s.profile.scale;
		for (std::size_t k = 0; k < L; ++k)
			b.history[i * L + k] = ser.values[s.origin - L + k] * inv;
		for (std::size_t k = 0; k < out_w; ++k) {
			const std::size_t idx = s.origin + k;
			b.label[i * out_w + k] = idx < ser.values.size() ? ser.values[idx] * inv : 0.0;
		}
		const Date origin_date = ser.start_date + long(s.origin);
		for (std::size_t t = 0; t < T; ++t)
			put_features(&b.ladd[(i * T + t) * F], origin_date + (long(t) - W), cfg.features);
		b.origin_id.push_back(vocab.id(ser.od.origin()));
		b.destination_id.push_back(vocab.id(ser.od.destination()));
		b.month.push_back(int(origin_date.month()) - 1);
		b.dow.push_back(origin_date.day_of_week());
		b.dense[i * kDenseWidth + 0] = std::log1p(s.profile.scale);
		b.dense[i * kDenseWidth + 1] = s.profile.zero_fraction;
		b.dense[i * kDenseWidth + 2] = s.profile.cv;
		if (kind == ModelKind::Tft) {
			for (std::size_t k = 0; k < L; ++k)
				put_features(&b.past_features[(i * L + k) * F], origin_date - long(L - k), cfg.features);
			for (std::size_t k = 0; k < H; ++k)
				put_features(&b.future_features[(i * H + k) * F], origin_date + long(k), cfg.features);
		}
	}
	return b;
}

// ---------------------------------------------------------------------------
// Layers

namespace {

Var linear(Graph& g, const Var& x, const std::string& name) {
	return ad::add(ad::matmul(x, g.param(name + ".w")), g.param(name + ".b"));
}

Var dropout(const Var& x, double p, ForwardMode mode) {
	if (!mode.rng || p <= 0.0)
		return x;
	std::bernoulli_distribution keep(1.0 - p);
	Tensor mask(x.shape());
	for (auto& v : mask.storage())
		v = keep(*mode.rng) ? 1.0 / (1.0 - p) : 0.0;
	return ad::mul(x, ad::constant(std::move(mask)));
}

/// Step `t` of a [B, T, F] sequence as [B, F].
Var step(const Var& seq, std::size_t t) {
	return ad::reshape(ad::slice(seq, 1, t, 1), {seq.dim(0), seq.dim(2)});
}

/// Final hidden states of a forward and a backward LSTM pass, concatenated.
Var bilstm(Graph& g, const Var& seq, const std::string& name, std::size_t hidden) {
	const std::size_t B = seq.dim(0), T = seq.dim(1);
	auto run = [&](const std::string& dir, bool reverse) {
		Var h = g.constant(Tensor({B, hidden}));
		Var c = h;
		Var w = g.param(name + "." + dir + ".w"), b = g.param(name + "." + dir + ".b");
		for (std::size_t k = 0; k < T; ++k) {
			std::tie(h, c) = ad::lstm_cell(step(seq, reverse ? T - 1 - k : k), h, c, w, b);
		}
		return h;
	};
	return ad::concat({run("fw", false), run("bw", true)}, 1);
}

Var embeddings(Graph& g, const SampleBatch& b) {
	return ad::concat({ad::embedding_gather(g.param("emb.origin"), b.origin_id),
	                   ad::embedding_gather(g.param("emb.destination"), b.destination_id),
	                   ad::embedding_gather(g.param("emb.month"), b.month),
	                   ad::embedding_gather(g.param("emb.dow"), b.dow)},
	                  1);
}

/// Dense covariates as tokens, single-head self-attention, mean-pooled: [B, E].
Var dense_attention(Graph& g, const SampleBatch& b, std::size_t E) {
	const std::size_t B = b.size;
	Var dense = g.constant(b.dense);
	Var tok_w = g.param("tok.w");
	std::vector<Var> tokens;
	for (std::size_t j = 0; j < kDenseWidth; ++j)
		tokens.push_back(
		    ad::reshape(ad::matmul(ad::slice(dense, 1, j, 1), ad::slice(tok_w, 0, j, 1)), {B, 1, E}));
	Var t = ad::add(ad::concat(tokens, 1), g.param("tok.b"));
	Var att = ad::scaled_dot_attention(ad::matmul(t, g.param("att.q")), ad::matmul(t, g.param("att.k")),
	                                   ad::matmul(t, g.param("att.v")));
	return ad::mean_axis(att, 1);
}

std::string block_name(int stack, int block) {
	return "s" + std::to_string(stack) + "b" + std::to_string(block);
}

} // namespace

Var dnn_ladd_forward(Graph& g, const SampleBatch& batch, const NeuralConfig& cfg, ForwardMode mode) {
	const auto hid = std::size_t(cfg.hidden_dim);
	Var x = ad::concat({bilstm(g, g.constant(batch.ladd), "ladd", hid), embeddings(g, batch), g.constant(batch.dense)},
	                   1);
	Var h = dropout(ad::relu(linear(g, x, "fc1")), cfg.dropout, mode);
	h = dropout(ad::relu(linear(g, h, "fc2")), cfg.dropout, mode);
	return linear(g, h, "head");
}

NBeatsOutput nbeats_forward(Graph& g, const SampleBatch& batch, const NeuralConfig& cfg, ForwardMode mode) {
	const auto hid = std::size_t(cfg.hidden_dim);
	const auto E = std::size_t(cfg.embed_dim);
	Var context = ad::concat(
	    {bilstm(g, g.constant(batch.ladd), "ladd", hid), embeddings(g, batch), dense_attention(g, batch, E)}, 1);
	Var residual = g.constant(batch.history);
	NBeatsOutput out;
	for (int s = 0; s < cfg.n_stacks; ++s)
		for (int k = 0; k < cfg.n_blocks; ++k) {
			const std::string name = block_name(s, k);
			Var x = ad::concat({residual, context}, 1);
			Var h = dropout(ad::relu(linear(g, x, name + ".fc1")), cfg.dropout, mode);
			h = dropout(ad::relu(linear(g, h, name + ".fc2")), cfg.dropout, mode);
			residual = ad::sub(residual, linear(g, h, name + ".back"));
			Var f = linear(g, h, name + ".fore");
			out.forecast = out.blocks.empty() ? f : ad::add(out.forecast, f);
			out.blocks.push_back(f);
		}
	return out;
}

Var tft_forward(Graph& g, const SampleBatch& batch, const NeuralConfig& cfg, ForwardMode mode) {
	cfg.validate();
	const std::size_t B = batch.size;
	const auto hid = std::size_t(cfg.hidden_dim);
	const auto L = std::size_t(cfg.lookback);
	const auto H = std::size_t(cfg.horizon);
	const auto heads = std::size_t(cfg.n_heads);

	Var stat = linear(g,
	                  ad::concat({ad::embedding_gather(g.param("emb.origin"), batch.origin_id),
	                              ad::embedding_gather(g.param("emb.destination"), batch.destination_id)},
	                             1),
	                  "static");
	Var past_in = ad::concat({ad::reshape(g.constant(batch.history), {B, L, 1}), g.constant(batch.past_features)}, 2);
	Var past = linear(g, past_in, "past");
	Var fut = linear(g, g.constant(batch.future_features), "future");

	auto run = [&](const Var& seq, std::size_t T, const std::string& name, Var& h, Var& c) {
		Var w = g.param(name + ".w"), b = g.param(name + ".b");
		std::vector<Var> states;
		for (std::size_t t = 0; t < T; ++t) {
			std::tie(h, c) = ad::lstm_cell(ad::add(step(seq, t), stat), h, c, w, b);
			states.push_back(ad::reshape(h, {B, 1, hid}));
		}
		return ad::concat(states, 1);
	};
	Var h = g.constant(Tensor({B, hid}));
	Var c = h;
	Var enc = run(past, L, "enc", h, c);
	Var dec = run(fut, H, "dec", h, c);
	Var all = ad::concat({enc, dec}, 1);

	Var q = ad::matmul(dec, g.param("att.q"));
	Var k = ad::matmul(all, g.param("att.k"));
	Var v = ad::matmul(all, g.param("att.v"));
	const std::size_t dh = hid / heads;
	std::vector<Var> head_out;
	for (std::size_t i = 0; i < heads; ++i)
		head_out.push_back(ad::scaled_dot_attention(ad::slice(q, 2, i * dh, dh), ad::slice(k, 2, i * dh, dh),
		                                            ad::slice(v, 2, i * dh, dh), true));
	Var attn = ad::matmul(ad::concat(head_out, 2), g.param("att.o"));
	Var gate = ad::sigmoid(linear(g, dec, "gate"));
	Var out = dropout(ad::add(dec, ad::mul(gate, ad::sub(attn, dec))), cfg.dropout, mode);
	return ad::reshape(linear(g, out, "head"), {B, H});
}

Var forward(ModelKind kind, Graph& g, const SampleBatch& batch, const NeuralConfig& cfg, ForwardMode mode) {
	switch (kind) {
	case ModelKind::DnnLadd:
		return dnn_ladd_forward(g, batch, cfg, mode);
	case ModelKind::NBeats:
		return nbeats_forward(g, batch, cfg, mode).forecast;
	case ModelKind::Tft:
		return tft_forward(g, batch, cfg, mode);
	}
	throw InvalidArgument("unknown model kind");
}

Var batch_loss(ModelKind kind, Graph& g, const SampleBatch& batch, const NeuralConfig& cfg, ForwardMode mode) {
	return ad::mse(forward(kind, g, batch, cfg, mode), g.constant(batch.label));
}

// ---------------------------------------------------------------------------
// Initialisation

ParamStore init_params(ModelKind kind, const NeuralConfig& cfg, std::size_t vocab_size, std::uint64_t seed) {
	cfg.validate();
	Rng rng(seed);
	ParamStore p;
	auto glorot = [&](const std::string& name, std::size_t fan_in, std::size_t fan_out) {
		const double lim = std::sqrt(6.0 / double(fan_in + fan_out));
		std::uniform_real_distribution<double> u(-lim, lim);
		Tensor t({fan_in, fan_out});
		for (auto& v : t.storage())
			v = u(rng);
		p.set(name, std::move(t));
	};
	auto dense_layer = [&](const std::string& name, std::size_t in, std::size_t out) {
		glorot(name + ".w", in, out);
		p.set(name + ".b", Tensor({out}));
	};
	auto lstm = [&](const std::string& name, std::size_t in, std::size_t hidden) {
		glorot(name + ".w", in + hidden, 4 * hidden);
		Tensor b({4 * hidden});
		for (std::size_t i = hidden; i < 2 * hidden; ++i)
			b[i] = 1.0;
		p.set(name + ".b", std::move(b));
	};
	const auto hid = std::size_t(cfg.hidden_dim);
	const auto E = std::size_t(cfg.embed_dim);
	const std::size_t F = cfg.feature_width();
	const auto L = std::size_t(cfg.lookback);
	const auto H = std::size_t(cfg.horizon);
	auto embeddings_all = [&] {
		glorot("emb.origin", vocab_size, E);
		glorot("emb.destination", vocab_size, E);
		glorot("emb.month", 12, E);
		glorot("emb.dow", 7, E);
	};

	switch (kind) {
	case ModelKind::DnnLadd: {
		lstm("ladd.fw", F, hid);
		lstm("ladd.bw", F, hid);
		embeddings_all();
		dense_layer("fc1", 2 * hid + 4 * E + kDenseWidth, hid);
		dense_layer("fc2", hid, hid);
		dense_layer("head", hid, 1);
		break;
	}
	case ModelKind::NBeats: {
		lstm("ladd.fw", F, hid);
		lstm("ladd.bw", F, hid);
		embeddings_all();
		glorot("tok.w", kDenseWidth, E);
		p.set("tok.b", Tensor({kDenseWidth, E}));
		glorot("att.q", E, E);
		glorot("att.k", E, E);
		glorot("att.v", E, E);
		const std::size_t ctx = 2 * hid + 5 * E;
		for (int s = 0; s < cfg.n_stacks; ++s)
			for (int k = 0; k < cfg.n_blocks; ++k) {
				const std::string name = block_name(s, k);
				dense_layer(name + ".fc1", L + ctx, hid);
				dense_layer(name + ".fc2", hid, hid);
				dense_layer(name + ".back", hid, L);
				dense_layer(name + ".fore", hid, H);
			}
		break;
	}
	case ModelKind::Tft: {
		glorot("emb.origin", vocab_size, E);
		glorot("emb.destination", vocab_size, E);
		dense_layer("static", 2 * E, hid);
		dense_layer("past", 1 + F, hid);
		dense_layer("future", F, hid);
		lstm("enc", hid, hid);
		lstm("dec", hid, hid);
		glorot("att.q", hid, hid);
		glorot("att.k", hid, hid);
		glorot("att.v", hid, hid);
		glorot("att.o", hid, hid);
		dense_layer("gate", hid, hid);
		dense_layer("head", hid, 1);
		break;
	}
	}
	return p;
}

// ---------------------------------------------------------------------------
// Training and prediction

std::vector<Sample> training_samples(ModelKind kind, const NeuralConfig& cfg, std::span<const ODSeries> series,
                                     std::vector<ODKey>* excluded) {
	const auto L = std::size_t(cfg.lookback);
	const std::size_t span = cfg.output_width(kind);
	std::vector<Sample> out;
	for (const auto& s : series) {
		SeriesProfile prof = profile_of(s.values);
		if (!(prof.scale > 0.0) || s.size() < L + span) {
			if (excluded)
				excluded->push_back(s.od);
			continue;
		}
		for (std::size_t o = L; o + span <= s.size(); ++o)
			out.push_back({&s, o, prof});
	}
	return out;
}

NeuralModel train_model(ModelKind kind, std::span<const ODSeries> series, const NeuralConfig& cfg,
                        TrainReport* report) {
	cfg.validate();
	NeuralModel m{kind, cfg, build_vocab(series), {}};
	m.params = init_params(kind, cfg, m.vocab.size(), substream(cfg.seed, "init"));
	train_params(m, series, report);
	return m;
}

void train_params(NeuralModel& m, std::span<const ODSeries> series, TrainReport* report) {
	std::vector<ODKey> excluded;
	auto samples = training_samples(m.kind, m.cfg, series, &excluded);
	train_on_samples(m, samples, report);
	if (report)
		report->excluded = std::move(excluded);
}

void train_on_samples(NeuralModel& m, std::span<const Sample> samples, TrainReport* report) {
	const NeuralConfig& cfg = m.cfg;
	if (samples.empty())
		throw InsufficientHistory(std::string(kind_name(m.kind)) + ": no series provides a training sample");

	Rng rng(substream(cfg.seed, "batches"));
	Rng drop_rng(substream(cfg.seed, "dropout"));
	ForwardMode mode{cfg.dropout > 0.0 ? &drop_rng : nullptr};
	std::vector<std::size_t> order(samples.size());
	std::iota(order.begin(), order.end(), 0);
	std::shuffle(order.begin(), order.end(), rng);
	std::size_t cursor = 0;

	const auto bsz = std::size_t(cfg.batch);
	const std::size_t steps =
	    cfg.steps_per_epoch > 0 ? std::size_t(cfg.steps_per_epoch) : (samples.size() + bsz - 1) / bsz;
	ad::AdamState adam;
	ad::AdamOptions opt;
	opt.lr = cfg.lr;
	std::vector<double> epoch_loss;
	std::vector<Sample> picked;
	for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
		double total = 0.0;
		for (std::size_t s = 0; s < steps; ++s) {
			picked.clear();
			const std::size_t n = std::min(bsz, samples.size());
			for (std::size_t i = 0; i < n; ++i) {
				if (cursor == order.size()) {
					std::shuffle(order.begin(), order.end(), rng);
					cursor = 0;
				}
				picked.push_back(samples[order[cursor++]]);
			}
			auto batch = make_batch(m.kind, cfg, m.vocab, picked);
			Graph g(m.params);
			Var loss = batch_loss(m.kind, g, batch, cfg, mode);
			ad::backward(loss);
			total += loss.value()[0];
			m.params = ad::adam_step(adam, m.params, g.gradients(), opt);
		}
		epoch_loss.push_back(total / double(steps));
	}
	if (report) {
		report->epoch_loss = std::move(epoch_loss);
		report->n_samples = samples.size();
	}
}

std::vector<double> predict_series(const NeuralModel& model, const ParamStore& params, const ODSeries& history,
                                   int horizon) {
	if (horizon <= 0)
		throw InvalidArgument("horizon must be positive");
	const NeuralConfig& cfg = model.cfg;
	const auto L = std::size_t(cfg.lookback);
	if (history.size() < L)
		throw InsufficientHistory(std::string(kind_name(model.kind)) + " needs " + std::to_string(L) +
		                          " days of history for " + history.od.to_string() + ", got " +
		                          std::to_string(history.size()));
	const SeriesProfile prof = profile_of(history.values);
	if (!(prof.scale > 0.0))
		throw InsufficientHistory(std::string(kind_name(model.kind)) + ": zero-mean history for " +
		                          history.od.to_string());

	ODSeries ext;
	ext.od = history.od;
	ext.start_date = history.start_date;
	ext.values = history.values;
	const std::size_t n = history.size();
	const auto H = std::size_t(horizon);
	std::vector<double> out;
	out.reserve(H);

	auto run = [&](std::span<const Sample> samples) {
		auto batch = make_batch(model.kind, cfg, model.vocab, samples);
		Graph g(params);
		return forward(model.kind, g, batch, cfg).value();
	};

	if (model.kind == ModelKind::DnnLadd) {
		// Each day is predicted from its own calendar context; no rollout needed.
		ext.values.resize(n + H, 0.0);
		constexpr std::size_t kChunk = 256;
		for (std::size_t start = 0; start < H; start += kChunk) {
			std::vector<Sample> samples;
			for (std::size_t k = start; k < std::min(H, start + kChunk); ++k)
				samples.push_back({&ext, n + k, prof});
			Tensor y = run(samples);
			for (std::size_t k = 0; k < samples.size(); ++k)
				out.push_back(std::max(0.0, y[k] * prof.scale));
		}
		return out;
	}

	const auto chunk = std::size_t(cfg.horizon);
	while (out.size() < H) {
		Sample s{&ext, ext.values.size(), prof};
		Tensor y = run(std::span<const Sample>(&s, 1));
		for (std::size_t k = 0; k < chunk; ++k) {
			const double v = std::max(0.0, y[k] * prof.scale);
			ext.values.push_back(v);
			if (out.size() < H)
				out.push_back(v);
		}
	}
	return out;
}

// ---------------------------------------------------------------------------
// Checkpoints

namespace {

nlohmann::json config_json(const NeuralModel& m) {
	const auto& c = m.cfg;
	nlohmann::json events = nlohmann::json::array();
	for (const auto& e : c.features.events)
		events.push_back({{"day_of_year", e.day_of_year}, {"multiplier", e.multiplier}, {"half_width", e.half_width}});
	return {{"kind", kind_name(m.kind)},
	        {"hidden_dim", c.hidden_dim},
	        {"embed_dim", c.embed_dim},
	        {"ladd_window", c.ladd_window},
	        {"lookback", c.lookback},
	        {"n_blocks", c.n_blocks},
	        {"n_stacks", c.n_stacks},
	        {"n_heads", c.n_heads},
	        {"dropout", c.dropout},
	        {"lr", c.lr},
	        {"epochs", c.epochs},
	        {"batch", c.batch},
	        {"steps_per_epoch", c.steps_per_epoch},
	        {"horizon", c.horizon},
	        {"seed", c.seed},
	        {"features",
	         {{"yearly_harmonics", c.features.yearly_harmonics},
	          {"weekly_harmonics", c.features.weekly_harmonics},
	          {"events", events}}},
	        {"vocab", m.vocab.stations()}};
}

} // namespace

void save_checkpoint(const NeuralModel& model, std::ostream& out) {
	out << config_json(model).dump() << '\n';
	ad::save_params(model.params, out);
	if (!out)
		throw IoError("failed to write checkpoint");
}

NeuralModel load_checkpoint(std::istream& in) {
	std::string line;
	if (!std::getline(in, line))
		throw ParseError("checkpoint: missing header");
	NeuralModel m;
	try {
		auto j = nlohmann::json::parse(line);
		m.kind = parse_kind(j.at("kind").get<std::string>());
		auto& c = m.cfg;
		c.hidden_dim = j.at("hidden_dim");
		c.embed_dim = j.at("embed_dim");
		c.ladd_window = j.at("ladd_window");
		c.lookback = j.at("lookback");
		c.n_blocks = j.at("n_blocks");
		c.n_stacks = j.at("n_stacks");
		c.n_heads = j.at("n_heads");
		c.dropout = j.at("dropout");
		c.lr = j.at("lr");
		c.epochs = j.at("epochs");
		c.batch = j.at("batch");
		c.steps_per_epoch = j.at("steps_per_epoch");
		c.horizon = j.at("horizon");
		c.seed = j.at("seed");
		const auto& f = j.at("features");
		c.features.yearly_harmonics = f.at("yearly_harmonics");
		c.features.weekly_harmonics = f.at("weekly_harmonics");
		for (const auto& e : f.at("events"))
			c.features.events.push_back(
			    {e.at("day_of_year").get<int>(), e.at("multiplier").get<double>(), e.at("half_width").get<int>()});
		m.vocab = Vocab(j.at("vocab").get<std::vector<std::string>>());
	} catch (const nlohmann::json::exception& e) {
		throw ParseError(std::string("checkpoint header: ") + e.what());
	}
	m.cfg.validate();
	m.params = ad::load_params(in);
	m.params.check_aligned(init_params(m.kind, m.cfg, m.vocab.size(), 0));
	return m;
}

} // namespace odcast::nn
