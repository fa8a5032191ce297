#pragma once

#include "odcast/data.hpp"
#include "odcast/neural.hpp"
#include "odcast/synthetic.hpp"

#include <random>
#include <vector>

namespace fixtures {

using namespace odcast;
using namespace odcast::nn;

/// Smallest configurations used for gradient and invariant checks.
inline NeuralConfig tiny_config(ModelKind kind) {
	NeuralConfig c;
	c.hidden_dim = 4;
	c.embed_dim = 2;
	c.ladd_window = 1;
	c.lookback = 8;
	c.n_stacks = 1;
	c.n_blocks = 2;
	c.n_heads = 2;
	c.horizon = 2;
	c.batch = 8;
	c.features.yearly_harmonics = 1;
	c.features.weekly_harmonics = 1;
	if (kind == ModelKind::Tft) {
		c.hidden_dim = 8;
		c.horizon = 4;
	}
	return c;
}

/// Regularised series of a small synthetic panel.
inline std::vector<ODSeries> synthetic_series(int n_ods, int n_days, std::uint64_t seed,
                                              const FeatureConfig& features = {}) {
	SyntheticConfig sc;
	sc.n_ods = n_ods;
	sc.n_days = n_days;
	sc.seed = seed;
	sc.zero_inflation_tail = 0.0;
	auto ds = generate_synthetic(sc);
	std::vector<ODSeries> out;
	for (const auto& od : ds.ods())
		out.push_back(regularize(ds, od, ds.span(), features));
	return out;
}

/// Parameters with every entry drawn uniformly from [-scale, scale].
inline ad::ParamStore randomized(ad::ParamStore p, std::mt19937_64& rng, double scale = 0.5) {
	std::uniform_real_distribution<double> u(-scale, scale);
	for (auto& [_, t] : p)
		for (auto& v : t.storage())
			v = u(rng);
	return p;
}

/// Random batch of `n` samples from `series` at random origins.
inline SampleBatch random_batch(ModelKind kind, const NeuralConfig& cfg, const Vocab& vocab,
                                const std::vector<ODSeries>& series, std::size_t n, std::mt19937_64& rng) {
	std::vector<Sample> samples;
	const auto L = std::size_t(cfg.lookback);
	for (std::size_t i = 0; i < n; ++i) {
		const auto& s = series[rng() % series.size()];
		std::size_t origin = L + rng() % (s.size() - L - std::size_t(cfg.horizon));
		samples.push_back({&s, origin, profile_of(s.values)});
	}
	return make_batch(kind, cfg, vocab, samples);
}

} // namespace fixtures
