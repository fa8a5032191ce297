#include "odcast/meta.hpp"

#include "odcast/error.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <memory>
#include <numeric>
#include <ostream>

namespace odcast::meta {

using ad::ParamStore;

void MetaConfig::validate() const {
	if (!(alpha > 0.0) || !std::isfinite(alpha))
		throw ConfigError("meta.alpha must be positive");
	if (!(beta > 0.0) || !std::isfinite(beta))
		throw ConfigError("meta.beta must be positive");
	if (inner_steps < 1)
		throw ConfigError("meta.inner_steps must be at least 1");
	if (finetune_steps < 1)
		throw ConfigError("meta.finetune_steps must be at least 1");
	if (meta_batch < 1)
		throw ConfigError("meta.meta_batch must be at least 1");
	if (meta_iters < 0)
		throw ConfigError("meta.meta_iters must be non-negative");
}

ParamStore inner_adapt(const ParamStore& theta, const LossGrad& support, double alpha, int steps,
                       const std::string& task) {
	if (!(alpha >= 0.0) || steps < 0)
		throw InvalidArgument("inner_adapt: alpha and steps must be non-negative");
	ParamStore adapted = theta;
	if (alpha == 0.0)
		return adapted;
	for (int s = 0; s < steps; ++s) {
		ParamStore grad;
		double loss;
		try {
			loss = support(adapted, grad);
		} catch (const NumericError& e) {
			throw NumericError("task " + task + ": " + e.what());
		}
		if (!std::isfinite(loss))
			throw NumericError("task " + task + ": non-finite support loss");
		adapted = ad::sgd_step(adapted, grad, alpha);
	}
	return adapted;
}

ParamStore outer_gradient(const ParamStore& theta, std::span<const MetaTask> tasks, const MetaConfig& cfg,
                          double* query_loss) {
	ParamStore total = theta.zeros_like();
	double loss_sum = 0.0;
	for (const auto& task : tasks) {
		ParamStore adapted = inner_adapt(theta, task.support, cfg.alpha, cfg.inner_steps, task.name);
		ParamStore grad;
		const double q = task.query(adapted, grad);
		if (!std::isfinite(q))
			throw NumericError("task " + task.name + ": non-finite query loss");
		total = ad::add(total, grad);
		loss_sum += q;
	}
	if (query_loss)
		*query_loss = tasks.empty() ? 0.0 : loss_sum / double(tasks.size());
	return total;
}

ParamStore meta_train(const ParamStore& init, const std::function<std::vector<MetaTask>(Rng&)>& sampler,
                      const MetaConfig& cfg, MetaTrace* trace) {
	if (!(cfg.beta >= 0.0) || cfg.meta_iters < 0)
		throw InvalidArgument("meta_train: beta and meta_iters must be non-negative");
	Rng rng(substream(cfg.seed, "meta-sampling"));
	ParamStore theta = init;
	ad::AdamState adam;
	ad::AdamOptions opt;
	opt.lr = cfg.beta;
	for (int it = 0; it < cfg.meta_iters; ++it) {
		std::vector<MetaTask> tasks = sampler(rng);
		if (tasks.empty())
			throw InsufficientHistory("meta_train: the task sampler returned no tasks");
		double q = 0.0;
		ParamStore grad = outer_gradient(theta, tasks, cfg, &q);
		if (trace)
			trace->query_loss.push_back(q);
		if (cfg.beta == 0.0)
			continue;
		theta = cfg.outer == OuterOptimizer::Adam ? ad::adam_step(adam, theta, grad, opt)
		                                          : ad::sgd_step(theta, grad, cfg.beta);
	}
	return theta;
}

// ---------------------------------------------------------------------------
// Episodes

namespace {

struct Pools {
	std::size_t support_lo = 0, support_hi = 0; // origin ranges, inclusive
	std::size_t query_lo = 0, query_hi = 0;
};

std::optional<Pools> episode_pools(nn::ModelKind kind, const nn::NeuralConfig& cfg, const ODSeries& s) {
	const auto L = std::size_t(cfg.lookback);
	const std::size_t span = cfg.output_width(kind);
	const std::size_t n = s.size();
	const auto cut = std::size_t(std::floor(0.8 * double(n)));
	if (cut < L + span || n < std::max(L, cut) + span)
		return std::nullopt;
	if (!(nn::profile_of(s.values).scale > 0.0))
		return std::nullopt;
	return Pools{L, cut - span, std::max(L, cut), n - span};
}

std::vector<nn::Sample> subsample(const ODSeries& s, std::size_t lo, std::size_t hi, std::size_t cap,
                                  const nn::SeriesProfile& prof, Rng& rng) {
	std::vector<std::size_t> origins(hi - lo + 1);
	std::iota(origins.begin(), origins.end(), lo);
	if (origins.size() > cap) {
		std::shuffle(origins.begin(), origins.end(), rng);
		origins.resize(cap);
		std::sort(origins.begin(), origins.end());
	}
	std::vector<nn::Sample> out;
	for (auto o : origins)
		out.push_back({&s, o, prof});
	return out;
}

DateRange target_dates(const std::vector<nn::Sample>& samples, std::size_t span) {
	const ODSeries& s = *samples.front().series;
	return {s.start_date + long(samples.front().origin), s.start_date + long(samples.back().origin + span) - 1};
}

} // namespace

std::optional<TaskEpisode> make_episode(nn::ModelKind kind, const nn::NeuralConfig& cfg, const ODSeries& series,
                                        Rng& rng) {
	auto pools = episode_pools(kind, cfg, series);
	if (!pools)
		return std::nullopt;
	const auto prof = nn::profile_of(series.values);
	const auto cap = std::size_t(cfg.batch);
	const std::size_t span = cfg.output_width(kind);
	TaskEpisode ep;
	ep.od = series.od;
	ep.support = subsample(series, pools->support_lo, pools->support_hi, cap, prof, rng);
	ep.query = subsample(series, pools->query_lo, pools->query_hi, cap, prof, rng);
	ep.support_dates = target_dates(ep.support, span);
	ep.query_dates = target_dates(ep.query, span);
	return ep;
}

std::vector<TaskEpisode> sample_tasks(nn::ModelKind kind, const nn::NeuralConfig& cfg,
                                      std::span<const ODSeries> series, int meta_batch, Rng& rng) {
	if (meta_batch < 1)
		throw InvalidArgument("sample_tasks: meta_batch must be at least 1");
	std::vector<std::size_t> eligible;
	for (std::size_t i = 0; i < series.size(); ++i)
		if (episode_pools(kind, cfg, series[i]))
			eligible.push_back(i);
	if (eligible.size() < std::size_t(meta_batch))
		throw InsufficientHistory("sample_tasks: " + std::to_string(eligible.size()) +
		                          " eligible series for a meta batch of " + std::to_string(meta_batch));
	std::shuffle(eligible.begin(), eligible.end(), rng);
	eligible.resize(std::size_t(meta_batch));
	std::sort(eligible.begin(), eligible.end());
	std::vector<TaskEpisode> out;
	for (auto i : eligible)
		out.push_back(*make_episode(kind, cfg, series[i], rng));
	return out;
}

LossGrad sample_loss(const nn::NeuralModel& model, std::vector<nn::Sample> samples) {
	if (samples.empty())
		throw InvalidArgument("sample_loss: empty sample set");
	auto batch = std::make_shared<const nn::SampleBatch>(nn::make_batch(model.kind, model.cfg, model.vocab, samples));
	const nn::ModelKind kind = model.kind;
	const nn::NeuralConfig cfg = model.cfg;
	return [batch, kind, cfg](const ParamStore& params, ParamStore& grad) {
		ad::Graph g(params);
		ad::Var loss = nn::batch_loss(kind, g, *batch, cfg);
		ad::backward(loss);
		grad = g.gradients();
		return loss.value()[0];
	};
}

MetaTask episode_task(const nn::NeuralModel& model, const TaskEpisode& episode) {
	return {episode.od.to_string(), sample_loss(model, episode.support), sample_loss(model, episode.query)};
}

void meta_train_model(nn::NeuralModel& model, std::span<const ODSeries> series, const MetaConfig& cfg,
                      MetaTrace* trace) {
	model.cfg.validate();
	std::size_t n_eligible = 0;
	for (const auto& s : series) {
		if (episode_pools(model.kind, model.cfg, s))
			++n_eligible;
		else if (trace)
			trace->skipped.push_back(s.od);
	}
	if (n_eligible == 0)
		throw InsufficientHistory(std::string("meta-training ") + nn::kind_name(model.kind) +
		                          ": no series supports a support/query episode");
	const int batch = int(std::min<std::size_t>(std::size_t(std::max(cfg.meta_batch, 1)), n_eligible));
	const nn::NeuralModel& m = model;
	auto sampler = [&](Rng& rng) {
		std::vector<MetaTask> tasks;
		for (const auto& ep : sample_tasks(m.kind, m.cfg, series, batch, rng))
			tasks.push_back(episode_task(m, ep));
		return tasks;
	};
	model.params = meta_train(model.params, sampler, cfg, trace);
}

std::vector<nn::Sample> finetune_samples(const nn::NeuralModel& model, const ODSeries& history) {
	constexpr std::size_t kRecentDays = 28;
	const auto L = std::size_t(model.cfg.lookback);
	const std::size_t span = model.cfg.output_width(model.kind);
	const std::size_t n = history.size();
	const auto prof = nn::profile_of(history.values);
	if (n < L + span || !(prof.scale > 0.0))
		throw InsufficientHistory(std::string("fine-tuning ") + nn::kind_name(model.kind) + " on " +
		                          history.od.to_string() + ": not enough non-zero history");
	const std::size_t hi = n - span;
	const std::size_t lo = std::min(hi, std::max(L, n > kRecentDays ? n - kRecentDays : 0));
	std::vector<nn::Sample> out;
	for (std::size_t o = lo; o <= hi; ++o)
		out.push_back({&history, o, prof});
	return out;
}

std::vector<double> finetune_and_predict(const nn::NeuralModel& model, const ODSeries& history,
                                         const MetaConfig& cfg, int horizon, FinetuneTrace* trace) {
	auto samples = finetune_samples(model, history);
	if (cfg.alpha == 0.0 || cfg.finetune_steps == 0)
		return nn::predict_series(model, model.params, history, horizon);
	LossGrad loss = sample_loss(model, std::move(samples));
	ParamStore adapted = inner_adapt(model.params, loss, cfg.alpha, cfg.finetune_steps, history.od.to_string());
	if (trace) {
		ParamStore scratch;
		trace->loss_before = loss(model.params, scratch);
		trace->loss_after = loss(adapted, scratch);
	}
	return nn::predict_series(model, adapted, history, horizon);
}

// ---------------------------------------------------------------------------
// Checkpoints

void save_meta_checkpoint(const nn::NeuralModel& model, const MetaConfig& cfg, std::ostream& out) {
	nlohmann::json j = {{"meta",
	                     {{"alpha", cfg.alpha},
	                      {"beta", cfg.beta},
	                      {"inner_steps", cfg.inner_steps},
	                      {"meta_batch", cfg.meta_batch},
	                      {"meta_iters", cfg.meta_iters},
	                      {"finetune_steps", cfg.finetune_steps},
	                      {"seed", cfg.seed},
	                      {"outer", cfg.outer == OuterOptimizer::Adam ? "adam" : "sgd"}}}};
	out << j.dump() << '\n';
	nn::save_checkpoint(model, out);
}

std::pair<nn::NeuralModel, MetaConfig> load_meta_checkpoint(std::istream& in) {
	std::string line;
	if (!std::getline(in, line))
		throw ParseError("meta checkpoint: missing header");
	MetaConfig cfg;
	try {
		const auto j = nlohmann::json::parse(line).at("meta");
		cfg.alpha = j.at("alpha");
		cfg.beta = j.at("beta");
		cfg.inner_steps = j.at("inner_steps");
		cfg.meta_batch = j.at("meta_batch");
		cfg.meta_iters = j.at("meta_iters");
		cfg.finetune_steps = j.at("finetune_steps");
		cfg.seed = j.at("seed");
		const auto outer = j.at("outer").get<std::string>();
		if (outer != "adam" && outer != "sgd")
			throw ParseError("meta checkpoint: unknown outer optimizer " + outer);
		cfg.outer = outer == "adam" ? OuterOptimizer::Adam : OuterOptimizer::Sgd;
	} catch (const nlohmann::json::exception& e) {
		throw ParseError(std::string("meta checkpoint header: ") + e.what());
	}
	cfg.validate();
	return {nn::load_checkpoint(in), cfg};
}

} // namespace odcast::meta
