#pragma once

#include "odcast/neural.hpp"

#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace odcast::meta {

enum class OuterOptimizer { Adam, Sgd };

struct MetaConfig {
	double alpha = 0.01; // inner step size
	double beta = 1e-3;  // outer step size
	int inner_steps = 3;
	int meta_batch = 8;
	int meta_iters = 500;
	int finetune_steps = 5;
	std::uint64_t seed = 0;
	OuterOptimizer outer = OuterOptimizer::Adam;

	/// Throws ConfigError unless alpha, beta > 0 and the counts are >= 1.
	void validate() const;
};

/// Loss of one data set at `params`; writes the gradient into `grad`.
using LossGrad = std::function<double(const ad::ParamStore& params, ad::ParamStore& grad)>;

struct MetaTask {
	std::string name;
	LossGrad support;
	LossGrad query;
};

/// `steps` full-batch gradient steps on a copy of `theta`. alpha = 0 returns
/// the copy unchanged. Throws NumericError naming the task on a non-finite loss.
ad::ParamStore inner_adapt(const ad::ParamStore& theta, const LossGrad& support, double alpha, int steps,
                           const std::string& task = "");

/// First-order outer gradient: the sum over tasks of the query gradient at
/// each task's adapted parameters (summed in task order).
ad::ParamStore outer_gradient(const ad::ParamStore& theta, std::span<const MetaTask> tasks, const MetaConfig& cfg,
                              double* query_loss = nullptr);

struct MetaTrace {
	std::vector<double> query_loss; // mean query loss per outer iteration
	std::vector<ODKey> skipped;     // series without a usable episode
};

/// Runs cfg.meta_iters outer iterations; `sampler` supplies each iteration's
/// task batch. Deterministic given the sampler and cfg.seed.
ad::ParamStore meta_train(const ad::ParamStore& init, const std::function<std::vector<MetaTask>(Rng&)>& sampler,
                          const MetaConfig& cfg, MetaTrace* trace = nullptr);

// ---------------------------------------------------------------------------
// Episodes over OD series

struct TaskEpisode {
	ODKey od;
	std::vector<nn::Sample> support;
	std::vector<nn::Sample> query;
	DateRange support_dates; // target days covered by the support samples
	DateRange query_dates;
};

/// Episode for one training series: targets in the first 80% of its days form
/// the support pool, the last 20% the query pool; each pool is subsampled to
/// at most cfg.batch samples. nullopt when either pool is empty or the series
/// has zero mean.
std::optional<TaskEpisode> make_episode(nn::ModelKind kind, const nn::NeuralConfig& cfg, const ODSeries& series,
                                        Rng& rng);

/// Uniform sample without replacement of `meta_batch` eligible series.
/// Throws InsufficientHistory when fewer are eligible.
std::vector<TaskEpisode> sample_tasks(nn::ModelKind kind, const nn::NeuralConfig& cfg,
                                      std::span<const ODSeries> series, int meta_batch, Rng& rng);

/// Loss/gradient closure over a fixed sample list.
LossGrad sample_loss(const nn::NeuralModel& model, std::vector<nn::Sample> samples);

MetaTask episode_task(const nn::NeuralModel& model, const TaskEpisode& episode);

/// Meta-trains `model.params` in place over the given training series.
void meta_train_model(nn::NeuralModel& model, std::span<const ODSeries> series, const MetaConfig& cfg,
                      MetaTrace* trace = nullptr);

/// Samples whose targets are the last 28 days of `history`.
std::vector<nn::Sample> finetune_samples(const nn::NeuralModel& model, const ODSeries& history);

struct FinetuneTrace {
	double loss_before = 0.0;
	double loss_after = 0.0;
};

/// Adapts a copy of `model.params` on the most recent 28 days of `history`
/// for cfg.finetune_steps steps, then forecasts `horizon` days.
std::vector<double> finetune_and_predict(const nn::NeuralModel& model, const ODSeries& history,
                                         const MetaConfig& cfg, int horizon, FinetuneTrace* trace = nullptr);

/// Neural checkpoint preceded by one JSON line holding the MetaConfig.
void save_meta_checkpoint(const nn::NeuralModel& model, const MetaConfig& cfg, std::ostream& out);
std::pair<nn::NeuralModel, MetaConfig> load_meta_checkpoint(std::istream& in);

} // namespace odcast::meta
