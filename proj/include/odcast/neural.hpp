#pragma once

#include "odcast/autodiff.hpp"
#include "odcast/data.hpp"
#include "odcast/rng.hpp"

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace odcast::nn {

enum class ModelKind { DnnLadd, NBeats, Tft };

const char* kind_name(ModelKind kind);
/// "dnn_ladd", "nbeats" or "tft"; throws InvalidArgument otherwise.
ModelKind parse_kind(const std::string& name);

struct NeuralConfig {
	int hidden_dim = 64;
	int embed_dim = 8;
	int ladd_window = 7; // W: the LADD sequence spans 2W+1 days
	int lookback = 84;   // L
	int n_blocks = 2;
	int n_stacks = 2;
	int n_heads = 2;
	double dropout = 0.0;
	double lr = 1e-3;
	int epochs = 50;
	int batch = 64;
	int steps_per_epoch = 0; // 0 = one pass over the training samples
	int horizon = 28;        // days produced per model call
	std::uint64_t seed = 0;
	FeatureConfig features;

	/// Throws ConfigError on non-positive sizes or n_heads not dividing hidden_dim.
	void validate() const;
	std::size_t feature_width() const { return features.width(); }
	/// Width of the label row: 1 for DNN-LADD, `horizon` otherwise.
	std::size_t output_width(ModelKind kind) const;
};

/// Station codes seen in training; id 0 is reserved for unknown stations.
class Vocab {
public:
	Vocab() = default;
	explicit Vocab(std::vector<std::string> stations);
	int id(const std::string& station) const;
	std::size_t size() const { return stations_.size() + 1; }
	const std::vector<std::string>& stations() const { return stations_; }
	friend bool operator==(const Vocab&, const Vocab&) = default;

private:
	std::vector<std::string> stations_; // sorted
};

Vocab build_vocab(std::span<const ODSeries> series);

/// Statistics of the observed history used for scaling and as dense inputs.
struct SeriesProfile {
	double scale = 0.0; // mean of the history; targets are divided by it
	double zero_fraction = 0.0;
	double cv = 0.0;
};
constexpr std::size_t kDenseWidth = 3;

SeriesProfile profile_of(std::span<const double> history);

/// One forecasting instance: predict series values from index `origin` on,
/// seeing only values before it.
struct Sample {
	const ODSeries* series = nullptr;
	std::size_t origin = 0;
	SeriesProfile profile;
};

struct SampleBatch {
	std::size_t size = 0;
	ad::Tensor history;         // [B, L] scaled targets before the origin
	ad::Tensor ladd;            // [B, 2W+1, F] around the origin date
	std::vector<int> origin_id, destination_id, month, dow;
	ad::Tensor dense;           // [B, kDenseWidth]
	ad::Tensor past_features;   // [B, L, F]
	ad::Tensor future_features; // [B, H, F]
	ad::Tensor label;           // [B, output_width]; zero beyond the data
};

SampleBatch make_batch(ModelKind kind, const NeuralConfig& cfg, const Vocab& vocab, std::span<const Sample> samples);

/// Training mode: dropout is active only when `rng` is set.
struct ForwardMode {
	Rng* rng = nullptr;
};

/// [B, 1] next-day predictions; no target history enters the network.
ad::Var dnn_ladd_forward(ad::Graph& g, const SampleBatch& batch, const NeuralConfig& cfg, ForwardMode mode = {});

struct NBeatsOutput {
	ad::Var forecast;            // [B, H]
	std::vector<ad::Var> blocks; // per-block forecasts, forecast = their sum
};
NBeatsOutput nbeats_forward(ad::Graph& g, const SampleBatch& batch, const NeuralConfig& cfg, ForwardMode mode = {});

/// [B, H] forecasts; decoder positions attend causally.
ad::Var tft_forward(ad::Graph& g, const SampleBatch& batch, const NeuralConfig& cfg, ForwardMode mode = {});

ad::Var forward(ModelKind kind, ad::Graph& g, const SampleBatch& batch, const NeuralConfig& cfg,
                ForwardMode mode = {});
/// Mean squared error against the scaled labels.
ad::Var batch_loss(ModelKind kind, ad::Graph& g, const SampleBatch& batch, const NeuralConfig& cfg,
                   ForwardMode mode = {});

/// Glorot-uniform weights and embeddings, zero biases, LSTM forget-gate bias 1.
ad::ParamStore init_params(ModelKind kind, const NeuralConfig& cfg, std::size_t vocab_size, std::uint64_t seed);

struct NeuralModel {
	ModelKind kind = ModelKind::DnnLadd;
	NeuralConfig cfg;
	Vocab vocab;
	ad::ParamStore params;
};

/// Every forecastable origin of each series (training data only).
/// Zero-mean series are skipped and reported through `excluded`.
std::vector<Sample> training_samples(ModelKind kind, const NeuralConfig& cfg, std::span<const ODSeries> series,
                                     std::vector<ODKey>* excluded = nullptr);

struct TrainReport {
	std::vector<double> epoch_loss; // mean minibatch loss per epoch
	std::size_t n_samples = 0;
	std::vector<ODKey> excluded;
};

/// Minibatch Adam on scaled MSE. Each series holds training data only.
/// Throws InsufficientHistory when no series yields a sample.
NeuralModel train_model(ModelKind kind, std::span<const ODSeries> series, const NeuralConfig& cfg,
                        TrainReport* report = nullptr);
/// Continues training `model` in place from its current parameters.
void train_params(NeuralModel& model, std::span<const ODSeries> series, TrainReport* report = nullptr);
/// Training loop over an explicit sample list.
void train_on_samples(NeuralModel& model, std::span<const Sample> samples, TrainReport* report = nullptr);

/// Daily forecast for the `horizon` days after the end of `history`,
/// unscaled and clamped at zero. Throws InsufficientHistory when the history
/// is shorter than the lookback or has zero mean.
std::vector<double> predict_series(const NeuralModel& model, const ad::ParamStore& params, const ODSeries& history,
                                   int horizon);
inline std::vector<double> predict_series(const NeuralModel& model, const ODSeries& history, int horizon) {
	return predict_series(model, model.params, history, horizon);
}

/// Checkpoint: one JSON line with the config and vocabulary, then the
/// parameter store.
void save_checkpoint(const NeuralModel& model, std::ostream& out);
NeuralModel load_checkpoint(std::istream& in);

} // namespace odcast::nn
