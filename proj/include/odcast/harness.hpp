#pragma once

#include "odcast/data.hpp"
#include "odcast/meta.hpp"
#include "odcast/moe.hpp"
#include "odcast/synthetic.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace odcast::harness {

/// Backtest description. In the config file the keys are exactly the field
/// names below; `data_path` and `synthetic` are mutually exclusive.
struct RunConfig {
	std::optional<std::filesystem::path> data_path;
	SyntheticConfig synthetic;
	SplitSpec split;
	moe::PoolConfig pool;
	int horizon_weeks = 26;
	double significant_share = 0.9;
	std::uint64_t seed = 7;
	std::filesystem::path output_dir = "run";

	/// Throws ConfigError on inconsistent fields or a missing data file.
	void validate() const;
	/// First and last day of the test window (valid_end + 7 * horizon_weeks).
	DateRange test_window() const;
};

/// Default experiment: 200 synthetic ODs from 2020-01-06 over 1456 days,
/// 26-week validation and test windows, the full statistical pool.
RunConfig default_run_config();

/// Parses JSON text; absent keys keep the defaults. Per-model seeds and the
/// synthetic and meta seeds are derived from `seed` through named substreams.
RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::filesystem::path& path);
/// Fully resolved config as pretty-printed JSON (parse_run_config round-trips it).
std::string run_config_json(const RunConfig& cfg);

/// Every statistical model plus, when `neural` is set, each architecture
/// with and without meta-learning at the desk-scale defaults.
std::vector<moe::PoolEntry> default_pool(bool neural);

/// Synthetic panel from the config (seeded from the master seed).
PanelDataset generate_dataset(const RunConfig& cfg);
/// Loads `data_path` or generates the synthetic panel.
PanelDataset load_dataset(const RunConfig& cfg);

void cmd_generate(const RunConfig& cfg, const std::filesystem::path& out_csv);

struct ModelRow {
	std::string model; // ModelId string, or "moe"
	std::string type;  // Stat, Benchmark, ML, MoE
	std::optional<double> win_ratio;
	std::optional<double> nrmse;
	std::optional<double> wnrmse;
};

struct BenchmarkRow {
	std::string group;
	std::optional<double> vs_statistical;
	std::optional<double> vs_benchmark;
};

struct BacktestSummary {
	std::vector<ModelRow> validation_rows; // same layout on the validation window
	std::vector<ModelRow> test_rows;
	std::vector<ClusterRow> clusters;
	std::vector<BenchmarkRow> benchmark;
	std::optional<double> moe_beats_yoy; // share of significant ODs, test nRMSE
	std::size_t n_ods = 0;
	std::size_t n_significant = 0;
	std::vector<std::string> substitutions;
	std::vector<std::string> excluded; // "OD: reason"
};

using LogFn = std::function<void(const std::string&)>;

/// Full pipeline: train on the train split, score the validation window,
/// select experts, forecast the test window, and write the run artifacts
/// into `out_dir`. Errors name the failing model and OD.
BacktestSummary cmd_backtest(const RunConfig& cfg, const std::filesystem::path& out_dir, const LogFn& log = {});

/// Files every complete run directory holds.
const std::vector<std::string>& run_artifacts();

/// Renders the three report tables from a run directory. Throws NotFound
/// naming the first missing artifact.
std::string cmd_report(const std::filesystem::path& run_dir);

} // namespace odcast::harness
