#include "odcast/synthetic.hpp"

#include "odcast/error.hpp"
#include "odcast/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace odcast {

void SyntheticConfig::validate() const {
	if (n_ods <= 0 || n_days <= 0)
		throw ConfigError("n_ods and n_days must be positive");
	if (!(base_level_spread > 0))
		throw ConfigError("base_level_spread must be positive");
	auto unit = [](double v) { return v >= 0.0 && v <= 1.0; };
	if (!unit(weekly_amp) || !unit(yearly_amp) || !unit(zero_inflation_tail))
		throw ConfigError("weekly_amp, yearly_amp and zero_inflation_tail must lie in [0, 1]");
	if (!(noise_cv >= 0))
		throw ConfigError("noise_cv must be non-negative");
	for (const auto& ev : event_spec) {
		if (!(ev.multiplier > 0))
			throw ConfigError("event multiplier must be positive");
		if (ev.half_width < 0)
			throw ConfigError("event half width must be non-negative");
	}
	if (std::int64_t(n_ods) > std::int64_t(26 * 26 * 26) * (26 * 26 * 26 - 1))
		throw ConfigError("too many ODs");
}

std::string synthetic_station(int i) {
	constexpr int kCodes = 26 * 26 * 26;
	int v = int((std::int64_t(i) * 677 + 1009) % kCodes);
	std::string code(3, 'A');
	for (int k = 2; k >= 0; --k) {
		code[std::size_t(k)] = char('A' + v % 26);
		v /= 26;
	}
	return code;
}

ODKey synthetic_od(int i, int n_ods) {
	int stations = 2;
	while (stations * (stations - 1) < n_ods)
		++stations;
	int origin = i / (stations - 1);
	int dest = i % (stations - 1);
	if (dest >= origin)
		++dest;
	return ODKey(synthetic_station(origin), synthetic_station(dest));
}

double synthetic_mean(const SyntheticConfig& cfg, double base, Date date) {
	constexpr double two_pi = 2.0 * std::numbers::pi;
	double m = base * (1.0 + cfg.weekly_amp * std::sin(two_pi * date.day_of_week() / 7.0)) *
	           (1.0 + cfg.yearly_amp * std::sin(two_pi * date.day_of_year() / 365.25));
	for (const auto& ev : cfg.event_spec)
		if (std::abs(date.day_of_year() - ev.day_of_year) <= ev.half_width)
			m *= ev.multiplier;
	return m;
}

PanelDataset generate_synthetic(const SyntheticConfig& cfg) {
	cfg.validate();
	const auto n = std::size_t(cfg.n_ods);

	// Each OD owns a substream; its first draws fix base level and revenue rate.
	std::vector<Rng> streams;
	std::vector<double> base(n), rate(n);
	streams.reserve(n);
	for (std::size_t i = 0; i < n; ++i) {
		streams.emplace_back(substream(cfg.seed, std::uint64_t(i)));
		std::lognormal_distribution<double> level(std::log(100.0), cfg.base_level_spread);
		std::uniform_real_distribution<double> price(1.0, 5.0);
		base[i] = level(streams[i]);
		rate[i] = price(streams[i]);
	}

	std::vector<std::size_t> order(n);
	std::iota(order.begin(), order.end(), 0);
	std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return base[a] < base[b]; });
	std::vector<bool> sparse(n, false);
	auto n_sparse = std::size_t(std::llround(cfg.zero_inflation_tail * double(n)));
	for (std::size_t k = 0; k < n_sparse && k < n; ++k)
		sparse[order[k]] = true;

	std::vector<DemandRecord> records;
	records.reserve(n * std::size_t(cfg.n_days));
	for (std::size_t i = 0; i < n; ++i) {
		ODKey od = synthetic_od(int(i), cfg.n_ods);
		std::normal_distribution<double> noise(0.0, 1.0);
		std::bernoulli_distribution zeroed(0.6);
		auto& rng = streams[i];
		for (int t = 0; t < cfg.n_days; ++t) {
			Date d = kSyntheticStart + t;
			double mean = synthetic_mean(cfg, base[i], d);
			double eps = noise(rng);
			double w = std::max(0.0, mean * (1.0 + cfg.noise_cv * eps));
			if (sparse[i] && zeroed(rng))
				w = 0.0;
			records.push_back({od, d, w, w * rate[i]});
		}
	}
	return PanelDataset(std::move(records), DateRange{kSyntheticStart, kSyntheticStart + (cfg.n_days - 1)});
}

} // namespace odcast
