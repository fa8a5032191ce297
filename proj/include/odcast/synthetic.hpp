#pragma once

#include "odcast/data.hpp"

#include <cstdint>
#include <vector>

namespace odcast {

/// First day of every synthetic panel (a Monday).
inline const Date kSyntheticStart = Date::from_ymd(2020, 1, 6);

struct SyntheticConfig {
	int n_ods = 200;
	int n_days = 1456;
	double base_level_spread = 1.0; // log-scale std of per-OD mean demand
	double weekly_amp = 0.3;
	double yearly_amp = 0.2;
	std::vector<CalendarEvent> event_spec;
	double zero_inflation_tail = 0.1;
	double noise_cv = 0.2;
	std::uint64_t seed = 7;

	/// Throws ConfigError on out-of-range fields.
	void validate() const;
};

/// Station code for station index `i` (bijective over [0, 26^3)).
std::string synthetic_station(int i);
/// OD key assigned to OD index `i` of an `n_ods` network.
ODKey synthetic_od(int i, int n_ods);

/// Noise-free daily mean of OD with base level `base` on `date`.
double synthetic_mean(const SyntheticConfig& cfg, double base, Date date);

/// Seeded cargo panel: one record per (OD, day) from kSyntheticStart.
PanelDataset generate_synthetic(const SyntheticConfig& cfg);

} // namespace odcast
