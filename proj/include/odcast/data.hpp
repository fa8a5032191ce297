#pragma once

#include "odcast/date.hpp"

#include <compare>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace odcast {

/// Origin-destination pair of 3-letter uppercase station codes.
class ODKey {
public:
	ODKey() = default;
	/// Throws InvalidArgument unless both codes match [A-Z]{3} and differ.
	ODKey(std::string origin, std::string destination);

	const std::string& origin() const { return origin_; }
	const std::string& destination() const { return destination_; }
	std::string to_string() const { return origin_ + "-" + destination_; }

	friend auto operator<=>(const ODKey&, const ODKey&) = default;
	friend bool operator==(const ODKey&, const ODKey&) = default;

private:
	std::string origin_;
	std::string destination_;
};

bool is_station_code(const std::string& code);

struct DemandRecord {
	ODKey od;
	Date departure_date;
	double weight_kg = 0.0;
	double revenue = 0.0;
};

/// Immutable panel of demand records, at most one per (od, date).
class PanelDataset {
public:
	PanelDataset() = default;
	/// Validates records (finite, non-negative, unique keys). When `span` is
	/// given it must cover every record; otherwise it is the record date hull.
	explicit PanelDataset(std::vector<DemandRecord> records, std::optional<DateRange> span = std::nullopt);

	const DateRange& span() const { return span_; }
	Date date_min() const { return span_.first; }
	Date date_max() const { return span_.last; }

	std::vector<ODKey> ods() const;
	std::size_t num_ods() const { return by_od_.size(); }
	std::size_t num_records() const { return count_; }
	bool contains(const ODKey& od) const { return by_od_.count(od) != 0; }

	/// Records of one OD in date order. Throws NotFound for unknown ODs.
	std::span<const DemandRecord> records(const ODKey& od) const;
	/// All records ordered by (od, date).
	std::vector<DemandRecord> all_records() const;

	double weight_in(const ODKey& od, const DateRange& window) const;
	double revenue_in(const ODKey& od, const DateRange& window) const;

	friend bool operator==(const PanelDataset& a, const PanelDataset& b);

private:
	std::map<ODKey, std::vector<DemandRecord>> by_od_;
	DateRange span_{};
	std::size_t count_ = 0;
};

/// Reads the bookings CSV (`origin,destination,departure_date,weight_kg,revenue`).
/// Rows sharing an (od, date) key are summed.
PanelDataset ingest_bookings(const std::filesystem::path& path);
PanelDataset parse_bookings(std::istream& in);
/// Writes every record with round-trip precision.
void write_bookings(const PanelDataset& ds, std::ostream& out);
void write_bookings(const PanelDataset& ds, const std::filesystem::path& path);

/// Calendar event used both by the feature builder and the synthetic generator.
struct CalendarEvent {
	int day_of_year = 1;
	double multiplier = 1.0;
	int half_width = 0;
};

struct FeatureConfig {
	int yearly_harmonics = 3;
	int weekly_harmonics = 2;
	std::vector<CalendarEvent> events;

	std::size_t width() const { return std::size_t(2 * yearly_harmonics + 2 * weekly_harmonics) + events.size(); }
};

/// Harmonic day-of-year and day-of-week encodings followed by 0/1 event
/// proximity flags.
std::vector<double> build_features(Date date, const FeatureConfig& cfg);
/// build_features for every day of [date - half_width, date + half_width].
std::vector<std::vector<double>> ladd_window(Date date, int half_width, const FeatureConfig& cfg);

/// One OD on a gap-free daily grid. Absent days are zero demand.
struct ODSeries {
	ODKey od;
	Date start_date;
	std::vector<double> values;
	/// Row-major [values.size() x feature_width].
	std::vector<double> features;
	std::size_t feature_width = 0;

	std::size_t size() const { return values.size(); }
	Date end_date() const { return start_date + long(values.size()) - 1; }
	DateRange range() const { return {start_date, end_date()}; }
	/// Index of `d`; d must lie inside the series.
	std::size_t index_of(Date d) const;
	std::span<const double> feature_row(std::size_t i) const {
		return {features.data() + i * feature_width, feature_width};
	}
	/// Values from the start through `last` inclusive (clipped to the series).
	std::span<const double> history_through(Date last) const;
};

/// Throws NotFound if `od` is absent and InvalidArgument if `range` does not
/// intersect the dataset span.
ODSeries regularize(const PanelDataset& ds, const ODKey& od, const DateRange& range,
                    const FeatureConfig& features = {});

struct SplitSpec {
	Date train_end;
	Date valid_end;
	Date test_end;

	/// Throws ConfigError unless train_end < valid_end <= test_end.
	void validate() const;
	/// The year that ends at train_end; used for clustering and revenue shares.
	DateRange reference_window() const { return {train_end - 364, train_end}; }
	DateRange validation() const { return {train_end + 1, valid_end}; }
	DateRange test() const { return {valid_end + 1, test_end}; }
};

enum class RankCluster { Top100, R101_500, R501_1000, Above1001 };

const char* cluster_name(RankCluster c);

struct ClusterLabel {
	RankCluster cluster = RankCluster::Top100;
	bool in_significant_cluster = false;
	std::size_t rank = 0; // 1-based weight rank
};

/// Smallest revenue-ranked prefix of ODs whose cumulative revenue share in
/// `window` reaches `share`. Ties are broken by ODKey order.
std::set<ODKey> significant_cluster(const PanelDataset& ds, const DateRange& window, double share = 0.9);

/// Weight-rank buckets (1-100, 101-500, 501-1000, rest) plus significant-cluster
/// membership.
std::map<ODKey, ClusterLabel> rank_clusters(const PanelDataset& ds, const DateRange& window, double share = 0.9);

using DailyPanel = std::map<std::pair<ODKey, Date>, double>;
using WeeklyPanel = std::map<std::pair<ODKey, Date>, double>;

/// Sums daily values into ISO weeks keyed by their Monday.
WeeklyPanel weekly_aggregate(const DailyPanel& daily);

/// Single-series variant: daily values starting at `start` summed per ISO week,
/// returned in week order.
std::vector<std::pair<Date, double>> weekly_sums(Date start, std::span<const double> daily);

} // namespace odcast
