#include "odcast/harness.hpp"

#include "odcast/error.hpp"
#include "odcast/rng.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

namespace odcast::harness {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// Configuration

void RunConfig::validate() const {
	if (horizon_weeks < 1)
		throw ConfigError("horizon_weeks must be at least 1");
	if (!(significant_share > 0.0 && significant_share <= 1.0))
		throw ConfigError("significant_share must lie in (0, 1]");
	split.validate();
	if (split.test_end != split.valid_end + 7L * horizon_weeks)
		throw ConfigError("split.test_end must be valid_end + 7 * horizon_weeks (" +
		                  (split.valid_end + 7L * horizon_weeks).to_string() + ")");
	if (data_path && !fs::exists(*data_path))
		throw ConfigError("data_path does not exist: " + data_path->string());
	if (!data_path)
		synthetic.validate();
	if (pool.entries.empty())
		throw ConfigError("pool must list at least one model");
	std::set<std::string> seen;
	bool any_meta = false;
	for (const auto& e : pool.entries) {
		if (!seen.insert(e.id.to_string()).second)
			throw ConfigError("pool lists " + e.id.to_string() + " twice");
		if (e.id.is_neural())
			e.neural.validate();
		any_meta = any_meta || e.id.meta;
	}
	if (any_meta)
		pool.meta.validate();
}

DateRange RunConfig::test_window() const { return {split.valid_end + 1, split.valid_end + 7L * horizon_weeks}; }

namespace {

nn::NeuralConfig desk_neural(nn::ModelKind kind) {
	nn::NeuralConfig c;
	c.hidden_dim = 16;
	c.embed_dim = 4;
	c.ladd_window = 3;
	c.lookback = 56;
	c.n_blocks = 2;
	c.n_stacks = 1;
	c.n_heads = 2;
	c.lr = 3e-3;
	c.epochs = 8;
	c.batch = 32;
	c.steps_per_epoch = 25;
	c.horizon = 28;
	c.features.yearly_harmonics = 2;
	c.features.weekly_harmonics = 2;
	if (kind == nn::ModelKind::DnnLadd)
		c.batch = 64;
	return c;
}

} // namespace

std::vector<moe::PoolEntry> default_pool(bool neural) {
	std::vector<moe::PoolEntry> out;
	for (const auto& name : model_priority_order()) {
		ModelId id{name, false};
		if (!id.is_neural()) {
			out.push_back({id, {}, {}});
		} else if (neural) {
			const auto cfg = desk_neural(nn::parse_kind(name));
			out.push_back({id, {}, cfg});
			out.push_back({{name, true}, {}, cfg});
		}
	}
	return out;
}

RunConfig default_run_config() {
	RunConfig c;
	c.synthetic.n_ods = 200;
	c.synthetic.n_days = 1456;
	c.split.train_end = Date::from_ymd(2023, 1, 1);
	c.split.valid_end = Date::from_ymd(2023, 7, 2);
	c.split.test_end = Date::from_ymd(2023, 12, 31);
	c.pool.entries = default_pool(true);
	c.pool.meta.meta_iters = 60;
	c.pool.meta.meta_batch = 4;
	return c;
}

namespace {

void check_keys(const json& obj, std::initializer_list<const char*> allowed, const std::string& where) {
	if (!obj.is_object())
		throw ConfigError(where + " must be an object");
	for (const auto& [k, _] : obj.items()) {
		bool ok = false;
		for (const char* a : allowed)
			ok = ok || k == a;
		if (!ok)
			throw ConfigError("unknown key '" + k + "' in " + where);
	}
}

template <class T>
void read(const json& obj, const char* key, T& dst) {
	if (obj.contains(key))
		dst = obj.at(key).get<T>();
}

std::vector<CalendarEvent> read_events(const json& arr) {
	std::vector<CalendarEvent> out;
	for (const auto& e : arr) {
		check_keys(e, {"day_of_year", "multiplier", "half_width"}, "event");
		CalendarEvent ev;
		read(e, "day_of_year", ev.day_of_year);
		read(e, "multiplier", ev.multiplier);
		read(e, "half_width", ev.half_width);
		out.push_back(ev);
	}
	return out;
}

json events_json(const std::vector<CalendarEvent>& events) {
	json arr = json::array();
	for (const auto& e : events)
		arr.push_back({{"day_of_year", e.day_of_year}, {"multiplier", e.multiplier}, {"half_width", e.half_width}});
	return arr;
}

moe::PoolEntry read_entry(const json& j) {
	if (j.is_string()) {
		ModelId id = ModelId::parse(j.get<std::string>());
		moe::PoolEntry e{id, {}, {}};
		if (id.is_neural())
			e.neural = desk_neural(nn::parse_kind(id.name));
		return e;
	}
	check_keys(j,
	           {"model", "window", "season", "yoy_lag", "croston_alpha", "hidden_dim", "embed_dim", "ladd_window",
	            "lookback", "n_blocks", "n_stacks", "n_heads", "dropout", "lr", "epochs", "batch", "steps_per_epoch",
	            "horizon", "features"},
	           "pool entry");
	if (!j.contains("model"))
		throw ConfigError("pool entry needs a 'model'");
	moe::PoolEntry e{ModelId::parse(j.at("model").get<std::string>()), {}, {}};
	if (e.id.is_neural())
		e.neural = desk_neural(nn::parse_kind(e.id.name));
	read(j, "window", e.stat.window);
	read(j, "season", e.stat.season);
	read(j, "yoy_lag", e.stat.yoy_lag);
	read(j, "croston_alpha", e.stat.croston_alpha);
	auto& n = e.neural;
	read(j, "hidden_dim", n.hidden_dim);
	read(j, "embed_dim", n.embed_dim);
	read(j, "ladd_window", n.ladd_window);
	read(j, "lookback", n.lookback);
	read(j, "n_blocks", n.n_blocks);
	read(j, "n_stacks", n.n_stacks);
	read(j, "n_heads", n.n_heads);
	read(j, "dropout", n.dropout);
	read(j, "lr", n.lr);
	read(j, "epochs", n.epochs);
	read(j, "batch", n.batch);
	read(j, "steps_per_epoch", n.steps_per_epoch);
	read(j, "horizon", n.horizon);
	if (j.contains("features")) {
		const auto& f = j.at("features");
		check_keys(f, {"yearly_harmonics", "weekly_harmonics", "events"}, "features");
		read(f, "yearly_harmonics", n.features.yearly_harmonics);
		read(f, "weekly_harmonics", n.features.weekly_harmonics);
		if (f.contains("events"))
			n.features.events = read_events(f.at("events"));
	}
	return e;
}

json entry_json(const moe::PoolEntry& e) {
	json j = {{"model", e.id.to_string()}};
	if (e.id.is_neural()) {
		const auto& n = e.neural;
		j.update({{"hidden_dim", n.hidden_dim},
		          {"embed_dim", n.embed_dim},
		          {"ladd_window", n.ladd_window},
		          {"lookback", n.lookback},
		          {"n_blocks", n.n_blocks},
		          {"n_stacks", n.n_stacks},
		          {"n_heads", n.n_heads},
		          {"dropout", n.dropout},
		          {"lr", n.lr},
		          {"epochs", n.epochs},
		          {"batch", n.batch},
		          {"steps_per_epoch", n.steps_per_epoch},
		          {"horizon", n.horizon},
		          {"features",
		           {{"yearly_harmonics", n.features.yearly_harmonics},
		            {"weekly_harmonics", n.features.weekly_harmonics},
		            {"events", events_json(n.features.events)}}}});
	} else {
		j.update({{"window", e.stat.window},
		          {"season", e.stat.season},
		          {"yoy_lag", e.stat.yoy_lag},
		          {"croston_alpha", e.stat.croston_alpha}});
	}
	return j;
}

/// Copy with every derived seed filled in from the master seed.
RunConfig resolved(const RunConfig& in) {
	RunConfig c = in;
	c.synthetic.seed = substream(c.seed, "data");
	c.pool.meta.seed = substream(c.seed, "meta-sampling");
	for (auto& e : c.pool.entries)
		e.neural.seed = substream(c.seed, "init:" + e.id.to_string());
	return c;
}

} // namespace

RunConfig parse_run_config(const std::string& text) {
	RunConfig c = default_run_config();
	try {
		const json j = json::parse(text);
		check_keys(j,
		           {"data_path", "synthetic", "split", "pool", "meta", "horizon_weeks", "significant_share", "seed",
		            "output_dir"},
		           "run config");
		if (j.contains("data_path") && j.contains("synthetic"))
			throw ConfigError("data_path and synthetic are mutually exclusive");
		if (j.contains("data_path"))
			c.data_path = fs::path(j.at("data_path").get<std::string>());
		if (j.contains("synthetic")) {
			const auto& s = j.at("synthetic");
			check_keys(s,
			           {"n_ods", "n_days", "base_level_spread", "weekly_amp", "yearly_amp", "event_spec",
			            "zero_inflation_tail", "noise_cv"},
			           "synthetic");
			read(s, "n_ods", c.synthetic.n_ods);
			read(s, "n_days", c.synthetic.n_days);
			read(s, "base_level_spread", c.synthetic.base_level_spread);
			read(s, "weekly_amp", c.synthetic.weekly_amp);
			read(s, "yearly_amp", c.synthetic.yearly_amp);
			read(s, "zero_inflation_tail", c.synthetic.zero_inflation_tail);
			read(s, "noise_cv", c.synthetic.noise_cv);
			if (s.contains("event_spec"))
				c.synthetic.event_spec = read_events(s.at("event_spec"));
		}
		read(j, "horizon_weeks", c.horizon_weeks);
		read(j, "significant_share", c.significant_share);
		read(j, "seed", c.seed);
		if (j.contains("output_dir"))
			c.output_dir = j.at("output_dir").get<std::string>();
		if (j.contains("split")) {
			const auto& s = j.at("split");
			check_keys(s, {"train_end", "valid_end", "test_end"}, "split");
			if (!s.contains("train_end") || !s.contains("valid_end"))
				throw ConfigError("split needs train_end and valid_end");
			c.split.train_end = Date::parse(s.at("train_end").get<std::string>());
			c.split.valid_end = Date::parse(s.at("valid_end").get<std::string>());
			c.split.test_end = s.contains("test_end") ? Date::parse(s.at("test_end").get<std::string>())
			                                          : c.split.valid_end + 7L * c.horizon_weeks;
		} else if (j.contains("horizon_weeks")) {
			c.split.test_end = c.split.valid_end + 7L * c.horizon_weeks;
		}
		if (j.contains("pool")) {
			if (!j.at("pool").is_array())
				throw ConfigError("pool must be a list");
			c.pool.entries.clear();
			for (const auto& e : j.at("pool"))
				c.pool.entries.push_back(read_entry(e));
		}
		if (j.contains("meta")) {
			const auto& m = j.at("meta");
			check_keys(m, {"alpha", "beta", "inner_steps", "meta_batch", "meta_iters", "finetune_steps", "outer"},
			           "meta");
			read(m, "alpha", c.pool.meta.alpha);
			read(m, "beta", c.pool.meta.beta);
			read(m, "inner_steps", c.pool.meta.inner_steps);
			read(m, "meta_batch", c.pool.meta.meta_batch);
			read(m, "meta_iters", c.pool.meta.meta_iters);
			read(m, "finetune_steps", c.pool.meta.finetune_steps);
			if (m.contains("outer")) {
				const auto o = m.at("outer").get<std::string>();
				if (o != "adam" && o != "sgd")
					throw ConfigError("meta.outer must be 'adam' or 'sgd'");
				c.pool.meta.outer = o == "adam" ? meta::OuterOptimizer::Adam : meta::OuterOptimizer::Sgd;
			}
		}
	} catch (const json::exception& e) {
		throw ConfigError(std::string("run config: ") + e.what());
	} catch (const ParseError& e) {
		throw ConfigError(std::string("run config: ") + e.what());
	} catch (const InvalidArgument& e) {
		throw ConfigError(std::string("run config: ") + e.what());
	}
	return c;
}

RunConfig load_run_config(const fs::path& path) {
	std::ifstream in(path);
	if (!in)
		throw IoError("cannot read config " + path.string());
	std::stringstream buf;
	buf << in.rdbuf();
	return parse_run_config(buf.str());
}

std::string run_config_json(const RunConfig& c) {
	json j;
	if (c.data_path) {
		j["data_path"] = c.data_path->string();
	} else {
		const auto& s = c.synthetic;
		j["synthetic"] = {{"n_ods", s.n_ods},
		                  {"n_days", s.n_days},
		                  {"base_level_spread", s.base_level_spread},
		                  {"weekly_amp", s.weekly_amp},
		                  {"yearly_amp", s.yearly_amp},
		                  {"event_spec", events_json(s.event_spec)},
		                  {"zero_inflation_tail", s.zero_inflation_tail},
		                  {"noise_cv", s.noise_cv}};
	}
	j["split"] = {{"train_end", c.split.train_end.to_string()},
	              {"valid_end", c.split.valid_end.to_string()},
	              {"test_end", c.split.test_end.to_string()}};
	json pool = json::array();
	for (const auto& e : c.pool.entries)
		pool.push_back(entry_json(e));
	j["pool"] = pool;
	const auto& m = c.pool.meta;
	j["meta"] = {{"alpha", m.alpha},
	             {"beta", m.beta},
	             {"inner_steps", m.inner_steps},
	             {"meta_batch", m.meta_batch},
	             {"meta_iters", m.meta_iters},
	             {"finetune_steps", m.finetune_steps},
	             {"outer", m.outer == meta::OuterOptimizer::Adam ? "adam" : "sgd"}};
	j["horizon_weeks"] = c.horizon_weeks;
	j["significant_share"] = c.significant_share;
	j["seed"] = c.seed;
	j["output_dir"] = c.output_dir.string();
	return j.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Data

PanelDataset generate_dataset(const RunConfig& cfg) { return generate_synthetic(resolved(cfg).synthetic); }

PanelDataset load_dataset(const RunConfig& cfg) {
	if (cfg.data_path)
		return ingest_bookings(*cfg.data_path);
	return generate_dataset(cfg);
}

void cmd_generate(const RunConfig& cfg, const fs::path& out_csv) {
	if (!cfg.data_path)
		cfg.synthetic.validate();
	auto ds = generate_dataset(cfg);
	if (out_csv.has_parent_path()) {
		std::error_code ec;
		fs::create_directories(out_csv.parent_path(), ec);
	}
	write_bookings(ds, out_csv);
}

// ---------------------------------------------------------------------------
// Backtest

namespace {

std::string num(double v) {
	char buf[40];
	std::snprintf(buf, sizeof buf, "%.17g", v);
	return buf;
}

std::string num(const std::optional<double>& v) { return v ? num(*v) : "NA"; }

json opt_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> opt_from(const json& j) {
	if (j.is_null())
		return std::nullopt;
	return j.get<double>();
}

class ArtifactWriter {
public:
	explicit ArtifactWriter(fs::path dir) : dir_(std::move(dir)) {}
	void write(const std::string& name, const std::string& content) const {
		std::ofstream out(dir_ / name, std::ios::binary);
		out << content;
		if (!out)
			throw IoError("failed to write " + (dir_ / name).string());
	}

private:
	fs::path dir_;
};

std::string model_type_label(const ModelId& id) { return model_type_name(id.type()); }

struct Window {
	const moe::ForecastGrid* grid;
	const std::map<ODKey, std::vector<double>>* actual;
};

std::vector<ODScore> scores_of(const Window& w, std::size_t model) {
	std::vector<ODScore> out;
	for (std::size_t o = 0; o < w.grid->ods.size(); ++o) {
		const auto& cell = w.grid->at(o, model);
		if (!cell)
			continue;
		const auto& a = w.actual->at(w.grid->ods[o]);
		double total = 0.0;
		for (double v : a)
			total += v;
		out.push_back({w.grid->ods[o], total, nrmse(a, *cell)});
	}
	return out;
}

std::optional<double> safe_wnrmse(const std::vector<ODScore>& scores) {
	for (const auto& s : scores)
		if (s.nrmse && s.weight_sum > 0.0)
			return wnrmse(scores);
	return std::nullopt;
}

std::vector<ModelRow> model_rows(const Window& w, const LossTable& table, const std::set<ODKey>& win_set,
                                 const std::map<ODKey, std::vector<double>>& moe_weekly) {
	const std::set<ODKey>* subset = win_set.empty() ? nullptr : &win_set;
	auto ratios = win_ratios(table, subset);
	std::vector<ModelRow> rows;
	for (std::size_t m = 0; m < w.grid->models.size(); ++m) {
		const ModelId& id = w.grid->models[m];
		auto scores = scores_of(w, m);
		rows.push_back({id.to_string(), model_type_label(id), ratios.at(id.to_string()), mean_nrmse(scores),
		                safe_wnrmse(scores)});
	}
	std::vector<ODScore> moe_scores;
	for (const auto& [od, f] : moe_weekly) {
		const auto& a = w.actual->at(od);
		double total = 0.0;
		for (double v : a)
			total += v;
		moe_scores.push_back({od, total, nrmse(a, f)});
	}
	rows.push_back({"moe", "MoE", std::nullopt, mean_nrmse(moe_scores), safe_wnrmse(moe_scores)});
	return rows;
}

std::string losses_csv(const LossTable& t) {
	std::ostringstream out;
	out << "origin,destination,model_id,loss\n";
	for (std::size_t o = 0; o < t.ods().size(); ++o)
		for (std::size_t m = 0; m < t.models().size(); ++m)
			out << t.ods()[o].origin() << ',' << t.ods()[o].destination() << ',' << t.models()[m].to_string() << ','
			    << num(t.get(o, m)) << '\n';
	return out.str();
}

std::string grid_csv(const Window& w) {
	std::ostringstream out;
	out << "origin,destination,model_id,week_start,forecast,actual\n";
	const auto& g = *w.grid;
	for (std::size_t o = 0; o < g.ods.size(); ++o) {
		const auto& a = w.actual->at(g.ods[o]);
		for (std::size_t m = 0; m < g.models.size(); ++m) {
			const auto& cell = g.at(o, m);
			for (std::size_t k = 0; k < g.weeks.size(); ++k)
				out << g.ods[o].origin() << ',' << g.ods[o].destination() << ',' << g.models[m].to_string() << ','
				    << g.weeks[k].to_string() << ',' << (cell ? num((*cell)[k]) : "NA") << ',' << num(a[k]) << '\n';
		}
	}
	return out.str();
}

json rows_json(const std::vector<ModelRow>& rows) {
	json arr = json::array();
	for (const auto& r : rows)
		arr.push_back({{"model", r.model},
		               {"type", r.type},
		               {"win_ratio", opt_json(r.win_ratio)},
		               {"nrmse", opt_json(r.nrmse)},
		               {"wnrmse", opt_json(r.wnrmse)}});
	return arr;
}

std::vector<ModelRow> rows_from(const json& arr) {
	std::vector<ModelRow> out;
	for (const auto& r : arr)
		out.push_back({r.at("model"), r.at("type"), opt_from(r.at("win_ratio")), opt_from(r.at("nrmse")),
		               opt_from(r.at("wnrmse"))});
	return out;
}

json summary_json(const BacktestSummary& s, std::uint64_t seed) {
	json t2 = json::array();
	for (const auto& r : s.clusters)
		t2.push_back({{"group", r.group},
		              {"sample_size", r.sample_size},
		              {"revenue_share", r.revenue_share},
		              {"nrmse", opt_json(r.nrmse)},
		              {"wnrmse", opt_json(r.wnrmse)}});
	json t3 = json::array();
	for (const auto& r : s.benchmark)
		t3.push_back({{"group", r.group},
		              {"statistical_baseline", opt_json(r.vs_statistical)},
		              {"industry_benchmark", opt_json(r.vs_benchmark)}});
	return {{"seed", seed},
	        {"n_ods", s.n_ods},
	        {"n_significant", s.n_significant},
	        {"table1", rows_json(s.test_rows)},
	        {"table1_validation", rows_json(s.validation_rows)},
	        {"table2", t2},
	        {"table3", t3},
	        {"moe_beats_yoy", opt_json(s.moe_beats_yoy)},
	        {"substitutions", s.substitutions},
	        {"excluded", s.excluded}};
}

BacktestSummary summary_from(const json& j) {
	BacktestSummary s;
	s.n_ods = j.at("n_ods");
	s.n_significant = j.at("n_significant");
	s.test_rows = rows_from(j.at("table1"));
	s.validation_rows = rows_from(j.at("table1_validation"));
	for (const auto& r : j.at("table2"))
		s.clusters.push_back({r.at("group"), r.at("sample_size"), r.at("revenue_share"), opt_from(r.at("nrmse")),
		                      opt_from(r.at("wnrmse"))});
	for (const auto& r : j.at("table3"))
		s.benchmark.push_back(
		    {r.at("group"), opt_from(r.at("statistical_baseline")), opt_from(r.at("industry_benchmark"))});
	s.moe_beats_yoy = opt_from(j.at("moe_beats_yoy"));
	s.substitutions = j.at("substitutions").get<std::vector<std::string>>();
	s.excluded = j.at("excluded").get<std::vector<std::string>>();
	return s;
}

std::string cell(const std::optional<double>& v) {
	if (!v)
		return "-";
	char buf[32];
	std::snprintf(buf, sizeof buf, "%.3f", *v);
	return buf;
}

std::string render_table(const std::string& title, const std::vector<std::string>& header,
                         const std::vector<std::vector<std::string>>& rows) {
	std::vector<std::size_t> width(header.size());
	for (std::size_t c = 0; c < header.size(); ++c) {
		width[c] = header[c].size();
		for (const auto& r : rows)
			width[c] = std::max(width[c], r[c].size());
	}
	std::ostringstream out;
	auto line = [&](const std::vector<std::string>& r) {
		for (std::size_t c = 0; c < r.size(); ++c) {
			if (c == 0)
				out << std::left << std::setw(int(width[c])) << r[c];
			else
				out << "  " << std::right << std::setw(int(width[c])) << r[c];
		}
		out << '\n';
	};
	std::size_t total = 0;
	for (auto w : width)
		total += w + 2;
	out << title << '\n' << std::string(total - 2, '=') << '\n';
	line(header);
	out << std::string(total - 2, '-') << '\n';
	for (const auto& r : rows)
		line(r);
	out << '\n';
	return out.str();
}

std::string render_report(const BacktestSummary& s) {
	std::ostringstream out;
	std::vector<std::vector<std::string>> t1;
	for (const auto& r : s.test_rows)
		t1.push_back({r.model, r.type, cell(r.win_ratio), cell(r.nrmse), cell(r.wnrmse)});
	out << render_table("Table 1. Model performance and win ratio (test window; win ratio on the significant cluster)",
	                    {"Model Name", "Model Type", "Win ratio", "nRMSE", "WnRMSE"}, t1);
	std::vector<std::vector<std::string>> t2;
	for (const auto& r : s.clusters)
		t2.push_back({r.group, std::to_string(r.sample_size), cell(r.revenue_share), cell(r.nrmse), cell(r.wnrmse)});
	out << render_table("Table 2. Aggregated metrics for clustered O&Ds (MoE, test window)",
	                    {"O&D's", "Sample Size", "Share of Revenue", "nRMSE", "WnRMSE"}, t2);
	std::vector<std::vector<std::string>> t3;
	for (const auto& r : s.benchmark)
		t3.push_back({r.group, cell(r.vs_statistical), cell(r.vs_benchmark)});
	out << render_table("Table 3. Win ratios of ML models for clustered O&Ds",
	                    {"O&D's", "Statistical baseline", "Industry benchmark"}, t3);
	out << "ODs: " << s.n_ods << " (significant cluster: " << s.n_significant << ")\n";
	out << "MoE beats year-over-year on significant ODs: " << cell(s.moe_beats_yoy) << '\n';
	out << "Fallback substitutions: " << s.substitutions.size() << '\n';
	out << "Exclusions: " << s.excluded.size() << '\n';
	return out.str();
}

} // namespace

const std::vector<std::string>& run_artifacts() {
	static const std::vector<std::string> names = {
	    "config.json",  "validation_losses.csv", "validation_forecasts.csv", "test_losses.csv", "assignment.csv",
	    "forecasts.csv", "pool_forecasts.csv",   "clusters.csv",             "report.json",     "report.txt",
	    "run.log"};
	return names;
}

BacktestSummary cmd_backtest(const RunConfig& input, const fs::path& out_dir, const LogFn& log_cb) {
	input.validate();
	const RunConfig cfg = resolved(input);
	std::error_code ec;
	fs::create_directories(out_dir, ec);
	if (ec || !fs::is_directory(out_dir))
		throw IoError("cannot create output directory " + out_dir.string());
	ArtifactWriter writer(out_dir);

	std::vector<std::string> log_lines;
	auto log = [&](const std::string& s) {
		log_lines.push_back(s);
		if (log_cb)
			log_cb(s);
	};
	writer.write("config.json", run_config_json(input));

	const PanelDataset ds = load_dataset(cfg);
	const DateRange validation = cfg.split.validation();
	const DateRange test = cfg.test_window();
	if (ds.date_max() < test.last)
		throw ConfigError("dataset ends " + ds.date_max().to_string() + ", before the test window ends " +
		                  test.last.to_string());
	if (!(ds.date_min() < cfg.split.train_end))
		throw ConfigError("train_end precedes the first observation");
	log("dataset: " + std::to_string(ds.num_ods()) + " ODs, " + ds.date_min().to_string() + " to " +
	    ds.date_max().to_string());

	const DateRange span{ds.date_min(), test.last};
	std::vector<ODSeries> full, train, through_valid;
	for (const auto& od : ds.ods()) {
		full.push_back(regularize(ds, od, span));
		ODSeries t = full.back(), v = full.back();
		const auto cut = [&](ODSeries& s, Date last) {
			const auto n = std::size_t((last - s.start_date) + 1);
			s.values.resize(n);
			s.features.resize(n * s.feature_width);
		};
		cut(t, cfg.split.train_end);
		cut(v, cfg.split.valid_end);
		train.push_back(std::move(t));
		through_valid.push_back(std::move(v));
	}

	const DateRange reference = cfg.split.reference_window();
	const auto labels = rank_clusters(ds, reference, cfg.significant_share);
	std::map<ODKey, double> revenue;
	std::set<ODKey> significant;
	for (const auto& [od, label] : labels) {
		revenue[od] = ds.revenue_in(od, reference);
		if (label.in_significant_cluster)
			significant.insert(od);
	}
	log("significant cluster: " + std::to_string(significant.size()) + " ODs");

	auto experts = moe::train_pool(cfg.pool, train, log);
	log("pool trained: " + std::to_string(experts.size()) + " models");

	std::map<ODKey, std::vector<double>> actual_v, actual_t;
	for (const auto& s : full) {
		actual_v[s.od] = moe::weekly_actual(s, validation);
		actual_t[s.od] = moe::weekly_actual(s, test);
	}
	auto scored = moe::score_pool(experts, train, full, validation);
	const auto assignment = moe::select_experts(scored.table);
	log("validation scored and experts selected");

	const auto grid_t = moe::forecast_grid(experts, through_valid, test);
	const auto table_t = moe::score_grid(grid_t, actual_t);
	const auto moe_t = moe::predict_moe(assignment, scored.table, grid_t);
	for (const auto& s : moe_t.substitutions)
		log("fallback: " + s);
	log("test window forecast");

	BacktestSummary summary;
	summary.n_ods = full.size();
	summary.n_significant = significant.size();
	summary.substitutions = moe_t.substitutions;

	std::map<ODKey, std::vector<double>> moe_v;
	for (const auto& [od, id] : assignment.expert)
		moe_v[od] = *scored.grid.at(scored.table.od_index(od), scored.table.model_index(id));
	const Window wv{&scored.grid, &actual_v}, wt{&grid_t, &actual_t};
	summary.validation_rows = model_rows(wv, scored.table, significant, moe_v);
	summary.test_rows = model_rows(wt, table_t, significant, moe_t.weekly);

	// exclusions: unavailable cells and zero-mean ODs
	for (const auto* w : {&wv, &wt}) {
		const char* tag = w == &wv ? "validation" : "test";
		const auto& g = *w->grid;
		for (std::size_t o = 0; o < g.ods.size(); ++o) {
			if (!nrmse(w->actual->at(g.ods[o]), w->actual->at(g.ods[o])))
				summary.excluded.push_back(g.ods[o].to_string() + ": zero-mean OD in the " + tag + " window");
			for (std::size_t m = 0; m < g.models.size(); ++m)
				if (!g.at(o, m))
					summary.excluded.push_back(g.ods[o].to_string() + ": " + g.models[m].to_string() +
					                           " unavailable in the " + tag + " window (" + g.reasons[g.index(o, m)] +
					                           ")");
		}
	}

	std::map<ODKey, ODScore> moe_scores;
	for (const auto& [od, f] : moe_t.weekly) {
		double total = 0.0;
		for (double v : actual_t.at(od))
			total += v;
		moe_scores[od] = {od, total, nrmse(actual_t.at(od), f)};
	}
	summary.clusters = cluster_report(moe_scores, labels, revenue);

	// Table 3 and the benchmark comparison need year-over-year test forecasts.
	LossTable bench_table = table_t;
	std::map<ODKey, std::optional<std::vector<double>>> yoy_f;
	{
		auto it = std::find(grid_t.models.begin(), grid_t.models.end(), ModelId{"yoy", false});
		if (it != grid_t.models.end()) {
			const auto m = std::size_t(it - grid_t.models.begin());
			for (std::size_t o = 0; o < grid_t.ods.size(); ++o)
				yoy_f[grid_t.ods[o]] = grid_t.at(o, m);
		} else {
			std::vector<std::unique_ptr<moe::Expert>> yoy;
			yoy.push_back(moe::make_stat_expert("yoy"));
			const auto g = moe::forecast_grid(yoy, through_valid, test);
			auto models = grid_t.models;
			models.push_back({"yoy", false});
			bench_table = LossTable(grid_t.ods, models);
			for (std::size_t o = 0; o < grid_t.ods.size(); ++o) {
				for (std::size_t m = 0; m < grid_t.models.size(); ++m)
					bench_table.set(o, m, table_t.get(o, m));
				if (g.at(o, 0))
					bench_table.set(o, grid_t.models.size(), moe::selection_loss(actual_t.at(g.ods[o]), *g.at(o, 0)));
				yoy_f[g.ods[o]] = g.at(o, 0);
			}
		}
	}
	std::set<std::string> ml, stat_base;
	for (const auto& id : grid_t.models) {
		if (id.type() == ModelType::ML)
			ml.insert(id.to_string());
		else if (id.type() == ModelType::Stat)
			stat_base.insert(id.to_string());
	}
	std::vector<std::pair<std::string, std::set<ODKey>>> groups = {{"Significant cluster", significant}};
	for (auto c : {RankCluster::Top100, RankCluster::R101_500, RankCluster::R501_1000, RankCluster::Above1001}) {
		std::set<ODKey> members;
		for (const auto& [od, l] : labels)
			if (l.cluster == c)
				members.insert(od);
		groups.push_back({cluster_name(c), members});
	}
	for (const auto& [name, members] : groups) {
		BenchmarkRow row{name, std::nullopt, std::nullopt};
		if (!ml.empty() && !members.empty()) {
			if (!stat_base.empty())
				row.vs_statistical = ml_vs_baseline_winrate(bench_table, ml, stat_base, members);
			row.vs_benchmark = ml_vs_baseline_winrate(bench_table, ml, {"yoy"}, members);
		}
		summary.benchmark.push_back(row);
	}

	std::size_t wins = 0, compared = 0;
	for (const auto& od : significant) {
		const auto& y = yoy_f.at(od);
		if (!y)
			continue;
		++compared;
		const auto& a = actual_t.at(od);
		if (moe::selection_loss(a, moe_t.weekly.at(od)) < moe::selection_loss(a, *y))
			++wins;
	}
	if (compared)
		summary.moe_beats_yoy = double(wins) / double(compared);

	// Artifacts
	writer.write("validation_losses.csv", losses_csv(scored.table));
	writer.write("test_losses.csv", losses_csv(table_t));
	writer.write("validation_forecasts.csv", grid_csv(wv));
	writer.write("pool_forecasts.csv", grid_csv(wt));
	{
		std::ostringstream out;
		moe::write_assignment(assignment, out);
		writer.write("assignment.csv", out.str());
	}
	{
		std::ostringstream out;
		out << "origin,destination,week_start,actual,forecast,served_by\n";
		for (const auto& [od, f] : moe_t.weekly) {
			const auto& a = actual_t.at(od);
			for (std::size_t k = 0; k < f.size(); ++k)
				out << od.origin() << ',' << od.destination() << ',' << moe_t.weeks[k].to_string() << ',' << num(a[k])
				    << ',' << num(f[k]) << ',' << moe_t.served_by.at(od).to_string() << '\n';
		}
		writer.write("forecasts.csv", out.str());
	}
	{
		std::ostringstream out;
		out << "origin,destination,rank,cluster,significant,revenue\n";
		for (const auto& [od, l] : labels)
			out << od.origin() << ',' << od.destination() << ',' << l.rank << ',' << cluster_name(l.cluster) << ','
			    << (l.in_significant_cluster ? 1 : 0) << ',' << num(revenue.at(od)) << '\n';
		writer.write("clusters.csv", out.str());
	}
	writer.write("report.json", summary_json(summary, cfg.seed).dump(2) + "\n");
	writer.write("report.txt", render_report(summary));
	log("artifacts written");
	std::string log_text;
	for (const auto& l : log_lines)
		log_text += l + "\n";
	writer.write("run.log", log_text);
	return summary;
}

std::string cmd_report(const fs::path& run_dir) {
	if (!fs::is_directory(run_dir))
		throw NotFound("run directory " + run_dir.string() + " does not exist");
	for (const auto& name : run_artifacts())
		if (!fs::exists(run_dir / name))
			throw NotFound("run directory " + run_dir.string() + " is missing " + name);
	std::ifstream in(run_dir / "report.json");
	try {
		return render_report(summary_from(json::parse(in)));
	} catch (const json::exception& e) {
		throw ParseError(std::string("report.json: ") + e.what());
	}
}

} // namespace odcast::harness
