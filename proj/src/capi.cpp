#include "odcast/odcast.h"

#include "odcast/error.hpp"
#include "odcast/harness.hpp"

#include <cstdlib>
#include <cstring>
#include <exception>
#include <new>
#include <string>

struct odcast_config {
	odcast::harness::RunConfig cfg;
};

struct odcast_run {
	odcast::harness::BacktestSummary summary;
};

namespace {

thread_local std::string g_last_error;

odcast_status to_status(odcast::ErrorCode code) {
	switch (code) {
	case odcast::ErrorCode::InvalidArgument:
		return ODCAST_E_INVALID_ARGUMENT;
	case odcast::ErrorCode::Io:
		return ODCAST_E_IO;
	case odcast::ErrorCode::Parse:
		return ODCAST_E_PARSE;
	case odcast::ErrorCode::NotFound:
		return ODCAST_E_NOT_FOUND;
	case odcast::ErrorCode::InsufficientHistory:
		return ODCAST_E_INSUFFICIENT_HISTORY;
	case odcast::ErrorCode::Shape:
		return ODCAST_E_SHAPE;
	case odcast::ErrorCode::Numeric:
		return ODCAST_E_NUMERIC;
	case odcast::ErrorCode::Config:
		return ODCAST_E_CONFIG;
	case odcast::ErrorCode::Internal:
		break;
	}
	return ODCAST_E_INTERNAL;
}

template <class F>
odcast_status guarded(F&& f) {
	try {
		f();
		g_last_error.clear();
		return ODCAST_OK;
	} catch (const odcast::Error& e) {
		g_last_error = e.what();
		return to_status(e.code());
	} catch (const std::bad_alloc&) {
		g_last_error = "out of memory";
	} catch (const std::exception& e) {
		g_last_error = e.what();
	} catch (...) {
		g_last_error = "unknown error";
	}
	return ODCAST_E_INTERNAL;
}

void require(const void* p, const char* what) {
	if (!p)
		throw odcast::InvalidArgument(std::string(what) + " must not be NULL");
}

char* dup_string(const std::string& s) {
	char* out = static_cast<char*>(std::malloc(s.size() + 1));
	if (!out)
		throw std::bad_alloc();
	std::memcpy(out, s.c_str(), s.size() + 1);
	return out;
}

const odcast::harness::ModelRow* find_row(const odcast_run* run, const char* model) {
	for (const auto& r : run->summary.test_rows)
		if (r.model == model)
			return &r;
	throw odcast::NotFound(std::string("no model '") + model + "' in the run");
}

} // namespace

extern "C" {

const char* odcast_version(void) { return "0.1.0"; }

const char* odcast_last_error(void) { return g_last_error.c_str(); }

const char* odcast_status_name(odcast_status status) {
	switch (status) {
	case ODCAST_OK:
		return "ok";
	case ODCAST_E_INVALID_ARGUMENT:
		return "invalid argument";
	case ODCAST_E_IO:
		return "i/o error";
	case ODCAST_E_PARSE:
		return "parse error";
	case ODCAST_E_NOT_FOUND:
		return "not found";
	case ODCAST_E_INSUFFICIENT_HISTORY:
		return "insufficient history";
	case ODCAST_E_SHAPE:
		return "shape error";
	case ODCAST_E_NUMERIC:
		return "numeric error";
	case ODCAST_E_CONFIG:
		return "config error";
	case ODCAST_E_INTERNAL:
		return "internal error";
	}
	return "unknown status";
}

odcast_status odcast_config_load(const char* path, odcast_config** out) {
	return guarded([&] {
		require(path, "path");
		require(out, "out");
		*out = new odcast_config{odcast::harness::load_run_config(path)};
	});
}

odcast_status odcast_config_parse(const char* json_text, odcast_config** out) {
	return guarded([&] {
		require(json_text, "json_text");
		require(out, "out");
		*out = new odcast_config{odcast::harness::parse_run_config(json_text)};
	});
}

odcast_status odcast_config_default(odcast_config** out) {
	return guarded([&] {
		require(out, "out");
		*out = new odcast_config{odcast::harness::default_run_config()};
	});
}

void odcast_config_free(odcast_config* config) { delete config; }

odcast_status odcast_config_to_json(const odcast_config* config, char** out) {
	return guarded([&] {
		require(config, "config");
		require(out, "out");
		*out = dup_string(odcast::harness::run_config_json(config->cfg));
	});
}

odcast_status odcast_generate(const odcast_config* config, const char* out_csv) {
	return guarded([&] {
		require(config, "config");
		require(out_csv, "out_csv");
		odcast::harness::cmd_generate(config->cfg, out_csv);
	});
}

odcast_status odcast_backtest(const odcast_config* config, const char* out_dir, odcast_log_fn log, void* user,
                              odcast_run** out) {
	return guarded([&] {
		require(config, "config");
		require(out_dir, "out_dir");
		odcast::harness::LogFn fn;
		if (log)
			fn = [log, user](const std::string& line) { log(line.c_str(), user); };
		auto summary = odcast::harness::cmd_backtest(config->cfg, out_dir, fn);
		if (out)
			*out = new odcast_run{std::move(summary)};
	});
}

void odcast_run_free(odcast_run* run) { delete run; }

odcast_status odcast_run_model_wnrmse(const odcast_run* run, const char* model, double* out) {
	return guarded([&] {
		require(run, "run");
		require(model, "model");
		require(out, "out");
		const auto* r = find_row(run, model);
		if (!r->wnrmse)
			throw odcast::NotFound(std::string("no WnRMSE for ") + model);
		*out = *r->wnrmse;
	});
}

odcast_status odcast_run_model_nrmse(const odcast_run* run, const char* model, double* out) {
	return guarded([&] {
		require(run, "run");
		require(model, "model");
		require(out, "out");
		const auto* r = find_row(run, model);
		if (!r->nrmse)
			throw odcast::NotFound(std::string("no nRMSE for ") + model);
		*out = *r->nrmse;
	});
}

odcast_status odcast_run_moe_beats_yoy(const odcast_run* run, double* out) {
	return guarded([&] {
		require(run, "run");
		require(out, "out");
		if (!run->summary.moe_beats_yoy)
			throw odcast::NotFound("no significant OD has a year-over-year forecast");
		*out = *run->summary.moe_beats_yoy;
	});
}

size_t odcast_run_substitutions(const odcast_run* run) { return run ? run->summary.substitutions.size() : 0; }

odcast_status odcast_report(const char* run_dir, char** out) {
	return guarded([&] {
		require(run_dir, "run_dir");
		require(out, "out");
		*out = dup_string(odcast::harness::cmd_report(run_dir));
	});
}

void odcast_string_free(char* s) { std::free(s); }

} // extern "C"
