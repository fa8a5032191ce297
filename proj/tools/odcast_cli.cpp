#include "odcast/odcast.h"

#include "CLI11.hpp"

#include <cstdio>
#include <string>

namespace {

int fail(odcast_status st) {
	std::fprintf(stderr, "error (%s): %s\n", odcast_status_name(st), odcast_last_error());
	return int(st);
}

void print_line(const char* line, void* quiet) {
	if (!*static_cast<bool*>(quiet))
		std::fprintf(stderr, "%s\n", line);
}

struct Config {
	odcast_config* ptr = nullptr;
	~Config() { odcast_config_free(ptr); }
};

} // namespace

int main(int argc, char** argv) {
	CLI::App app{"Per-O&D cargo demand forecasting with a mixture of experts"};
	app.set_version_flag("--version", std::string(odcast_version()));
	app.require_subcommand(1);

	std::string config_path, out_path, run_dir;
	bool quiet = false;

	auto* gen = app.add_subcommand("generate", "Write a synthetic bookings CSV");
	gen->add_option("--config", config_path, "Run config (JSON)")->required()->check(CLI::ExistingFile);
	gen->add_option("--out", out_path, "Output CSV")->required();

	auto* bt = app.add_subcommand("backtest", "Train, select experts and evaluate on the test window");
	bt->add_option("--config", config_path, "Run config (JSON)")->required()->check(CLI::ExistingFile);
	bt->add_option("--out", out_path, "Run directory")->required();
	bt->add_flag("-q,--quiet", quiet, "Suppress progress lines");

	auto* rep = app.add_subcommand("report", "Print the report tables of a run directory");
	rep->add_option("--run", run_dir, "Run directory")->required();

	CLI11_PARSE(app, argc, argv);

	if (rep->parsed()) {
		char* text = nullptr;
		if (auto st = odcast_report(run_dir.c_str(), &text))
			return fail(st);
		std::fputs(text, stdout);
		odcast_string_free(text);
		return 0;
	}

	Config cfg;
	if (auto st = odcast_config_load(config_path.c_str(), &cfg.ptr))
		return fail(st);

	if (gen->parsed()) {
		if (auto st = odcast_generate(cfg.ptr, out_path.c_str()))
			return fail(st);
		std::fprintf(stderr, "wrote %s\n", out_path.c_str());
		return 0;
	}

	odcast_run* run = nullptr;
	if (auto st = odcast_backtest(cfg.ptr, out_path.c_str(), print_line, &quiet, &run))
		return fail(st);
	odcast_run_free(run);
	char* text = nullptr;
	if (auto st = odcast_report(out_path.c_str(), &text))
		return fail(st);
	std::fputs(text, stdout);
	odcast_string_free(text);
	return 0;
}
