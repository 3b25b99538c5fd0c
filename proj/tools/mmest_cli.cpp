// Command-line runner for the two experiments and the boxplot renderer.
// Exit codes: 0 success, 2 configuration or usage error, 3 numerical failure.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "mmest/error.hpp"
#include "mmest/harness.hpp"

namespace fs = std::filesystem;
using namespace mmest;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UsageError("cannot write " + path.string());
  out << text;
}

struct RunFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::string out = ".";
};

ExperimentConfig load_config(const std::string& experiment, const RunFlags& flags) {
  json j = json::object();
  if (!flags.config.empty()) {
    try {
      j = json::parse(read_file(flags.config));
    } catch (const json::parse_error& e) {
      throw Error(ErrorCode::kConfig, flags.config + ": " + e.what());
    }
    if (!j.is_object()) throw Error(ErrorCode::kConfig, "config must be a JSON object");
  }
  if (!j.contains("experiment")) j["experiment"] = experiment;
  if (j["experiment"] != experiment) {
    throw Error(ErrorCode::kConfig, "config is for " + j["experiment"].dump() +
                                        ", subcommand is \"" + experiment + "\"");
  }
  if (flags.seed) j["seed"] = *flags.seed;
  if (flags.threads) j["threads"] = *flags.threads;
  return config_from_json(j);
}

fs::path timing_path(const fs::path& csv) {
  fs::path p = csv;
  p.replace_extension();
  return p.string() + ".timing.csv";
}

void run(const std::string& experiment, const RunFlags& flags) {
  const ExperimentConfig config = load_config(experiment, flags);
  const auto records = run_experiment(config);
  const fs::path out(flags.out);
  const fs::path csv = out / config.csv;
  const std::string text = records_to_csv(records);
  write_file(csv, text);
  write_file(timing_path(csv), timing_to_csv(records));
  if (!config.svg.empty()) {
    const bool linear = experiment == "linear_gaussian_singletons";
    // Group by theta when K is fixed, as in a sweep over censoring levels.
    const std::string by = linear || config.K.size() > 1 ? "K" : "group";
    write_file(out / config.svg,
               emit_boxplot(parse_csv(text), linear ? "rho" : "error", by, experiment));
  }
  size_t covered = 0;
  for (const auto& r : records) covered += r.covered ? 1 : 0;
  std::printf("%s: %zu rows, coverage %.4f, wrote %s\n", experiment.c_str(), records.size(),
              records.empty() ? 0.0 : static_cast<double>(covered) / records.size(),
              csv.string().c_str());
}

// Quick end-to-end checks on tiny configurations.
int selftest() {
  int failures = 0;
  auto report = [&](const char* name, bool ok) {
    std::printf("%s %s\n", ok ? "PASS" : "FAIL", name);
    failures += ok ? 0 : 1;
  };
  bool rejected = false;
  try {
    config_from_json({{"experiment", "hazard_bisection"}, {"unknown", 1}});
  } catch (const Error& e) {
    rejected = e.code() == ErrorCode::kConfig;
  }
  report("config rejects unknown keys", rejected);

  const auto lin = config_from_json({{"experiment", "linear_gaussian_singletons"},
                                     {"n", 4},
                                     {"m", 3},
                                     {"I", 3},
                                     {"instances", 2},
                                     {"K", {1, 100}},
                                     {"trials", 20}});
  const std::string lin_csv = records_to_csv(run_experiment(lin));
  report("linear runner reproducible", lin_csv == records_to_csv(run_experiment(lin)));

  const auto haz = config_from_json(
      {{"experiment", "hazard_bisection"}, {"K", {1000}}, {"theta", {0.9}}, {"trials", 10}});
  const auto haz_records = run_experiment(haz);
  const std::string haz_csv = records_to_csv(haz_records);
  report("hazard runner reproducible", haz_csv == records_to_csv(run_experiment(haz)));
  bool nested = true;
  for (const auto& r : haz_records) nested = nested && r.rho <= r.init_halfwidth;
  report("hazard output inside initial localizer", nested);

  const auto stats = box_stats(parse_csv(lin_csv), "rho", "K");
  report("boxplot groups ordered by K", stats.size() == 2 && stats[0].key == "1");
  return failures == 0 ? 0 : kExitNumerical;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Near-minimax estimation experiments"};
  app.require_subcommand(1);

  RunFlags flags;
  auto add_run_flags = [&](CLI::App* sub) {
    sub->add_option("--config", flags.config, "JSON config file")->check(CLI::ExistingFile);
    sub->add_option("--seed", flags.seed, "RNG seed, overrides the config");
    sub->add_option("--threads", flags.threads, "worker threads, overrides the config");
    sub->add_option("--out", flags.out, "output directory");
  };
  auto* linear = app.add_subcommand("linear", "linear functional of Gaussian singletons");
  add_run_flags(linear);
  auto* hazard = app.add_subcommand("hazard", "hazard rate by bisection");
  add_run_flags(hazard);

  auto* boxplot = app.add_subcommand("boxplot", "render an SVG boxplot from a results CSV");
  std::string csv_in, svg_out, value = "error", by = "K", title;
  boxplot->add_option("csv", csv_in, "results CSV")->required()->check(CLI::ExistingFile);
  boxplot->add_option("--out", svg_out, "SVG output path")->required();
  boxplot->add_option("--value", value, "column to summarize");
  boxplot->add_option("--by", by, "column to group by");
  boxplot->add_option("--title", title, "plot title");

  auto* self = app.add_subcommand("selftest", "run quick end-to-end checks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*linear) run("linear_gaussian_singletons", flags);
    if (*hazard) run("hazard_bisection", flags);
    if (*boxplot) {
      CsvTable table;
      try {
        table = parse_csv(read_file(csv_in));
        write_file(svg_out, emit_boxplot(table, value, by, title));
      } catch (const Error& e) {
        throw UsageError(e.what());
      }
    }
    if (*self) return selftest();
  } catch (const UsageError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitConfig;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return e.code() == ErrorCode::kConfig ? kExitConfig : kExitNumerical;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitNumerical;
  }
  return 0;
}
