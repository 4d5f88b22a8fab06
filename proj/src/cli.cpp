#include "shufflenet/cli.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <optional>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#if defined(__unix__)
#include <sys/utsname.h>
#include <unistd.h>
#endif

#include "shufflenet/architectures.hpp"
#include "shufflenet/bench.hpp"
#include "shufflenet/config.hpp"
#include "shufflenet/cost_model.hpp"
#include "shufflenet/error.hpp"
#include "shufflenet/feature_reuse.hpp"
#include "shufflenet/report.hpp"
#include "strcat.hpp"

namespace shufflenet {

using detail::cat;
using nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

struct Options {
  std::string target;
  std::string config;
  std::string format = "tree";
  std::string out_dir;
  int input_size = 0;
  std::uint64_t seed = 0;
  int runs = 100;
  int warmup = 10;
  int batch = 1;
  int threads = 1;
  bool pin = false;
  std::string experiment;
  std::vector<int> scales{1, 2, 4};
  int blocks = 10;
  double r = 0.5;
  int empirical_channels = 0;
  std::string tap = "input";
  LintThresholds thresholds;
};

class IoError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
#if defined(_WIN32)
  gmtime_s(&tm, &now);
#else
  gmtime_r(&now, &tm);
#endif
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

ordered_json host_description() {
  ordered_json h;
#if defined(__unix__)
  char name[256] = {};
  if (gethostname(name, sizeof(name) - 1) == 0) h["hostname"] = name;
  utsname u{};
  if (uname(&u) == 0) {
    h["os"] = cat(u.sysname, " ", u.release);
    h["machine"] = u.machine;
  }
#endif
  h["hardware_threads"] = std::thread::hardware_concurrency();
#if defined(__clang__)
  h["compiler"] = cat("clang ", __clang_major__, ".", __clang_minor__);
#elif defined(__GNUC__)
  h["compiler"] = cat("gcc ", __GNUC__, ".", __GNUC_MINOR__);
#endif
  return h;
}

ordered_json config_echo(const std::string& sub, const Options& o) {
  ordered_json c;
  if (!o.target.empty()) c["target"] = o.target;
  if (!o.config.empty()) c["config"] = o.config;
  c["format"] = o.format;
  c["input_size"] = o.input_size;
  if (sub == "lint") {
    c["g1_max_ratio"] = o.thresholds.g1_max_ratio;
    c["g2_max_groups"] = o.thresholds.g2_max_groups;
    c["g3_max_fragments"] = o.thresholds.g3_max_fragments;
    c["g4_max_share"] = o.thresholds.g4_max_share;
  }
  if (sub == "bench" || sub == "experiment") {
    c["runs"] = o.runs;
    c["warmup"] = o.warmup;
    c["batch"] = o.batch;
    c["threads"] = o.threads;
    c["pin_thread"] = o.pin;
  }
  if (sub == "experiment") {
    c["experiment"] = o.experiment;
    c["scales"] = o.scales;
  }
  if (sub == "reuse") {
    c["blocks"] = o.blocks;
    c["r"] = o.r;
    c["empirical_channels"] = o.empirical_channels;
    c["tap"] = o.tap;
  }
  return c;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError(cat(path.string(), ": cannot open for writing"));
  f << content;
  f.close();
  if (!f) throw IoError(cat(path.string(), ": write failed"));
}

// Writes `files` and manifest.json into --out when it was given.
void emit(const std::string& sub, const Options& o,
          const std::vector<std::pair<std::string, std::string>>& files) {
  if (o.out_dir.empty()) return;
  const fs::path dir(o.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError(cat(dir.string(), ": cannot create directory: ", ec.message()));
  ordered_json names = ordered_json::array();
  for (const auto& [name, content] : files) {
    write_file(dir / name, content);
    names.push_back(name);
  }
  ordered_json m;
  m["subcommand"] = sub;
  m["config"] = config_echo(sub, o);
  m["seed"] = o.seed;
  m["host"] = host_description();
  m["version"] = kVersion;
  m["timestamp"] = utc_timestamp();
  m["files"] = names;
  write_file(dir / "manifest.json", m.dump(2) + "\n");
}

Target resolve(const Options& o) {
  if (o.target.empty() == o.config.empty()) {
    throw ConfigError("give exactly one of an architecture name or --config FILE");
  }
  if (!o.config.empty()) return load_config(o.config);
  return {o.target, build_named(o.target, o.input_size)};
}

BenchConfig bench_config(const Options& o) {
  BenchConfig c;
  c.runs = o.runs;
  c.warmup = o.warmup;
  c.batch = o.batch;
  c.input_size = o.input_size;
  c.pin_thread = o.pin;
  c.seed = o.seed;
  c.threads = o.threads;
  c.validate();
  return c;
}

int cmd_analyze(const Options& o, std::ostream& out) {
  const Target t = resolve(o);
  const CostReport report = analyze(t.graph);
  const std::string json = cost_report_json(report, t.name);
  const std::string csv = cost_report_csv(report);
  out << (o.format == "csv" ? csv : json);
  emit("analyze", o, {{"analyze.json", json}, {"analyze.csv", csv}});
  return kExitOk;
}

int cmd_lint(const Options& o, std::ostream& out) {
  const Target t = resolve(o);
  const auto findings = lint(t.graph, o.thresholds);
  const std::string json = lint_json(findings, o.thresholds, t.name);
  const std::string csv = lint_csv(findings);
  out << (o.format == "csv" ? csv : json);
  emit("lint", o, {{"lint.json", json}, {"lint.csv", csv}});
  return findings.empty() ? kExitOk : kExitFindings;
}

int cmd_bench(const Options& o, std::ostream& out) {
  const BenchConfig config = bench_config(o);
  const Target t = resolve(o);
  const BenchResult result = run_bench(t.graph, config);
  const std::string csv = bench_csv(bench_rows("bench", t.name, "1", result));
  const std::string summary = bench_summary_json(result, t.name);
  out << (o.format == "csv" ? csv : summary);
  emit("bench", o, {{"bench.csv", csv}, {"bench_summary.json", summary}});
  return kExitOk;
}

int cmd_experiment(const Options& o, std::ostream& out) {
  const auto e = parse_experiment(o.experiment);
  if (!e) throw ConfigError(cat("unknown experiment '", o.experiment, "'"));
  const BenchConfig config = bench_config(o);
  for (int s : o.scales) {
    if (s != 1 && s != 2 && s != 4) throw ConfigError(cat("scale must be 1, 2 or 4, got ", s));
  }
  const ExperimentTable table = run_experiment(*e, o.scales, config);
  const std::string runs = bench_csv(bench_rows(table));
  const std::string csv = experiment_summary_csv(table);
  const std::string json = experiment_summary_json(table);
  out << (o.format == "csv" ? csv : json);
  const std::string base = cat("experiment_", o.experiment);
  emit("experiment", o,
       {{base + "_runs.csv", runs}, {base + "_summary.csv", csv}, {base + "_summary.json", json}});
  return kExitOk;
}

int cmd_reuse(const Options& o, std::ostream& out) {
  if (o.blocks < 1) throw ConfigError("--blocks must be >= 1");
  if (!(o.r > 0.0 && o.r < 1.0)) throw ConfigError("--r must lie in (0, 1)");
  const ReuseMatrix closed = reuse_matrix(o.blocks, o.r);
  std::vector<std::pair<std::string, std::string>> files{{"reuse.csv", reuse_csv(closed)},
                                                         {"reuse.json", reuse_json(closed)}};
  out << (o.format == "csv" ? files[0].second : files[1].second);
  if (o.empirical_channels > 0) {
    const ReuseTap tap = o.tap == "before-shuffle" ? ReuseTap::BeforeShuffle : ReuseTap::BlockInput;
    const ReuseMatrix traced =
        empirical_reuse(make_v2_stack(o.blocks, o.empirical_channels), 0, tap);
    files.emplace_back("reuse_empirical.csv", reuse_csv(traced));
    files.emplace_back("reuse_empirical.json", reuse_json(traced));
    if (o.out_dir.empty()) {
      out << (o.format == "csv" ? "\n" + files[2].second : files[3].second);
    }
  }
  emit("reuse", o, files);
  return kExitOk;
}

void add_target(CLI::App* sub, Options& o) {
  sub->add_option("target", o.target, "Architecture name, e.g. shufflenet-v2@1x");
  sub->add_option("--config", o.config, "JSON network description")->check(CLI::ExistingFile);
  sub->add_option("--input-size", o.input_size, "Input resolution for named architectures")
      ->check(CLI::Range(0, 4096));
}

void add_output(CLI::App* sub, Options& o) {
  sub->add_option("--format", o.format, "Output format")
      ->check(CLI::IsMember({"tree", "csv"}))
      ->capture_default_str();
  sub->add_option("--out", o.out_dir, "Directory for result files and manifest.json");
}

void add_timing(CLI::App* sub, Options& o) {
  sub->add_option("--runs", o.runs, "Measured runs")->capture_default_str();
  sub->add_option("--warmup", o.warmup, "Warmup runs")->capture_default_str();
  sub->add_option("--seed", o.seed, "Weight and input seed")->capture_default_str();
  sub->add_option("--batch", o.batch, "Batch size")->capture_default_str();
  sub->add_option("--threads", o.threads, "Worker threads splitting the batch")
      ->capture_default_str();
  sub->add_flag("--pin", o.pin, "Pin the benchmark thread to one CPU");
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"ShuffleNet operator library: cost analysis, guideline lint and benchmarks",
               "shufflenet"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  CLI::App* analyze_cmd = app.add_subcommand("analyze", "FLOPs, MAC and parameter counts");
  add_target(analyze_cmd, o);
  add_output(analyze_cmd, o);

  CLI::App* lint_cmd = app.add_subcommand("lint", "Check the G1-G4 guidelines");
  add_target(lint_cmd, o);
  add_output(lint_cmd, o);
  lint_cmd->add_option("--g1-max-ratio", o.thresholds.g1_max_ratio)->capture_default_str();
  lint_cmd->add_option("--g2-max-groups", o.thresholds.g2_max_groups)->capture_default_str();
  lint_cmd->add_option("--g3-max-fragments", o.thresholds.g3_max_fragments)
      ->capture_default_str();
  lint_cmd->add_option("--g4-max-share", o.thresholds.g4_max_share)->capture_default_str();

  CLI::App* bench_cmd = app.add_subcommand("bench", "Measure latency of one network");
  add_target(bench_cmd, o);
  add_output(bench_cmd, o);
  add_timing(bench_cmd, o);

  CLI::App* exp_cmd = app.add_subcommand("experiment", "Run a guideline benchmark table");
  exp_cmd->add_option("experiment", o.experiment, "g1, g2, g3 or g4")
      ->required()
      ->check(CLI::IsMember({"g1", "g2", "g3", "g4"}));
  exp_cmd->add_option("--scales", o.scales, "Channel scale factors")
      ->delimiter(',')
      ->capture_default_str();
  exp_cmd->add_option("--input-size", o.input_size, "Spatial size (default 56)")
      ->check(CLI::Range(0, 4096));
  add_output(exp_cmd, o);
  add_timing(exp_cmd, o);

  CLI::App* reuse_cmd = app.add_subcommand("reuse", "Feature-reuse connectivity matrix");
  reuse_cmd->add_option("--blocks", o.blocks, "Number of blocks")->capture_default_str();
  reuse_cmd->add_option("--r", o.r, "Identity-branch fraction")->capture_default_str();
  reuse_cmd->add_option("--empirical", o.empirical_channels,
                        "Also trace a stack of v2 units with this many channels");
  reuse_cmd->add_option("--tap", o.tap, "Where the trace observes block inputs")
      ->check(CLI::IsMember({"input", "before-shuffle"}))
      ->capture_default_str();
  add_output(reuse_cmd, o);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  // The reuse matrix is a grid; default it to CSV unless asked otherwise.
  const bool format_given = std::find(args.begin(), args.end(), "--format") != args.end() ||
                            std::any_of(args.begin(), args.end(), [](const std::string& a) {
                              return a.rfind("--format=", 0) == 0;
                            });
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*analyze_cmd) return cmd_analyze(o, out);
    if (*lint_cmd) return cmd_lint(o, out);
    if (*bench_cmd) return cmd_bench(o, out);
    if (*exp_cmd) return cmd_experiment(o, out);
    if (*reuse_cmd) {
      if (!format_given) o.format = "csv";
      return cmd_reuse(o, out);
    }
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace shufflenet
