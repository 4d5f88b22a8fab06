#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "shufflenet/cli.hpp"
#include "shufflenet/config.hpp"
#include "shufflenet/cost_model.hpp"
#include "shufflenet/error.hpp"
#include "shufflenet/report.hpp"

using namespace shufflenet;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string config_path(const char* name) { return std::string(SHUFFLENET_CONFIG_DIR) + "/" + name; }

fs::path scratch_dir(const char* name) {
  const fs::path p = fs::temp_directory_path() / "shufflenet_cli_test" / name;
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p);
  return {std::istreambuf_iterator<char>(f), {}};
}

}  // namespace

TEST_CASE("analyze") {
  const Run r = cli({"analyze", "shufflenet-v2@1x"});
  REQUIRE(r.code == kExitOk);
  const json j = json::parse(r.out);
  CHECK(j["flops"].get<double>() == doctest::Approx(146e6).epsilon(0.03));

  const Run half = cli({"analyze", "shufflenet-v2@0.5x", "--format", "csv"});
  REQUIRE(half.code == kExitOk);
  const auto rows = parse_csv(half.out);
  CHECK(rows[1][0] == "total");
  CHECK(static_cast<double>(parse_int(rows[1][4])) == doctest::Approx(1.4e6).epsilon(0.05));

  const Run file = cli({"analyze", "--config", config_path("shufflenet_v2_1x.json")});
  CHECK(file.code == kExitOk);
  CHECK(json::parse(file.out)["flops"] == j["flops"]);
}

TEST_CASE("usage errors exit 2") {
  CHECK(cli({}).code == kExitUsage);
  CHECK(cli({"analyze"}).code == kExitUsage);
  CHECK(cli({"analyze", "shufflenet-v9@1x"}).code == kExitUsage);
  CHECK(cli({"analyze", "--config", "/nonexistent/net.json"}).code == kExitUsage);
  CHECK(cli({"analyze", "shufflenet-v2@1x", "--format", "xml"}).code == kExitUsage);
  CHECK(cli({"experiment", "g7"}).code == kExitUsage);
  CHECK(cli({"experiment", "g1", "--scales", "3"}).code == kExitUsage);
  CHECK(cli({"bench", "shufflenet-v2@0.5x", "--runs", "0"}).code == kExitUsage);
  CHECK(cli({"reuse", "--r", "1.5"}).code == kExitUsage);
  CHECK(cli({"--version"}).code == kExitOk);
  CHECK(cli({"--help"}).code == kExitOk);

  const fs::path dir = scratch_dir("bad_config");
  fs::create_directories(dir);
  std::ofstream(dir / "bad.json") << "{\n  \"arch\": \"shufflenet-v2@1x\",\n  oops\n}\n";
  const Run bad = cli({"analyze", "--config", (dir / "bad.json").string()});
  CHECK(bad.code == kExitUsage);
  CHECK(bad.err.find("bad.json:3") != std::string::npos);
}

TEST_CASE("config files") {
  const Target tiny = load_config(config_path("tiny_stack.json"));
  CHECK(tiny.name == "tiny");
  CHECK(tiny.graph.output_shape() == FeatureShape{96, 7, 7});
  CHECK(tiny.graph.blocks().size() >= 6);

  const Run v1 = cli({"lint", "--config", config_path("v1_g8_stack.json")});
  CHECK(v1.code == kExitFindings);

  CHECK_THROWS_AS(parse_config(R"({"name": "x", "input": {"channels": 8, "height": 4, "width": 4},
      "blocks": [{"kind": "v2_basic", "strde": 2}]})"),
                  ConfigError);
  try {
    parse_config(R"({"name": "x", "input": {"channels": 8, "height": 4, "width": 4},
        "blocks": [{"kind": "v2_basic"}, {"kind": "v2_down"}]})",
                 "net.json");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("blocks[1]") != std::string::npos);
  }
}

TEST_CASE("lint") {
  const Run v1 = cli({"lint", "shufflenet-v1@1x"});
  CHECK(v1.code == kExitFindings);
  const json j = json::parse(v1.out);
  bool g1 = false, g2 = false;
  for (const auto& f : j["findings"]) {
    g1 |= f["guideline"] == "G1";
    g2 |= f["guideline"] == "G2";
  }
  CHECK(g1);
  CHECK(g2);

  CHECK(cli({"lint", "shufflenet-v2@1x"}).code == kExitOk);
  CHECK(cli({"lint", "shufflenet-v2@1x", "--g2-max-groups", "1"}).code == kExitOk);
  CHECK(cli({"lint", "shufflenet-v1@1x", "--g1-max-ratio", "100", "--g2-max-groups", "8",
             "--g3-max-fragments", "10", "--g4-max-share", "1"})
            .code == kExitOk);
}

TEST_CASE("bench writes rows and a manifest") {
  const fs::path dir = scratch_dir("bench");
  const Run r = cli({"bench", "shufflenet-v2@0.5x", "--input-size", "64", "--runs", "3",
                     "--warmup", "1", "--seed", "9", "--format", "csv", "--out", dir.string()});
  REQUIRE(r.code == kExitOk);
  const auto rows = parse_bench_csv(r.out);
  CHECK(rows.size() == 3);
  CHECK(rows[2].run_index == 2);
  CHECK(parse_bench_csv(slurp(dir / "bench.csv")).size() == 3);

  const json m = json::parse(slurp(dir / "manifest.json"));
  CHECK(m["subcommand"] == "bench");
  CHECK(m["seed"] == 9);
  CHECK(m["version"] == std::string(kVersion));
  CHECK(m["config"]["runs"] == 3);
  CHECK(m["files"].size() == 2);
  CHECK(m.contains("host"));
  CHECK(m["timestamp"].get<std::string>().back() == 'Z');
  CHECK(json::parse(slurp(dir / "bench_summary.json"))["result"]["runs"] == 3);
}

TEST_CASE("experiment") {
  const fs::path dir = scratch_dir("experiment");
  const Run r = cli({"experiment", "g1", "--scales", "1", "--runs", "2", "--warmup", "0",
                     "--input-size", "8", "--format", "csv", "--out", dir.string()});
  REQUIRE(r.code == kExitOk);
  const auto rows = parse_csv(r.out);
  REQUIRE(rows.size() == 5);
  CHECK(rows[0][0] == "config");
  CHECK(rows[1][0] == "1:1");
  CHECK(parse_bench_csv(slurp(dir / "experiment_g1_runs.csv")).size() == 4 * 2);
  CHECK(fs::exists(dir / "experiment_g1_summary.json"));

  const Run g2 = cli({"experiment", "g2", "--scales", "1,2", "--runs", "1", "--warmup", "0",
                      "--input-size", "8"});
  REQUIRE(g2.code == kExitOk);
  const json j = json::parse(g2.out);
  CHECK(j["columns"] == json::array({"x1", "x2"}));
  CHECK(j.contains("g2_trend_informational"));
}

TEST_CASE("reuse") {
  const Run r = cli({"reuse", "--blocks", "10", "--r", "0.5"});
  REQUIRE(r.code == kExitOk);
  const ReuseMatrix m = parse_reuse_csv(r.out, 0.5);
  CHECK(m.values == reuse_matrix(10, 0.5).values);

  const fs::path dir = scratch_dir("reuse");
  const Run e = cli({"reuse", "--blocks", "4", "--empirical", "16", "--tap", "before-shuffle",
                     "--out", dir.string()});
  REQUIRE(e.code == kExitOk);
  const ReuseMatrix traced = parse_reuse_csv(slurp(dir / "reuse_empirical.csv"), 0.5);
  CHECK(traced.blocks == 4);
  CHECK(traced.at(0, 1) == doctest::Approx(0.5));
  CHECK(json::parse(slurp(dir / "manifest.json"))["files"].size() == 4);
}
