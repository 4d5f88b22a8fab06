#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "shufflenet/bench.hpp"
#include "shufflenet/cost_model.hpp"
#include "shufflenet/feature_reuse.hpp"

namespace shufflenet {

// Serialization of analysis and benchmark results. "Tree" output is JSON.
// Every CSV document starts with a header row except the reuse matrix,
// which is a bare n x n grid.

/// Shortest text that parses back to exactly `v`.
std::string format_double(double v);
/// Whole-string parse; throws std::invalid_argument on trailing garbage.
double parse_double(std::string_view text);
std::int64_t parse_int(std::string_view text);

/// RFC 4180 field quoting, only when needed.
std::string csv_field(std::string_view text);
/// Rows of fields. Handles quoted fields; ignores a trailing newline.
std::vector<std::vector<std::string>> parse_csv(std::string_view text);

struct StageCost {
  std::string stage;
  std::int64_t flops = 0;
  std::int64_t mac = 0;
  std::int64_t params = 0;
  int blocks = 0;
};

/// Per-stage totals in order of first appearance. Blocks without a stage
/// are grouped under their own label.
std::vector<StageCost> stage_breakdown(const CostReport& report);

std::string cost_report_json(const CostReport& report, std::string_view target);
/// Columns: scope,name,flops,mac,params.
std::string cost_report_csv(const CostReport& report);

std::string lint_json(const std::vector<LintFinding>& findings,
                      const LintThresholds& thresholds, std::string_view target);
/// Columns: guideline,severity,block,value,threshold,nodes,message.
std::string lint_csv(const std::vector<LintFinding>& findings);

struct BenchRow {
  std::string experiment;
  std::string config;
  std::string scale;
  int run_index = 0;
  std::int64_t wall_ns = 0;
};

inline constexpr std::string_view kBenchCsvHeader = "experiment,config,scale,run_index,wall_ns";

/// One row per measured run.
std::vector<BenchRow> bench_rows(std::string_view experiment, std::string_view config,
                                 std::string_view scale, const BenchResult& result);
std::vector<BenchRow> bench_rows(const ExperimentTable& table);
std::string bench_csv(const std::vector<BenchRow>& rows);
std::vector<BenchRow> parse_bench_csv(std::string_view text);

std::string bench_summary_json(const BenchResult& result, std::string_view target);

/// Summary table: one row per configuration, one median latency
/// column (ms) per scale, then one analytical MAC column per scale.
std::string experiment_summary_csv(const ExperimentTable& table);
std::string experiment_summary_json(const ExperimentTable& table);

std::string reuse_csv(const ReuseMatrix& m);
/// Inverse of reuse_csv; `r` is not part of the grid and is passed back in.
ReuseMatrix parse_reuse_csv(std::string_view text, double r);
std::string reuse_json(const ReuseMatrix& m);

}  // namespace shufflenet
