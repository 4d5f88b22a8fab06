#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "shufflenet/architectures.hpp"
#include "shufflenet/graph.hpp"
#include "shufflenet/tensor.hpp"

namespace shufflenet {

struct BenchConfig {
  int runs = 100;
  int warmup = 10;
  int batch = 1;
  // Spatial size for graphs the harness builds itself (experiment nets,
  // named architectures). 0 picks the builder's default.
  int input_size = 0;
  bool pin_thread = false;
  std::uint64_t seed = 0;
  // >1 splits the batch over worker threads. Not used for acceptance.
  int threads = 1;

  void validate() const;
};

/// Runtime buckets of the decomposition: conv is dense and group conv,
/// elementwise covers depthwise conv, ReLU, add, sigmoid and channel
/// multiply, data covers split, concat, shuffle and pooling.
enum class TimeCategory { Conv, Elementwise, Data, Fc };

inline constexpr TimeCategory kAllTimeCategories[] = {
    TimeCategory::Conv, TimeCategory::Elementwise, TimeCategory::Data, TimeCategory::Fc};

std::string_view to_string(TimeCategory c);
TimeCategory time_category(const Node& node);

struct CategoryShares {
  double conv = 0.0;
  double elementwise = 0.0;
  double data = 0.0;
  double fc = 0.0;

  double get(TimeCategory c) const;
  double sum() const { return conv + elementwise + data + fc; }
};

struct BenchResult {
  BenchConfig config;
  std::vector<std::int64_t> wall_ns;  // one per measured run
  double mean_ns = 0.0;
  double std_ns = 0.0;  // sample standard deviation, 0 for a single run
  double median_ns = 0.0;
  // Per node, summed over measured runs; the input node is never timed.
  std::vector<std::int64_t> node_ns;
  std::vector<TimeCategory> node_category;
  CategoryShares shares;
  // Output of the last measured run and whether every run reproduced it
  // bit for bit.
  std::optional<Tensor> output;
  bool outputs_consistent = true;
};

/// Warmup runs, then `runs` timed runs of the whole graph on a seeded
/// random input. Weights and input depend only on config.seed.
BenchResult run_bench(const Graph& graph, const BenchConfig& config);

/// Normalized category shares of the per-node timings. A result without
/// any timed time is attributed entirely to data movement.
CategoryShares decompose_runtime(const BenchResult& result);

struct ExperimentCell {
  BenchResult result;
  std::int64_t flops = 0;
  std::int64_t mac = 0;
};

/// Rows are configurations, columns are scales.
struct ExperimentTable {
  Experiment experiment = Experiment::G1;
  std::vector<std::string> rows;
  std::vector<std::string> columns;
  std::vector<int> scales;
  std::vector<std::vector<ExperimentCell>> cells;  // [row][column]
};

/// Benchmarks every guideline net of `e` at each scale in `scales`.
ExperimentTable run_experiment(Experiment e, const std::vector<int>& scales,
                               const BenchConfig& config);

/// Informational trend check for g2 at scale 1: true when median latency is
/// non-decreasing in g for all but at most one adjacent row pair. nullopt
/// for other experiments or when scale 1 was not run.
std::optional<bool> g2_trend_holds(const ExperimentTable& table);

}  // namespace shufflenet
