#include "shufflenet/bench.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>
#include <thread>

#if defined(__linux__)
#include <pthread.h>
#include <sched.h>
#endif
#if defined(__SSE__)
#include <xmmintrin.h>
#endif

#include "shufflenet/cost_model.hpp"
#include "shufflenet/error.hpp"
#include "shufflenet/executor.hpp"
#include "strcat.hpp"

namespace shufflenet {

using detail::cat;

void BenchConfig::validate() const {
  if (runs < 1) throw ConfigError(cat("runs must be >= 1, got ", runs));
  if (warmup < 0) throw ConfigError(cat("warmup must be >= 0, got ", warmup));
  if (batch < 1) throw ConfigError(cat("batch must be >= 1, got ", batch));
  if (input_size < 0) throw ConfigError(cat("input size must be >= 0, got ", input_size));
  if (threads < 1) throw ConfigError(cat("threads must be >= 1, got ", threads));
}

std::string_view to_string(TimeCategory c) {
  switch (c) {
    case TimeCategory::Conv: return "conv";
    case TimeCategory::Elementwise: return "elementwise";
    case TimeCategory::Data: return "data";
    case TimeCategory::Fc: return "fc";
  }
  return "?";
}

TimeCategory time_category(const Node& node) {
  switch (node.op) {
    case OpKind::Conv:
      return node.is_depthwise_conv() ? TimeCategory::Elementwise : TimeCategory::Conv;
    case OpKind::FullyConnected:
      return TimeCategory::Fc;
    case OpKind::Relu:
    case OpKind::Sigmoid:
    case OpKind::Add:
    case OpKind::ChannelMul:
      return TimeCategory::Elementwise;
    default:
      return TimeCategory::Data;
  }
}

double CategoryShares::get(TimeCategory c) const {
  switch (c) {
    case TimeCategory::Conv: return conv;
    case TimeCategory::Elementwise: return elementwise;
    case TimeCategory::Data: return data;
    case TimeCategory::Fc: return fc;
  }
  return 0.0;
}

CategoryShares decompose_runtime(const BenchResult& result) {
  if (result.node_ns.size() != result.node_category.size()) {
    throw std::invalid_argument("decompose_runtime: timing and category counts differ");
  }
  std::array<std::int64_t, 4> totals{};
  for (std::size_t i = 0; i < result.node_ns.size(); ++i) {
    totals[static_cast<std::size_t>(result.node_category[i])] += result.node_ns[i];
  }
  const std::int64_t all = std::accumulate(totals.begin(), totals.end(), std::int64_t{0});
  CategoryShares s;
  if (all <= 0) {
    s.data = 1.0;
    return s;
  }
  const auto share = [&](TimeCategory c) {
    return static_cast<double>(totals[static_cast<std::size_t>(c)]) / static_cast<double>(all);
  };
  s.conv = share(TimeCategory::Conv);
  s.elementwise = share(TimeCategory::Elementwise);
  s.data = share(TimeCategory::Data);
  s.fc = share(TimeCategory::Fc);
  return s;
}

namespace {

// Keeps denormals from skewing timings of near-zero activations.
class FlushDenormals {
 public:
  FlushDenormals() {
#if defined(__SSE__)
    saved_ = _mm_getcsr();
    _mm_setcsr(saved_ | 0x8040);
#endif
  }
  ~FlushDenormals() {
#if defined(__SSE__)
    _mm_setcsr(saved_);
#endif
  }
  FlushDenormals(const FlushDenormals&) = delete;
  FlushDenormals& operator=(const FlushDenormals&) = delete;

 private:
#if defined(__SSE__)
  unsigned saved_ = 0;
#endif
};

class PinThread {
 public:
  explicit PinThread(bool enable) {
#if defined(__linux__)
    if (!enable) return;
    if (pthread_getaffinity_np(pthread_self(), sizeof(saved_), &saved_) != 0) return;
    int cpu = sched_getcpu();
    if (cpu < 0 || !CPU_ISSET(cpu, &saved_)) cpu = 0;
    cpu_set_t one;
    CPU_ZERO(&one);
    CPU_SET(cpu, &one);
    pinned_ = pthread_setaffinity_np(pthread_self(), sizeof(one), &one) == 0;
#else
    (void)enable;
#endif
  }
  ~PinThread() {
#if defined(__linux__)
    if (pinned_) pthread_setaffinity_np(pthread_self(), sizeof(saved_), &saved_);
#endif
  }
  PinThread(const PinThread&) = delete;
  PinThread& operator=(const PinThread&) = delete;

 private:
#if defined(__linux__)
  cpu_set_t saved_{};
  bool pinned_ = false;
#endif
};

Tensor random_input(const FeatureShape& s, int batch, std::uint64_t seed) {
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_real_distribution<float> dist(-1.0f, 1.0f);
  Tensor t({batch, s.c, s.h, s.w});
  for (float& v : t.data()) v = dist(rng);
  return t;
}

Tensor batch_slice(const Tensor& t, int begin, int count) {
  const std::size_t item = static_cast<std::size_t>(t.c()) * t.h() * t.w();
  std::vector<float> v(t.data().begin() + static_cast<std::ptrdiff_t>(item * begin),
                       t.data().begin() + static_cast<std::ptrdiff_t>(item * (begin + count)));
  return Tensor({count, t.c(), t.h(), t.w()}, std::move(v));
}

Tensor batch_join(const std::vector<Tensor>& parts) {
  const Shape& s0 = parts.front().shape();
  int n = 0;
  std::vector<float> v;
  for (const Tensor& p : parts) {
    n += p.n();
    v.insert(v.end(), p.data().begin(), p.data().end());
  }
  return Tensor({n, s0.c, s0.h, s0.w}, std::move(v));
}

// One forward pass, optionally split over worker threads by batch item.
Tensor forward(const Executor& ex, const Tensor& input, int threads,
               std::vector<std::int64_t>* node_ns) {
  const int workers = std::min(threads, input.n());
  if (workers <= 1) {
    if (!node_ns) return ex.run(input);
    return ex.run(input, [node_ns](std::size_t id, std::chrono::nanoseconds dt) {
      (*node_ns)[id] += dt.count();
    });
  }
  std::vector<Tensor> slices;
  std::vector<std::vector<std::int64_t>> per_worker(
      workers, std::vector<std::int64_t>(ex.graph().size(), 0));
  std::vector<std::optional<Tensor>> outs(workers);
  std::vector<std::exception_ptr> errors(workers);
  const int n = input.n();
  for (int w = 0; w < workers; ++w) {
    const int begin = n * w / workers;
    const int end = n * (w + 1) / workers;
    slices.push_back(batch_slice(input, begin, end - begin));
  }
  {
    std::vector<std::jthread> pool;
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          auto& mine = per_worker[w];
          outs[w] = ex.run(slices[w], [&mine](std::size_t id, std::chrono::nanoseconds dt) {
            mine[id] += dt.count();
          });
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  if (node_ns) {
    for (const auto& mine : per_worker) {
      for (std::size_t i = 0; i < mine.size(); ++i) (*node_ns)[i] += mine[i];
    }
  }
  std::vector<Tensor> parts;
  for (auto& o : outs) parts.push_back(std::move(*o));
  return batch_join(parts);
}

double median_of(std::vector<std::int64_t> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  if (v.size() % 2 == 1) return static_cast<double>(v[m]);
  return (static_cast<double>(v[m - 1]) + static_cast<double>(v[m])) / 2.0;
}

}  // namespace

BenchResult run_bench(const Graph& graph, const BenchConfig& config) {
  config.validate();
  const Executor ex(graph, config.seed);
  const Tensor input = random_input(graph.input_shape(), config.batch, config.seed);

  BenchResult r;
  r.config = config;
  r.node_ns.assign(graph.size(), 0);
  r.node_category.reserve(graph.size());
  for (const Node& node : graph.nodes()) r.node_category.push_back(time_category(node));

  FlushDenormals ftz;
  PinThread pin(config.pin_thread && config.threads == 1);

  for (int i = 0; i < config.warmup; ++i) forward(ex, input, config.threads, nullptr);

  r.wall_ns.reserve(config.runs);
  for (int i = 0; i < config.runs; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Tensor out = forward(ex, input, config.threads, &r.node_ns);
    const auto t1 = std::chrono::steady_clock::now();
    r.wall_ns.push_back(std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0).count());
    if (r.output && !(*r.output == out)) r.outputs_consistent = false;
    r.output = std::move(out);
  }

  const double n = static_cast<double>(r.wall_ns.size());
  double sum = 0.0;
  for (std::int64_t t : r.wall_ns) sum += static_cast<double>(t);
  r.mean_ns = sum / n;
  if (r.wall_ns.size() > 1) {
    double ss = 0.0;
    for (std::int64_t t : r.wall_ns) {
      const double d = static_cast<double>(t) - r.mean_ns;
      ss += d * d;
    }
    r.std_ns = std::sqrt(ss / (n - 1.0));
  }
  r.median_ns = median_of(r.wall_ns);
  r.shares = decompose_runtime(r);
  return r;
}

ExperimentTable run_experiment(Experiment e, const std::vector<int>& scales,
                               const BenchConfig& config) {
  config.validate();
  if (scales.empty()) throw ConfigError("experiment needs at least one scale");
  const int input_size = config.input_size > 0 ? config.input_size : 56;

  ExperimentTable table;
  table.experiment = e;
  table.rows = experiment_rows(e);
  table.scales = scales;
  for (int s : scales) table.columns.push_back(experiment_column(e, s));
  table.cells.resize(table.rows.size());
  for (std::size_t row = 0; row < table.rows.size(); ++row) {
    for (int s : scales) {
      const Graph g = build_guideline_net(e, row, s, input_size);
      const CostReport cost = analyze(g);
      table.cells[row].push_back({run_bench(g, config), cost.flops, cost.mac});
    }
  }
  return table;
}

std::optional<bool> g2_trend_holds(const ExperimentTable& table) {
  if (table.experiment != Experiment::G2) return std::nullopt;
  const auto it = std::find(table.scales.begin(), table.scales.end(), 1);
  if (it == table.scales.end()) return std::nullopt;
  const std::size_t col = static_cast<std::size_t>(it - table.scales.begin());
  int misses = 0;
  for (std::size_t row = 1; row < table.cells.size(); ++row) {
    if (table.cells[row][col].result.median_ns < table.cells[row - 1][col].result.median_ns) {
      ++misses;
    }
  }
  return misses <= 1;
}

}  // namespace shufflenet
