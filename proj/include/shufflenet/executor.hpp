#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "shufflenet/graph.hpp"
#include "shufflenet/tensor.hpp"

namespace shufflenet {

/// Called after each executed node with the node id and its wall time.
using NodeTimer = std::function<void(std::size_t node, std::chrono::nanoseconds elapsed)>;

/// Runs a Graph on CPU through the tensor kernels.
///
/// Weights are drawn once at construction: kernel and bias values uniform in
/// [-0.1, 0.1], folded batch-norm scale 1 + U(-0.1, 0.1) and shift
/// U(-0.1, 0.1), all from a generator seeded with `seed`. Execution is
/// single-threaded and const, so one executor may be shared by threads that
/// run independent inputs.
class Executor {
 public:
  explicit Executor(Graph graph, std::uint64_t seed = 0);

  const Graph& graph() const { return graph_; }

  /// Parameters of a Conv or FullyConnected node, nullptr otherwise.
  const Weights* weights(std::size_t node) const;
  /// Replaces a Conv or FullyConnected node's parameters. Sizes must match
  /// the ones drawn at construction.
  void set_weights(std::size_t node, Weights weights);

  Tensor run(const Tensor& input, const NodeTimer& timer = {}) const;

  /// Every node's outputs, indexed by node id then port. Keeps all
  /// intermediates alive, so use it for inspection rather than timing.
  std::vector<std::vector<Tensor>> run_all(const Tensor& input) const;

 private:
  std::vector<Tensor> eval(std::size_t id, const std::vector<const Tensor*>& args,
                           const Tensor& input) const;
  void check_input(const Tensor& input) const;

  Graph graph_;
  std::vector<std::optional<Weights>> weights_;
};

}  // namespace shufflenet
