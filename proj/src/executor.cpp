#include "shufflenet/executor.hpp"

#include <random>

#include "shufflenet/error.hpp"
#include "strcat.hpp"

namespace shufflenet {

using detail::cat;

namespace {

std::vector<float> uniform(std::mt19937_64& rng, std::size_t count, float lo, float hi) {
  std::uniform_real_distribution<float> dist(lo, hi);
  std::vector<float> v(count);
  for (float& x : v) x = dist(rng);
  return v;
}

}  // namespace

Executor::Executor(Graph graph, std::uint64_t seed)
    : graph_(std::move(graph)), weights_(graph_.size()) {
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < graph_.size(); ++i) {
    const Node& node = graph_.node(i);
    if (node.op == OpKind::Conv) {
      const ConvAttrs& a = node.conv();
      Weights w;
      w.values = uniform(rng, a.spec.weight_count(), -0.1f, 0.1f);
      if (a.bias) w.bias = uniform(rng, a.spec.c_out, -0.1f, 0.1f);
      if (a.scale_shift) {
        w.scale_shift = ScaleShift{uniform(rng, a.spec.c_out, 0.9f, 1.1f),
                                   uniform(rng, a.spec.c_out, -0.1f, 0.1f)};
      }
      weights_[i] = std::move(w);
    } else if (node.op == OpKind::FullyConnected) {
      const FcAttrs& a = node.fc();
      const std::size_t in_c = static_cast<std::size_t>(graph_.shape(node.inputs[0]).c);
      Weights w;
      w.values = uniform(rng, in_c * a.outputs, -0.1f, 0.1f);
      if (a.bias) w.bias = uniform(rng, a.outputs, -0.1f, 0.1f);
      weights_[i] = std::move(w);
    }
  }
}

const Weights* Executor::weights(std::size_t node) const {
  const auto& w = weights_.at(node);
  return w ? &*w : nullptr;
}

void Executor::set_weights(std::size_t node, Weights w) {
  auto& slot = weights_.at(node);
  if (!slot) throw GraphError(cat("node ", node, " (", graph_.node(node).name, ") has no weights"));
  const auto size = [](const auto& opt) { return opt ? opt->size() : std::size_t{0}; };
  const bool same = w.values.size() == slot->values.size() && size(w.bias) == size(slot->bias) &&
                    w.scale_shift.has_value() == slot->scale_shift.has_value() &&
                    (!w.scale_shift || (w.scale_shift->scale.size() == slot->scale_shift->scale.size() &&
                                        w.scale_shift->shift.size() == slot->scale_shift->shift.size()));
  if (!same) throw ShapeError(cat("node ", node, " (", graph_.node(node).name, "): weight layout differs"));
  slot = std::move(w);
}

void Executor::check_input(const Tensor& input) const {
  const FeatureShape& s = graph_.input_shape();
  if (input.c() != s.c || input.h() != s.h || input.w() != s.w) {
    throw GraphError(cat("graph expects input (", s.c, ",", s.h, ",", s.w, "), got (",
                         input.c(), ",", input.h(), ",", input.w(), ")"));
  }
}

std::vector<Tensor> Executor::eval(std::size_t id, const std::vector<const Tensor*>& args,
                                   const Tensor& input) const {
  const Node& node = graph_.node(id);
  switch (node.op) {
    case OpKind::Input:
      return {input};
    case OpKind::Conv: {
      const ConvAttrs& a = node.conv();
      return {conv2d(*args[0], *weights_[id], a.spec,
                     a.relu ? Activation::Relu : Activation::None)};
    }
    case OpKind::FullyConnected:
      return {fully_connected(*args[0], *weights_[id])};
    case OpKind::Relu:
      return {relu(*args[0])};
    case OpKind::Sigmoid:
      return {sigmoid(*args[0])};
    case OpKind::Add:
      return {add_tensors(*args[0], *args[1])};
    case OpKind::ChannelMul:
      return {multiply_channels(*args[0], *args[1])};
    case OpKind::Split: {
      auto [a, b] = channel_split(*args[0], node.split_second());
      std::vector<Tensor> out;
      out.push_back(std::move(a));
      out.push_back(std::move(b));
      return out;
    }
    case OpKind::Concat:
      return {concat_channels(*args[0], *args[1])};
    case OpKind::Shuffle:
      return {channel_shuffle(*args[0], node.shuffle_groups())};
    case OpKind::MaxPool: {
      const PoolAttrs& p = node.pool();
      return {maxpool(*args[0], p.kernel, p.stride, p.padding)};
    }
    case OpKind::AvgPool: {
      const PoolAttrs& p = node.pool();
      return {avg_pool(*args[0], p.kernel, p.stride, p.padding)};
    }
    case OpKind::GlobalAvgPool:
      return {global_avg_pool(*args[0])};
  }
  throw GraphError(cat("node ", id, " (", node.name, "): unsupported op"));
}

Tensor Executor::run(const Tensor& input, const NodeTimer& timer) const {
  check_input(input);
  const std::size_t n = graph_.size();

  // Release each intermediate after its last consumer.
  std::vector<int> remaining(n, 0);
  for (const Node& node : graph_.nodes()) {
    for (const ValueRef& in : node.inputs) ++remaining[in.node];
  }
  ++remaining[graph_.output().node];

  std::vector<std::vector<Tensor>> values(n);
  std::vector<const Tensor*> args;
  for (std::size_t id = 0; id < n; ++id) {
    const Node& node = graph_.node(id);
    args.clear();
    for (const ValueRef& in : node.inputs) args.push_back(&values[in.node][in.port]);
    try {
      if (timer && node.op != OpKind::Input) {
        const auto t0 = std::chrono::steady_clock::now();
        values[id] = eval(id, args, input);
        const auto t1 = std::chrono::steady_clock::now();
        timer(id, std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0));
      } else {
        values[id] = eval(id, args, input);
      }
    } catch (const std::exception& e) {
      throw GraphError(cat("node ", id, " (", node.name, "): ", e.what()));
    }
    for (const ValueRef& in : node.inputs) {
      if (--remaining[in.node] == 0) values[in.node].clear();
    }
  }
  const ValueRef out = graph_.output();
  return std::move(values[out.node][out.port]);
}

std::vector<std::vector<Tensor>> Executor::run_all(const Tensor& input) const {
  check_input(input);
  std::vector<std::vector<Tensor>> values(graph_.size());
  std::vector<const Tensor*> args;
  for (std::size_t id = 0; id < graph_.size(); ++id) {
    const Node& node = graph_.node(id);
    args.clear();
    for (const ValueRef& in : node.inputs) args.push_back(&values[in.node][in.port]);
    try {
      values[id] = eval(id, args, input);
    } catch (const std::exception& e) {
      throw GraphError(cat("node ", id, " (", node.name, "): ", e.what()));
    }
  }
  return values;
}

}  // namespace shufflenet
