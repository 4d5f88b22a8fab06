#include "shufflenet/graph.hpp"

#include <algorithm>

#include "shufflenet/error.hpp"
#include "strcat.hpp"

namespace shufflenet {

using detail::cat;

std::string_view to_string(OpKind op) {
  switch (op) {
    case OpKind::Input: return "input";
    case OpKind::Conv: return "conv";
    case OpKind::FullyConnected: return "fc";
    case OpKind::Relu: return "relu";
    case OpKind::Sigmoid: return "sigmoid";
    case OpKind::Add: return "add";
    case OpKind::ChannelMul: return "channel_mul";
    case OpKind::Split: return "split";
    case OpKind::Concat: return "concat";
    case OpKind::Shuffle: return "shuffle";
    case OpKind::MaxPool: return "maxpool";
    case OpKind::AvgPool: return "avgpool";
    case OpKind::GlobalAvgPool: return "global_avgpool";
  }
  return "unknown";
}

std::string_view to_string(Category category) {
  switch (category) {
    case Category::Conv: return "conv";
    case Category::Elementwise: return "elementwise";
    case Category::ShuffleSplitConcat: return "shuffle_or_split_or_concat";
    case Category::Pool: return "pool";
    case Category::Fc: return "fc";
  }
  return "unknown";
}

std::string_view to_string(BlockRole role) {
  switch (role) {
    case BlockRole::Plain: return "plain";
    case BlockRole::Stem: return "stem";
    case BlockRole::Unit: return "unit";
    case BlockRole::Downsample: return "downsample";
    case BlockRole::Head: return "head";
  }
  return "unknown";
}

Category mac_category(const Node& node) {
  switch (node.op) {
    case OpKind::Conv:
      return node.is_depthwise_conv() ? Category::Elementwise : Category::Conv;
    case OpKind::FullyConnected:
      return Category::Fc;
    case OpKind::Relu:
    case OpKind::Sigmoid:
    case OpKind::Add:
    case OpKind::ChannelMul:
      return Category::Elementwise;
    case OpKind::MaxPool:
    case OpKind::AvgPool:
    case OpKind::GlobalAvgPool:
      return Category::Pool;
    case OpKind::Input:
    case OpKind::Split:
    case OpKind::Concat:
    case OpKind::Shuffle:
      return Category::ShuffleSplitConcat;
  }
  return Category::ShuffleSplitConcat;
}

const FeatureShape& Graph::shape(ValueRef v) const {
  const Node& n = nodes_.at(v.node);
  if (v.port < 0 || static_cast<std::size_t>(v.port) >= n.outputs.size()) {
    throw GraphError(cat("node ", v.node, " (", n.name, ") has no output port ", v.port));
  }
  return n.outputs[v.port];
}

std::vector<std::size_t> Graph::block_nodes(int block) const {
  std::vector<std::size_t> ids;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].block == block) ids.push_back(i);
  }
  return ids;
}

std::size_t Graph::count(OpKind op) const {
  return static_cast<std::size_t>(std::count_if(
      nodes_.begin(), nodes_.end(), [op](const Node& n) { return n.op == op; }));
}

Graph Graph::reordered(std::span<const std::size_t> order) const {
  const std::size_t n = nodes_.size();
  if (order.size() != n) throw GraphError("reorder: permutation size mismatch");
  std::vector<std::size_t> new_id(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    if (order[i] >= n || new_id[order[i]] != n) {
      throw GraphError("reorder: not a permutation");
    }
    new_id[order[i]] = i;
  }
  if (order.front() != 0) throw GraphError("reorder: input node must stay first");

  Graph out;
  out.blocks_ = blocks_;
  out.nodes_.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Node node = nodes_[order[i]];
    for (ValueRef& in : node.inputs) {
      in.node = new_id[in.node];
      if (in.node >= i) {
        throw GraphError(cat("reorder: node ", node.name, " would precede its input"));
      }
    }
    out.nodes_.push_back(std::move(node));
  }
  out.output_ = {new_id[output_.node], output_.port};
  return out;
}

GraphBuilder::GraphBuilder(FeatureShape input) {
  if (input.c < 1 || input.h < 1 || input.w < 1) {
    throw ShapeError("graph input dimensions must be positive");
  }
  Node in;
  in.op = OpKind::Input;
  in.name = "input";
  in.outputs = {input};
  graph_.nodes_.push_back(std::move(in));
}

const FeatureShape& GraphBuilder::shape(ValueRef v) const { return graph_.shape(v); }

int GraphBuilder::begin_block(std::string label, std::string kind, BlockRole role,
                              std::string stage) {
  graph_.blocks_.push_back({std::move(label), std::move(kind), role, std::move(stage)});
  current_block_ = static_cast<int>(graph_.blocks_.size()) - 1;
  return current_block_;
}

std::string GraphBuilder::auto_name(std::string name, OpKind op) const {
  if (!name.empty()) {
    if (current_block_ >= 0) return graph_.blocks_[current_block_].label + "." + name;
    return name;
  }
  std::string base = current_block_ >= 0 ? graph_.blocks_[current_block_].label + "." : "";
  return cat(base, to_string(op), graph_.nodes_.size());
}

ValueRef GraphBuilder::push(Node node) {
  if (current_block_ < 0) begin_block("graph", "graph");
  node.block = current_block_;
  node.name = auto_name(std::move(node.name), node.op);
  graph_.nodes_.push_back(std::move(node));
  return {graph_.nodes_.size() - 1, 0};
}

ValueRef GraphBuilder::conv(ValueRef in, const ConvAttrs& attrs, std::string name) {
  const FeatureShape& s = shape(in);
  attrs.spec.validate();
  if (s.c != attrs.spec.c_in) {
    throw ShapeError(cat("conv ", name, ": input has ", s.c, " channels, spec expects ",
                         attrs.spec.c_in));
  }
  const auto [oh, ow] = attrs.spec.output_extent(s.h, s.w);
  Node node;
  node.op = OpKind::Conv;
  node.name = std::move(name);
  node.inputs = {in};
  node.attrs = attrs;
  node.outputs = {{attrs.spec.c_out, oh, ow}};
  return push(std::move(node));
}

ValueRef GraphBuilder::fully_connected(ValueRef in, int outputs, bool bias,
                                       std::string name) {
  const FeatureShape& s = shape(in);
  if (s.h != 1 || s.w != 1) {
    throw ShapeError(cat("fc ", name, ": input must be 1x1, got ", s.h, "x", s.w));
  }
  if (outputs < 1) throw ShapeError("fc: output count must be positive");
  Node node;
  node.op = OpKind::FullyConnected;
  node.name = std::move(name);
  node.inputs = {in};
  node.attrs = FcAttrs{outputs, bias};
  node.outputs = {{outputs, 1, 1}};
  return push(std::move(node));
}

namespace {

Node unary(OpKind op, ValueRef in, FeatureShape out, std::string name) {
  Node node;
  node.op = op;
  node.name = std::move(name);
  node.inputs = {in};
  node.outputs = {out};
  return node;
}

}  // namespace

ValueRef GraphBuilder::relu(ValueRef in, std::string name) {
  return push(unary(OpKind::Relu, in, shape(in), std::move(name)));
}

ValueRef GraphBuilder::sigmoid(ValueRef in, std::string name) {
  return push(unary(OpKind::Sigmoid, in, shape(in), std::move(name)));
}

ValueRef GraphBuilder::add(ValueRef a, ValueRef b, std::string name) {
  if (shape(a) != shape(b)) {
    throw ShapeError(cat("add ", name, ": operand shapes differ"));
  }
  Node node = unary(OpKind::Add, a, shape(a), std::move(name));
  node.inputs.push_back(b);
  return push(std::move(node));
}

ValueRef GraphBuilder::channel_mul(ValueRef x, ValueRef gate, std::string name) {
  const FeatureShape& g = shape(gate);
  if (g.c != shape(x).c || g.h != 1 || g.w != 1) {
    throw ShapeError(cat("channel_mul ", name, ": gate must be (c,1,1)"));
  }
  Node node = unary(OpKind::ChannelMul, x, shape(x), std::move(name));
  node.inputs.push_back(gate);
  return push(std::move(node));
}

std::pair<ValueRef, ValueRef> GraphBuilder::split(ValueRef in, int second,
                                                  std::string name) {
  const FeatureShape s = shape(in);
  if (second <= 0 || second >= s.c) {
    throw ShapeError(cat("split ", name, ": c_prime=", second, " outside (0, ", s.c, ")"));
  }
  Node node = unary(OpKind::Split, in, {s.c - second, s.h, s.w}, std::move(name));
  node.outputs.push_back({second, s.h, s.w});
  node.attrs = SplitAttrs{second};
  const ValueRef first = push(std::move(node));
  return {first, {first.node, 1}};
}

ValueRef GraphBuilder::concat(ValueRef a, ValueRef b, std::string name) {
  const FeatureShape& sa = shape(a);
  const FeatureShape& sb = shape(b);
  if (sa.h != sb.h || sa.w != sb.w) {
    throw ShapeError(cat("concat ", name, ": spatial extents differ"));
  }
  Node node = unary(OpKind::Concat, a, {sa.c + sb.c, sa.h, sa.w}, std::move(name));
  node.inputs.push_back(b);
  return push(std::move(node));
}

ValueRef GraphBuilder::shuffle(ValueRef in, int groups, std::string name) {
  const FeatureShape& s = shape(in);
  if (groups < 1 || s.c % groups != 0) {
    throw ShapeError(cat("shuffle ", name, ": ", s.c, " channels not divisible by g=",
                         groups));
  }
  Node node = unary(OpKind::Shuffle, in, s, std::move(name));
  node.attrs = ShuffleAttrs{groups};
  return push(std::move(node));
}

namespace {

FeatureShape pooled(const FeatureShape& s, const PoolAttrs& p) {
  if (p.kernel < 1 || p.stride < 1 || p.padding < 0 || p.kernel > s.h + 2 * p.padding ||
      p.kernel > s.w + 2 * p.padding) {
    throw ShapeError(cat("pool window ", p.kernel, " does not fit ", s.h, "x", s.w));
  }
  return {s.c, (s.h + 2 * p.padding - p.kernel) / p.stride + 1,
          (s.w + 2 * p.padding - p.kernel) / p.stride + 1};
}

}  // namespace

ValueRef GraphBuilder::max_pool(ValueRef in, int kernel, int stride, int padding,
                                std::string name) {
  const PoolAttrs p{kernel, stride, padding};
  Node node = unary(OpKind::MaxPool, in, pooled(shape(in), p), std::move(name));
  node.attrs = p;
  return push(std::move(node));
}

ValueRef GraphBuilder::avg_pool(ValueRef in, int kernel, int stride, int padding,
                                std::string name) {
  const PoolAttrs p{kernel, stride, padding};
  Node node = unary(OpKind::AvgPool, in, pooled(shape(in), p), std::move(name));
  node.attrs = p;
  return push(std::move(node));
}

ValueRef GraphBuilder::global_avg_pool(ValueRef in, std::string name) {
  const FeatureShape& s = shape(in);
  Node node = unary(OpKind::GlobalAvgPool, in, {s.c, 1, 1}, std::move(name));
  node.attrs = PoolAttrs{s.h, 1, 0};
  return push(std::move(node));
}

Graph GraphBuilder::finish(ValueRef output) && {
  graph_.shape(output);
  graph_.output_ = output;
  return std::move(graph_);
}

}  // namespace shufflenet
