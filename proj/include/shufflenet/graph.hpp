#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "shufflenet/tensor.hpp"

namespace shufflenet {

/// Per-image feature-map shape (channels, rows, cols); batch is a runtime
/// property of execution, not of the graph.
struct FeatureShape {
  int c = 1;
  int h = 1;
  int w = 1;

  std::size_t numel() const { return static_cast<std::size_t>(c) * h * w; }
  std::size_t plane() const { return static_cast<std::size_t>(h) * w; }
  friend bool operator==(const FeatureShape&, const FeatureShape&) = default;
};

enum class OpKind {
  Input,
  Conv,
  FullyConnected,
  Relu,
  Sigmoid,
  Add,
  ChannelMul,
  Split,
  Concat,
  Shuffle,
  MaxPool,
  AvgPool,
  GlobalAvgPool,
};

std::string_view to_string(OpKind op);

/// Cost categories. Depthwise convolutions are element-wise for memory
/// access accounting but conv for FLOPs.
enum class Category { Conv, Elementwise, ShuffleSplitConcat, Pool, Fc };

inline constexpr Category kAllCategories[] = {Category::Conv, Category::Elementwise,
                                              Category::ShuffleSplitConcat,
                                              Category::Pool, Category::Fc};

std::string_view to_string(Category category);

/// Output `port` of node `node`. Only Split has two ports.
struct ValueRef {
  std::size_t node = 0;
  int port = 0;
  friend bool operator==(const ValueRef&, const ValueRef&) = default;
};

/// A convolution with its fused epilogue. Folded batch norm (scale/shift)
/// and a trailing ReLU run inside the conv kernel, so they add no separate
/// feature-map traffic.
struct ConvAttrs {
  ConvSpec spec;
  bool bias = false;
  bool scale_shift = true;
  bool relu = false;
};

struct FcAttrs {
  int outputs = 1;
  bool bias = true;
};

struct PoolAttrs {
  int kernel = 1;
  int stride = 1;
  int padding = 0;
};

struct ShuffleAttrs {
  int groups = 1;
};

/// Split keeps [0, c - second) on port 0 and the last `second` channels on
/// port 1.
struct SplitAttrs {
  int second = 1;
};

using NodeAttrs =
    std::variant<std::monostate, ConvAttrs, FcAttrs, PoolAttrs, ShuffleAttrs, SplitAttrs>;

enum class BlockRole { Plain, Stem, Unit, Downsample, Head };

std::string_view to_string(BlockRole role);

/// A named group of nodes, e.g. one building block of a network.
struct BlockInfo {
  std::string label;
  std::string kind;
  BlockRole role = BlockRole::Plain;
  std::string stage;
};

struct Node {
  OpKind op = OpKind::Input;
  std::string name;
  std::vector<ValueRef> inputs;
  NodeAttrs attrs;
  std::vector<FeatureShape> outputs;
  int block = -1;  // -1 only for the input node

  const ConvAttrs& conv() const { return std::get<ConvAttrs>(attrs); }
  const FcAttrs& fc() const { return std::get<FcAttrs>(attrs); }
  const PoolAttrs& pool() const { return std::get<PoolAttrs>(attrs); }
  int shuffle_groups() const { return std::get<ShuffleAttrs>(attrs).groups; }
  int split_second() const { return std::get<SplitAttrs>(attrs).second; }
  bool is_depthwise_conv() const {
    return op == OpKind::Conv && conv().spec.is_depthwise();
  }
};

/// Memory-access category of a node (depthwise conv counts as element-wise).
Category mac_category(const Node& node);

/// Immutable operator DAG. Node 0 is the single Input node; every node only
/// references earlier nodes, so the node list is a topological order.
class Graph {
 public:
  const std::vector<Node>& nodes() const { return nodes_; }
  const Node& node(std::size_t id) const { return nodes_.at(id); }
  std::size_t size() const { return nodes_.size(); }

  const std::vector<BlockInfo>& blocks() const { return blocks_; }
  const FeatureShape& input_shape() const { return nodes_.front().outputs.front(); }
  ValueRef output() const { return output_; }
  const FeatureShape& shape(ValueRef v) const;
  const FeatureShape& output_shape() const { return shape(output_); }

  /// Node ids belonging to block `block`, ascending.
  std::vector<std::size_t> block_nodes(int block) const;

  std::size_t count(OpKind op) const;

  /// The same graph with nodes renumbered so that new id i holds old node
  /// order[i]. Throws GraphError unless order is a topological permutation
  /// beginning with the input node.
  Graph reordered(std::span<const std::size_t> order) const;

 private:
  friend class GraphBuilder;

  std::vector<Node> nodes_;
  std::vector<BlockInfo> blocks_;
  ValueRef output_;
};

/// Appends nodes with eager shape inference, so every finished Graph is
/// well-formed. Nodes land in the most recently opened block; a default
/// "graph" block is opened if a node is added before any block.
class GraphBuilder {
 public:
  explicit GraphBuilder(FeatureShape input);

  ValueRef input() const { return {0, 0}; }
  const FeatureShape& shape(ValueRef v) const;

  int begin_block(std::string label, std::string kind,
                  BlockRole role = BlockRole::Plain, std::string stage = {});

  ValueRef conv(ValueRef in, const ConvAttrs& attrs, std::string name = {});
  ValueRef fully_connected(ValueRef in, int outputs, bool bias = true,
                           std::string name = {});
  ValueRef relu(ValueRef in, std::string name = {});
  ValueRef sigmoid(ValueRef in, std::string name = {});
  ValueRef add(ValueRef a, ValueRef b, std::string name = {});
  ValueRef channel_mul(ValueRef x, ValueRef gate, std::string name = {});
  /// Returns {port 0, port 1} of the new split node.
  std::pair<ValueRef, ValueRef> split(ValueRef in, int second, std::string name = {});
  ValueRef concat(ValueRef a, ValueRef b, std::string name = {});
  ValueRef shuffle(ValueRef in, int groups, std::string name = {});
  ValueRef max_pool(ValueRef in, int kernel, int stride, int padding,
                    std::string name = {});
  ValueRef avg_pool(ValueRef in, int kernel, int stride, int padding,
                    std::string name = {});
  ValueRef global_avg_pool(ValueRef in, std::string name = {});

  Graph finish(ValueRef output) &&;

 private:
  ValueRef push(Node node);
  std::string auto_name(std::string name, OpKind op) const;

  Graph graph_;
  int current_block_ = -1;
};

}  // namespace shufflenet
