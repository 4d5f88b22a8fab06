#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "shufflenet/graph.hpp"

namespace shufflenet {

// Analytical cost accounting. FLOPs are multiply-adds of convolution and
// fully connected layers only. MAC counts feature-map and weight elements
// read or written under an idealized cache large enough to hold everything,
// so each element is touched once per operator.

/// out_h * out_w * c_in * c_out * kh * kw / groups.
std::int64_t flops_conv(const ConvSpec& spec, int out_h, int out_w);

/// hw(c1 + c2) + c1 c2 for a 1x1 convolution.
std::int64_t mac_conv1x1(std::int64_t h, std::int64_t w, std::int64_t c1, std::int64_t c2);

/// 2 sqrt(hw B) + B / hw: the least MAC any 1x1 convolution with `flops`
/// multiply-adds over `hw` positions can have. Throws for nonpositive input.
double mac_lower_bound(double flops, double hw);

/// hw(c1 + c2) + c1 c2 / g for a 1x1 group convolution.
std::int64_t mac_group_conv(std::int64_t h, std::int64_t w, std::int64_t c1,
                            std::int64_t c2, std::int64_t g);

/// The same quantity parameterized by FLOPs instead of c2:
/// hw c1 + B g / c1 + B / hw. For fixed (hw, c1, B) it grows with g.
double mac_group_conv_at_flops(double hw, double c1, double flops, double g);

struct NodeCost {
  std::int64_t flops = 0;
  std::int64_t mac = 0;
  std::int64_t params = 0;
};

/// Cost of one node inside its graph. Element-wise nodes cost inputs read
/// plus outputs written; convolutions cost input + output + kernel weights;
/// a fused conv epilogue is free.
NodeCost node_cost(const Graph& graph, std::size_t node);

/// Inputs read plus outputs written, for an element-wise node.
std::int64_t mac_elementwise(const Graph& graph, std::size_t node);

struct CategoryCost {
  std::int64_t flops = 0;
  std::int64_t mac = 0;
};

struct BlockCost {
  std::string label;
  std::string kind;
  std::string stage;
  BlockRole role = BlockRole::Plain;
  std::int64_t flops = 0;
  std::int64_t mac = 0;
  std::int64_t params = 0;
  int fragmentation = 0;
};

struct CostReport {
  std::int64_t flops = 0;
  std::int64_t mac = 0;
  std::int64_t params = 0;
  std::map<Category, CategoryCost> per_category;
  std::vector<BlockCost> blocks;
  std::vector<NodeCost> nodes;

  /// Share of total MAC spent in element-wise operators (incl. depthwise).
  double elementwise_mac_share() const;
  /// Highest fragmentation over all blocks.
  int max_fragmentation() const;
};

/// Full accounting over a graph. Totals are sums over nodes and do not
/// depend on node order.
CostReport analyze(const Graph& graph);

/// Number of convolution and pooling operators in the whole graph, which is
/// taken to be a single building block.
int fragmentation_degree(const Graph& graph);
/// Same count restricted to one block of a larger graph.
int fragmentation_degree(const Graph& graph, int block);

/// Weights, biases and folded scale/shift values.
std::int64_t param_count(const Graph& graph);

enum class Guideline { G1, G2, G3, G4 };
enum class Severity { Warning, Severe };

std::string_view to_string(Guideline g);
std::string_view to_string(Severity s);

struct LintThresholds {
  /// max(c1, c2) / min(c1, c2) above this flags a pointwise conv.
  double g1_max_ratio = 2.0;
  /// Group counts above this flag a non-depthwise conv.
  int g2_max_groups = 2;
  /// Convolutions plus poolings per block above this flag the block.
  int g3_max_fragments = 5;
  /// Element-wise fraction of total MAC above this flags the graph.
  double g4_max_share = 0.15;
};

struct LintFinding {
  Guideline guideline = Guideline::G1;
  Severity severity = Severity::Warning;
  std::string block;
  std::vector<std::size_t> nodes;
  double value = 0.0;
  double threshold = 0.0;
  std::string message;
};

/// Guideline findings ordered by first cited node index.
///
/// G1 looks at pointwise convolutions in blocks that keep their width
/// (stem, head and downsampling blocks exist to change width and are
/// skipped). G2 looks at grouped non-depthwise convolutions. G3 compares
/// each block's fragmentation degree. G4 is one graph-level finding citing
/// every element-wise node.
std::vector<LintFinding> lint(const Graph& graph, const LintThresholds& thresholds = {});

}  // namespace shufflenet
