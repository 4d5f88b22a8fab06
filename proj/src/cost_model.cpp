#include "shufflenet/cost_model.hpp"

#include <algorithm>
#include <cmath>

#include "shufflenet/error.hpp"
#include "strcat.hpp"

namespace shufflenet {

using detail::cat;

std::int64_t flops_conv(const ConvSpec& spec, int out_h, int out_w) {
  spec.validate();
  if (out_h < 1 || out_w < 1) throw ShapeError("flops_conv: output extent must be positive");
  return static_cast<std::int64_t>(out_h) * out_w * spec.c_in * spec.c_out * spec.kh *
         spec.kw / spec.groups;
}

std::int64_t mac_conv1x1(std::int64_t h, std::int64_t w, std::int64_t c1, std::int64_t c2) {
  return h * w * (c1 + c2) + c1 * c2;
}

double mac_lower_bound(double flops, double hw) {
  if (!(flops > 0.0) || !(hw > 0.0)) {
    throw std::invalid_argument("mac_lower_bound: flops and hw must be positive");
  }
  return 2.0 * std::sqrt(hw * flops) + flops / hw;
}

std::int64_t mac_group_conv(std::int64_t h, std::int64_t w, std::int64_t c1,
                            std::int64_t c2, std::int64_t g) {
  if (g < 1 || c1 % g != 0 || c2 % g != 0) {
    throw ShapeError(cat("mac_group_conv: channels ", c1, "->", c2,
                         " not divisible by g=", g));
  }
  return h * w * (c1 + c2) + c1 * c2 / g;
}

double mac_group_conv_at_flops(double hw, double c1, double flops, double g) {
  return hw * c1 + flops * g / c1 + flops / hw;
}

std::int64_t mac_elementwise(const Graph& graph, std::size_t id) {
  const Node& node = graph.node(id);
  std::int64_t mac = 0;
  for (const ValueRef& in : node.inputs) mac += static_cast<std::int64_t>(graph.shape(in).numel());
  for (const FeatureShape& out : node.outputs) mac += static_cast<std::int64_t>(out.numel());
  return mac;
}

NodeCost node_cost(const Graph& graph, std::size_t id) {
  const Node& node = graph.node(id);
  NodeCost cost;
  switch (node.op) {
    case OpKind::Input:
      break;
    case OpKind::Conv: {
      const ConvAttrs& a = node.conv();
      const FeatureShape& out = node.outputs[0];
      const auto weights = static_cast<std::int64_t>(a.spec.weight_count());
      cost.flops = flops_conv(a.spec, out.h, out.w);
      cost.mac = mac_elementwise(graph, id) + weights;
      cost.params = weights + (a.bias ? a.spec.c_out : 0) +
                    (a.scale_shift ? 2 * a.spec.c_out : 0);
      break;
    }
    case OpKind::FullyConnected: {
      const FcAttrs& a = node.fc();
      const std::int64_t weights =
          static_cast<std::int64_t>(graph.shape(node.inputs[0]).c) * a.outputs;
      cost.flops = weights;
      cost.mac = mac_elementwise(graph, id) + weights;
      cost.params = weights + (a.bias ? a.outputs : 0);
      break;
    }
    default:
      cost.mac = mac_elementwise(graph, id);
      break;
  }
  return cost;
}

double CostReport::elementwise_mac_share() const {
  if (mac == 0) return 0.0;
  const auto it = per_category.find(Category::Elementwise);
  return it == per_category.end() ? 0.0
                                  : static_cast<double>(it->second.mac) / static_cast<double>(mac);
}

int CostReport::max_fragmentation() const {
  int best = 0;
  for (const BlockCost& b : blocks) best = std::max(best, b.fragmentation);
  return best;
}

namespace {

bool is_fragment(const Node& node) {
  switch (node.op) {
    case OpKind::Conv:
    case OpKind::MaxPool:
    case OpKind::AvgPool:
    case OpKind::GlobalAvgPool:
      return true;
    default:
      return false;
  }
}

}  // namespace

CostReport analyze(const Graph& graph) {
  CostReport report;
  for (Category c : kAllCategories) report.per_category[c] = {};
  report.blocks.reserve(graph.blocks().size());
  for (const BlockInfo& b : graph.blocks()) {
    BlockCost bc;
    bc.label = b.label;
    bc.kind = b.kind;
    bc.stage = b.stage;
    bc.role = b.role;
    report.blocks.push_back(std::move(bc));
  }

  report.nodes.reserve(graph.size());
  for (std::size_t id = 0; id < graph.size(); ++id) {
    const Node& node = graph.node(id);
    const NodeCost c = node_cost(graph, id);
    report.nodes.push_back(c);
    report.flops += c.flops;
    report.mac += c.mac;
    report.params += c.params;
    // Depthwise multiply-adds stay in the conv bucket; only their memory
    // traffic is element-wise.
    const Category flops_cat = node.op == OpKind::Conv ? Category::Conv : mac_category(node);
    report.per_category[flops_cat].flops += c.flops;
    report.per_category[mac_category(node)].mac += c.mac;
    if (node.block >= 0) {
      BlockCost& bc = report.blocks[node.block];
      bc.flops += c.flops;
      bc.mac += c.mac;
      bc.params += c.params;
      if (is_fragment(node)) ++bc.fragmentation;
    }
  }
  return report;
}

int fragmentation_degree(const Graph& graph) {
  return static_cast<int>(
      std::count_if(graph.nodes().begin(), graph.nodes().end(), is_fragment));
}

int fragmentation_degree(const Graph& graph, int block) {
  int count = 0;
  for (const Node& node : graph.nodes()) {
    if (node.block == block && is_fragment(node)) ++count;
  }
  return count;
}

std::int64_t param_count(const Graph& graph) {
  std::int64_t total = 0;
  for (std::size_t id = 0; id < graph.size(); ++id) total += node_cost(graph, id).params;
  return total;
}

std::string_view to_string(Guideline g) {
  switch (g) {
    case Guideline::G1: return "G1";
    case Guideline::G2: return "G2";
    case Guideline::G3: return "G3";
    case Guideline::G4: return "G4";
  }
  return "G?";
}

std::string_view to_string(Severity s) {
  return s == Severity::Severe ? "severe" : "warning";
}

namespace {

Severity severity_for(double value, double threshold) {
  return value > 2.0 * threshold ? Severity::Severe : Severity::Warning;
}

std::string block_label(const Graph& graph, int block) {
  return block >= 0 ? graph.blocks()[block].label : std::string("input");
}

bool exempt_from_g1(const Graph& graph, int block) {
  if (block < 0) return true;
  const BlockRole role = graph.blocks()[block].role;
  return role == BlockRole::Stem || role == BlockRole::Head ||
         role == BlockRole::Downsample;
}

}  // namespace

std::vector<LintFinding> lint(const Graph& graph, const LintThresholds& t) {
  std::vector<LintFinding> findings;

  for (std::size_t id = 0; id < graph.size(); ++id) {
    const Node& node = graph.node(id);
    if (node.op != OpKind::Conv || node.is_depthwise_conv()) continue;
    const ConvSpec& spec = node.conv().spec;

    if (spec.is_pointwise() && !exempt_from_g1(graph, node.block)) {
      const double ratio = static_cast<double>(std::max(spec.c_in, spec.c_out)) /
                           static_cast<double>(std::min(spec.c_in, spec.c_out));
      if (ratio > t.g1_max_ratio) {
        findings.push_back({Guideline::G1, severity_for(ratio, t.g1_max_ratio),
                            block_label(graph, node.block), {id}, ratio, t.g1_max_ratio,
                            cat(node.name, ": unbalanced 1x1 conv ", spec.c_in, "->",
                                spec.c_out, " (ratio ", ratio, ")")});
      }
    }
    if (spec.groups > t.g2_max_groups) {
      findings.push_back({Guideline::G2,
                          severity_for(spec.groups, t.g2_max_groups),
                          block_label(graph, node.block),
                          {id},
                          static_cast<double>(spec.groups),
                          static_cast<double>(t.g2_max_groups),
                          cat(node.name, ": group convolution with g=", spec.groups)});
    }
  }

  for (int b = 0; b < static_cast<int>(graph.blocks().size()); ++b) {
    std::vector<std::size_t> frag;
    for (std::size_t id : graph.block_nodes(b)) {
      if (is_fragment(graph.node(id))) frag.push_back(id);
    }
    const int degree = static_cast<int>(frag.size());
    if (degree > t.g3_max_fragments) {
      findings.push_back({Guideline::G3, severity_for(degree, t.g3_max_fragments),
                          graph.blocks()[b].label, frag, static_cast<double>(degree),
                          static_cast<double>(t.g3_max_fragments),
                          cat(graph.blocks()[b].label, ": ", degree,
                              " fragmented operators in one block")});
    }
  }

  const CostReport report = analyze(graph);
  const double share = report.elementwise_mac_share();
  if (share > t.g4_max_share) {
    std::vector<std::size_t> ew;
    for (std::size_t id = 0; id < graph.size(); ++id) {
      if (mac_category(graph.node(id)) == Category::Elementwise) ew.push_back(id);
    }
    findings.push_back({Guideline::G4, severity_for(share, t.g4_max_share),
                        "graph", ew, share, t.g4_max_share,
                        cat("element-wise operators account for ", share * 100.0,
                            "% of memory access")});
  }

  std::stable_sort(findings.begin(), findings.end(),
                   [](const LintFinding& a, const LintFinding& b) {
                     return a.nodes.front() < b.nodes.front();
                   });
  return findings;
}

}  // namespace shufflenet
