#include "shufflenet/feature_reuse.hpp"

#include <cmath>
#include <stdexcept>

#include "shufflenet/blocks.hpp"
#include "shufflenet/error.hpp"
#include "strcat.hpp"

namespace shufflenet {

using detail::cat;

double direct_channels(double c, double c_prime, int j) {
  if (!(c_prime > 0.0 && c_prime < c)) {
    throw std::invalid_argument(cat("direct_channels: need 0 < c' < c, got c=", c,
                                    " c'=", c_prime));
  }
  if (j < 0) throw std::invalid_argument("direct_channels: negative block distance");
  return std::pow((c - c_prime) / c, j) * c;
}

std::vector<double> ReuseMatrix::row(int s) const {
  const auto begin = values.begin() + static_cast<std::ptrdiff_t>(s) * blocks;
  return {begin, begin + blocks};
}

ReuseMatrix reuse_matrix(int num_blocks, double r) {
  if (num_blocks < 1) throw std::invalid_argument("reuse_matrix: need at least one block");
  if (!(r > 0.0 && r < 1.0)) {
    throw std::invalid_argument(cat("reuse_matrix: r must lie in (0, 1), got ", r));
  }
  ReuseMatrix m{num_blocks, r, std::vector<double>(static_cast<std::size_t>(num_blocks) *
                                                   num_blocks, 0.0)};
  for (int s = 0; s < num_blocks; ++s) {
    double v = 1.0;
    for (int l = s; l < num_blocks; ++l) {
      m.values[static_cast<std::size_t>(s) * num_blocks + l] = v;
      v *= r;
    }
  }
  return m;
}

namespace {

// Each channel carries the index of the first block whose input it is
// part of. A channel at block l's input with birth <= s came from block s's
// input untouched.
using Births = std::vector<int>;

}  // namespace

ReuseMatrix empirical_reuse(const Graph& graph, int num_blocks, ReuseTap tap) {
  const int total = static_cast<int>(graph.blocks().size());
  for (const BlockInfo& b : graph.blocks()) {
    if (b.kind != to_string(BlockKind::V2Basic)) {
      throw GraphError(cat("empirical_reuse: block ", b.label, " is ", b.kind,
                           ", expected a stack of v2_basic units"));
    }
  }
  if (total == 0) throw GraphError("empirical_reuse: graph has no blocks");
  if (num_blocks == 0) num_blocks = total;
  if (num_blocks < 1 || num_blocks > total) {
    throw GraphError(cat("empirical_reuse: asked for ", num_blocks, " blocks, graph has ",
                         total));
  }

  const int c = graph.input_shape().c;
  std::vector<std::vector<Births>> values(graph.size());
  std::vector<Births> observed(num_blocks);
  std::vector<bool> seen(num_blocks, false);
  double first_r = 0.0;

  for (std::size_t id = 0; id < graph.size(); ++id) {
    const Node& node = graph.node(id);
    const auto in = [&](std::size_t k) -> const Births& {
      const ValueRef& v = node.inputs[k];
      return values[v.node][v.port];
    };
    const int block = node.block;
    switch (node.op) {
      case OpKind::Input:
        values[id] = {Births(c, 0)};
        break;
      case OpKind::Conv:
        values[id] = {Births(node.outputs[0].c, block + 1)};
        break;
      case OpKind::Split: {
        const Births& x = in(0);
        const std::size_t keep = x.size() - static_cast<std::size_t>(node.split_second());
        if (block < num_blocks && !seen[block] && tap == ReuseTap::BlockInput) {
          observed[block] = x;
          seen[block] = true;
        }
        if (block == 0) first_r = static_cast<double>(keep) / static_cast<double>(x.size());
        values[id] = {Births(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(keep)),
                      Births(x.begin() + static_cast<std::ptrdiff_t>(keep), x.end())};
        break;
      }
      case OpKind::Concat: {
        Births joined = in(0);
        joined.insert(joined.end(), in(1).begin(), in(1).end());
        // The concat ending block l-1 is block l's input before shuffling.
        if (tap == ReuseTap::BeforeShuffle && block + 1 < num_blocks) {
          observed[block + 1] = joined;
          seen[block + 1] = true;
        }
        values[id] = {std::move(joined)};
        break;
      }
      case OpKind::Shuffle: {
        const Births& x = in(0);
        const int g = node.shuffle_groups();
        const int per = static_cast<int>(x.size()) / g;
        Births out(x.size());
        for (int gi = 0; gi < g; ++gi) {
          for (int j = 0; j < per; ++j) out[static_cast<std::size_t>(j) * g + gi] =
              x[static_cast<std::size_t>(gi) * per + j];
        }
        values[id] = {std::move(out)};
        break;
      }
      default:
        throw GraphError(cat("empirical_reuse: node ", id, " (", node.name, ") is ",
                             to_string(node.op), ", which cannot be traced"));
    }
  }
  if (tap == ReuseTap::BeforeShuffle) {
    observed[0] = Births(c, 0);
    seen[0] = true;
  }

  ReuseMatrix m{num_blocks, first_r,
                std::vector<double>(static_cast<std::size_t>(num_blocks) * num_blocks, 0.0)};
  for (int l = 0; l < num_blocks; ++l) {
    if (!seen[l]) throw GraphError(cat("empirical_reuse: block ", l, " has no split"));
    const Births& at_l = observed[l];
    for (int s = 0; s <= l; ++s) {
      int count = 0;
      for (int birth : at_l) count += birth <= s ? 1 : 0;
      m.values[static_cast<std::size_t>(s) * num_blocks + l] =
          static_cast<double>(count) / static_cast<double>(at_l.size());
    }
  }
  return m;
}

Graph make_v2_stack(int num_blocks, int c, int hw) {
  if (num_blocks < 1) throw ShapeError("make_v2_stack: need at least one block");
  GraphBuilder b({c, hw, hw});
  ValueRef x = b.input();
  const BlockSpec spec{.kind = BlockKind::V2Basic, .channels = c};
  for (int i = 0; i < num_blocks; ++i) x = append_block(b, x, spec, cat("unit", i + 1));
  return std::move(b).finish(x);
}

}  // namespace shufflenet
