#pragma once

#include <vector>

#include "shufflenet/graph.hpp"

namespace shufflenet {

/// Expected number of channels of one block that reach the block `j` units
/// later without passing through a convolution: r^j c with r = (c - c')/c.
/// Real-valued. Throws std::invalid_argument unless 0 < c' < c and j >= 0.
double direct_channels(double c, double c_prime, int j);

/// Square connectivity matrix over blocks; entry (s, l) is the fraction of
/// block s's input channels that reach block l's input untouched.
struct ReuseMatrix {
  int blocks = 0;
  double r = 0.0;
  std::vector<double> values;  // row-major, blocks x blocks

  double at(int s, int l) const {
    return values[static_cast<std::size_t>(s) * blocks + l];
  }
  std::vector<double> row(int s) const;
};

/// Closed form: r^(l - s) above the diagonal, 0 below. 0 < r < 1.
ReuseMatrix reuse_matrix(int num_blocks, double r);

/// Where block l's channels are observed. The shuffle that ends block l-1
/// only permutes channels, so both taps give the same counts.
enum class ReuseTap { BlockInput, BeforeShuffle };

/// Traces channel identities through split, concat and shuffle of a stack
/// of v2_basic units; convolution outputs are fresh channels. Uses the
/// first `num_blocks` units (all when 0). `r` is set to the fraction the
/// first unit passes through its identity branch. Throws GraphError for
/// graphs with any other block kind or operator.
ReuseMatrix empirical_reuse(const Graph& graph, int num_blocks = 0,
                            ReuseTap tap = ReuseTap::BlockInput);

/// `num_blocks` stacked v2_basic units of width c on a (c, hw, hw) input.
Graph make_v2_stack(int num_blocks, int c, int hw = 4);

}  // namespace shufflenet
