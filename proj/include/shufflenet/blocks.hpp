#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "shufflenet/graph.hpp"

namespace shufflenet {

enum class BlockKind {
  V1Basic,
  V1Down,
  V2Basic,
  V2Down,
  V2Star,
  V2Residual,
  V2Se,
  V2SeResidual,
  ResnetBottleneck,
  Fragment1,
  Fragment2Series,
  Fragment4Series,
  Fragment2Parallel,
  Fragment4Parallel,
};

/// Canonical names: v1_basic, v1_down, v2_basic, ..., fragment_4p.
std::string_view to_string(BlockKind kind);
std::optional<BlockKind> parse_block_kind(std::string_view name);

/// Parameters for one building block. `channels` is the input width, except
/// for the fragment kinds where it is the 1-fragment baseline width c (see
/// fragment_width). `out_channels` and `stride` only matter for the
/// downsampling kinds; `groups` only for v1.
struct BlockSpec {
  BlockKind kind = BlockKind::V2Basic;
  int channels = 0;
  int out_channels = 0;
  int groups = 3;
  int stride = 2;
  bool relu_on = true;
  bool shortcut_on = true;
  bool star = false;
  // v1 transition units: whether the pointwise convs entering and leaving
  // the bottleneck are grouped. Dense where the width is not divisible by g.
  bool group_first = true;
  bool group_last = true;
  int se_hidden = 0;  // 0 selects channels / 2
};

/// Appends one block to `builder` and returns its output. Opens a new block
/// labelled `label`.
ValueRef append_block(GraphBuilder& builder, ValueRef in, const BlockSpec& spec,
                      const std::string& label, std::string stage = {});

int block_input_channels(const BlockSpec& spec);
int block_output_channels(const BlockSpec& spec);

/// Channel width used by the fragment kinds so that their FLOPs match a
/// single c x c pointwise conv: c / sqrt(k), rounded to the nearest even.
int fragment_width(BlockKind kind, int baseline_channels);

/// Squeeze-and-excitation gate on `x`: global pool, FC(c -> hidden), ReLU,
/// FC(hidden -> c), sigmoid, channel multiply. Appends into the current
/// block.
ValueRef append_se(GraphBuilder& builder, ValueRef x, int hidden);

// Standalone single-block graphs. Spatial extent defaults to 28x28 (56x56
// for the downsampling and guideline-experiment blocks).

Graph make_v2_basic(int c, int hw = 28);
Graph make_v2_down(int c_in, int c_out, int hw = 56);
Graph make_v2_star(int c, int hw = 28);
Graph make_v2_residual(int c, int hw = 28);
Graph make_v2_se(int c, int hw = 28);
Graph make_v2_se_residual(int c, int hw = 28);
Graph make_se(int c, int hidden = 0, int hw = 28);
Graph make_v1_basic(int c, int g, int hw = 28);
Graph make_v1_down(int c_in, int c_out, int g, int hw = 56);
Graph make_bottleneck(int c, bool relu_on, bool shortcut_on, int hw = 56);
Graph make_fragment_block(BlockKind variant, int c, int hw = 56);

/// Single-block graph for any spec, input (spec.channels, hw, hw).
Graph make_block(const BlockSpec& spec, int hw);

}  // namespace shufflenet
