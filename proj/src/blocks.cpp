#include "shufflenet/blocks.hpp"

#include <array>
#include <cmath>
#include <utility>

#include "shufflenet/error.hpp"
#include "strcat.hpp"

namespace shufflenet {

using detail::cat;

namespace {

constexpr std::array<std::pair<BlockKind, std::string_view>, 14> kKindNames{{
    {BlockKind::V1Basic, "v1_basic"},
    {BlockKind::V1Down, "v1_down"},
    {BlockKind::V2Basic, "v2_basic"},
    {BlockKind::V2Down, "v2_down"},
    {BlockKind::V2Star, "v2_star"},
    {BlockKind::V2Residual, "v2_residual"},
    {BlockKind::V2Se, "v2_se"},
    {BlockKind::V2SeResidual, "v2_se_residual"},
    {BlockKind::ResnetBottleneck, "resnet_bottleneck"},
    {BlockKind::Fragment1, "fragment_1"},
    {BlockKind::Fragment2Series, "fragment_2s"},
    {BlockKind::Fragment4Series, "fragment_4s"},
    {BlockKind::Fragment2Parallel, "fragment_2p"},
    {BlockKind::Fragment4Parallel, "fragment_4p"},
}};

// Conv followed by folded batch norm, optionally ReLU.
ConvAttrs pointwise(int c_in, int c_out, bool relu, int groups = 1) {
  return {ConvSpec::pointwise(c_in, c_out, groups), false, true, relu};
}

ConvAttrs depthwise(int c, int stride) {
  return {ConvSpec::depthwise(c, 3, stride), false, true, false};
}

void require(bool ok, const std::string& what) {
  if (!ok) throw ShapeError(what);
}

int fragment_count(BlockKind kind) {
  switch (kind) {
    case BlockKind::Fragment1: return 1;
    case BlockKind::Fragment2Series:
    case BlockKind::Fragment2Parallel: return 2;
    case BlockKind::Fragment4Series:
    case BlockKind::Fragment4Parallel: return 4;
    default: return 0;
  }
}

bool is_parallel(BlockKind kind) {
  return kind == BlockKind::Fragment2Parallel || kind == BlockKind::Fragment4Parallel;
}

// Split, three-conv branch, concat, shuffle. `star` prepends a depthwise
// conv to the branch.
ValueRef v2_unit(GraphBuilder& b, ValueRef in, int c, bool star) {
  require(c % 2 == 0 && c >= 2, cat("v2 unit needs an even channel count, got ", c));
  const int half = c / 2;
  auto [identity, branch] = b.split(in, half, "split");
  if (star) branch = b.conv(branch, depthwise(half, 1), "dw0");
  branch = b.conv(branch, pointwise(half, half, true), "pw1");
  branch = b.conv(branch, depthwise(half, 1), "dw");
  branch = b.conv(branch, pointwise(half, half, true), "pw2");
  const ValueRef joined = b.concat(identity, branch, "concat");
  return b.shuffle(joined, 2, "shuffle");
}

ValueRef v2_down(GraphBuilder& b, ValueRef in, int c_in, int c_out, int stride, bool star) {
  require(c_out % 2 == 0 && c_out >= 2,
          cat("v2 downsampling unit needs an even output width, got ", c_out));
  const int half = c_out / 2;
  ValueRef a = b.conv(in, depthwise(c_in, stride), "proj_dw");
  a = b.conv(a, pointwise(c_in, half, true), "proj_pw");

  ValueRef m = in;
  if (star) m = b.conv(m, depthwise(c_in, 1), "dw0");
  m = b.conv(m, pointwise(c_in, half, true), "pw1");
  m = b.conv(m, depthwise(half, stride), "dw");
  m = b.conv(m, pointwise(half, half, true), "pw2");
  const ValueRef joined = b.concat(a, m, "concat");
  return b.shuffle(joined, 2, "shuffle");
}

ValueRef v1_basic(GraphBuilder& b, ValueRef in, int c, int g) {
  require(c % 4 == 0, cat("v1 unit width ", c, " not divisible by 4"));
  const int mid = c / 4;
  require(c % g == 0 && mid % g == 0,
          cat("v1 unit widths ", c, "/", mid, " not divisible by g=", g));
  ValueRef x = b.conv(in, pointwise(c, mid, true, g), "gconv1");
  x = b.shuffle(x, g, "shuffle");
  x = b.conv(x, depthwise(mid, 1), "dw");
  x = b.conv(x, pointwise(mid, c, false, g), "gconv2");
  x = b.add(x, in, "add");
  return b.relu(x, "relu");
}

ValueRef v1_down(GraphBuilder& b, ValueRef in, const BlockSpec& s) {
  const int c_in = s.channels;
  const int c_out = s.out_channels;
  const int g = s.groups;
  require(c_out > c_in, cat("v1 downsampling unit must widen, got ", c_in, "->", c_out));
  require(c_out % 4 == 0, cat("v1 unit width ", c_out, " not divisible by 4"));
  const int mid = c_out / 4;
  const int branch_out = c_out - c_in;
  const int g_first = s.group_first ? g : 1;
  const int g_last = s.group_last ? g : 1;
  require(c_in % g_first == 0 && mid % g == 0 && branch_out % g_last == 0,
          cat("v1 downsampling widths ", c_in, "/", mid, "/", branch_out,
              " not divisible by g=", g));
  ValueRef x = b.conv(in, pointwise(c_in, mid, true, g_first), "gconv1");
  if (g > 1) x = b.shuffle(x, g, "shuffle");
  x = b.conv(x, depthwise(mid, s.stride), "dw");
  x = b.conv(x, pointwise(mid, branch_out, false, g_last), "gconv2");
  const ValueRef shortcut = b.avg_pool(in, 3, s.stride, 1, "avgpool");
  x = b.concat(shortcut, x, "concat");
  return b.relu(x, "relu");
}

ValueRef bottleneck(GraphBuilder& b, ValueRef in, int c, bool relu_on, bool shortcut_on) {
  require(c % 4 == 0, cat("bottleneck width ", c, " not divisible by 4"));
  const int mid = c / 4;
  ValueRef x = b.conv(in, pointwise(c, mid, relu_on), "conv1");
  x = b.conv(x, ConvAttrs{ConvSpec{mid, mid, 3, 3, 1, 1, 1}, false, true, relu_on}, "conv2");
  x = b.conv(x, pointwise(mid, c, relu_on && !shortcut_on), "conv3");
  if (shortcut_on) {
    x = b.add(x, in, "add");
    if (relu_on) x = b.relu(x, "relu");
  }
  return x;
}

ValueRef fragments(GraphBuilder& b, ValueRef in, BlockKind kind, int baseline) {
  const int k = fragment_count(kind);
  const int width = fragment_width(kind, baseline);
  const ConvAttrs plain{ConvSpec::pointwise(width, width), false, false, false};
  if (!is_parallel(kind)) {
    ValueRef x = in;
    for (int i = 0; i < k; ++i) x = b.conv(x, plain, cat("conv", i + 1));
    return x;
  }
  ValueRef sum = b.conv(in, plain, "conv1");
  for (int i = 1; i < k; ++i) {
    const ValueRef branch = b.conv(in, plain, cat("conv", i + 1));
    sum = b.add(sum, branch, cat("add", i));
  }
  return sum;
}

}  // namespace

std::string_view to_string(BlockKind kind) {
  for (const auto& [k, name] : kKindNames) {
    if (k == kind) return name;
  }
  return "unknown";
}

std::optional<BlockKind> parse_block_kind(std::string_view name) {
  for (const auto& [k, n] : kKindNames) {
    if (n == name) return k;
  }
  return std::nullopt;
}

int fragment_width(BlockKind kind, int baseline_channels) {
  const int k = fragment_count(kind);
  require(k > 0, "fragment_width: not a fragment block kind");
  require(baseline_channels > 0, "fragment_width: baseline width must be positive");
  const double exact = baseline_channels / std::sqrt(static_cast<double>(k));
  const int even = 2 * static_cast<int>(std::lround(exact / 2.0));
  return even > 0 ? even : 2;
}

int block_input_channels(const BlockSpec& spec) {
  return fragment_count(spec.kind) > 0 ? fragment_width(spec.kind, spec.channels)
                                       : spec.channels;
}

int block_output_channels(const BlockSpec& spec) {
  switch (spec.kind) {
    case BlockKind::V1Down:
    case BlockKind::V2Down:
      return spec.out_channels;
    default:
      return block_input_channels(spec);
  }
}

ValueRef append_se(GraphBuilder& b, ValueRef x, int hidden) {
  const int c = b.shape(x).c;
  require(hidden >= 1 && hidden <= c, cat("SE hidden width ", hidden, " invalid for ", c,
                                          " channels"));
  ValueRef gate = b.global_avg_pool(x, "se_pool");
  gate = b.fully_connected(gate, hidden, true, "se_fc1");
  gate = b.relu(gate, "se_relu");
  gate = b.fully_connected(gate, c, true, "se_fc2");
  gate = b.sigmoid(gate, "se_sigmoid");
  return b.channel_mul(x, gate, "se_scale");
}

ValueRef append_block(GraphBuilder& b, ValueRef in, const BlockSpec& spec,
                      const std::string& label, std::string stage) {
  const int expected = block_input_channels(spec);
  if (b.shape(in).c != expected) {
    throw ShapeError(cat(label, ": ", to_string(spec.kind), " expects ", expected,
                         " input channels, got ", b.shape(in).c));
  }
  const bool down = spec.kind == BlockKind::V1Down || spec.kind == BlockKind::V2Down;
  b.begin_block(label, std::string(to_string(spec.kind)),
                down ? BlockRole::Downsample : BlockRole::Unit, std::move(stage));

  const int c = spec.channels;
  const int se_hidden = spec.se_hidden > 0 ? spec.se_hidden : c / 2;
  switch (spec.kind) {
    case BlockKind::V2Basic:
      return v2_unit(b, in, c, spec.star);
    case BlockKind::V2Star:
      return v2_unit(b, in, c, true);
    case BlockKind::V2Down:
      return v2_down(b, in, c, spec.out_channels, spec.stride, spec.star);
    case BlockKind::V2Residual:
      return b.add(v2_unit(b, in, c, spec.star), in, "residual_add");
    case BlockKind::V2Se:
      return append_se(b, v2_unit(b, in, c, spec.star), se_hidden);
    case BlockKind::V2SeResidual: {
      const ValueRef gated = append_se(b, v2_unit(b, in, c, spec.star), se_hidden);
      return b.add(gated, in, "residual_add");
    }
    case BlockKind::V1Basic:
      return v1_basic(b, in, c, spec.groups);
    case BlockKind::V1Down:
      return v1_down(b, in, spec);
    case BlockKind::ResnetBottleneck:
      return bottleneck(b, in, c, spec.relu_on, spec.shortcut_on);
    case BlockKind::Fragment1:
    case BlockKind::Fragment2Series:
    case BlockKind::Fragment4Series:
    case BlockKind::Fragment2Parallel:
    case BlockKind::Fragment4Parallel:
      return fragments(b, in, spec.kind, c);
  }
  throw ShapeError("append_block: unknown block kind");
}

Graph make_block(const BlockSpec& spec, int hw) {
  GraphBuilder b({block_input_channels(spec), hw, hw});
  const ValueRef out = append_block(b, b.input(), spec, std::string(to_string(spec.kind)));
  return std::move(b).finish(out);
}

Graph make_v2_basic(int c, int hw) {
  return make_block({.kind = BlockKind::V2Basic, .channels = c}, hw);
}

Graph make_v2_down(int c_in, int c_out, int hw) {
  return make_block({.kind = BlockKind::V2Down, .channels = c_in, .out_channels = c_out}, hw);
}

Graph make_v2_star(int c, int hw) {
  return make_block({.kind = BlockKind::V2Star, .channels = c}, hw);
}

Graph make_v2_residual(int c, int hw) {
  return make_block({.kind = BlockKind::V2Residual, .channels = c}, hw);
}

Graph make_v2_se(int c, int hw) {
  return make_block({.kind = BlockKind::V2Se, .channels = c}, hw);
}

Graph make_v2_se_residual(int c, int hw) {
  return make_block({.kind = BlockKind::V2SeResidual, .channels = c}, hw);
}

Graph make_se(int c, int hidden, int hw) {
  GraphBuilder b({c, hw, hw});
  b.begin_block("se", "se", BlockRole::Unit);
  const ValueRef out = append_se(b, b.input(), hidden > 0 ? hidden : c / 2);
  return std::move(b).finish(out);
}

Graph make_v1_basic(int c, int g, int hw) {
  return make_block({.kind = BlockKind::V1Basic, .channels = c, .groups = g}, hw);
}

Graph make_v1_down(int c_in, int c_out, int g, int hw) {
  return make_block(
      {.kind = BlockKind::V1Down, .channels = c_in, .out_channels = c_out, .groups = g}, hw);
}

Graph make_bottleneck(int c, bool relu_on, bool shortcut_on, int hw) {
  return make_block({.kind = BlockKind::ResnetBottleneck,
                     .channels = c,
                     .relu_on = relu_on,
                     .shortcut_on = shortcut_on},
                    hw);
}

Graph make_fragment_block(BlockKind variant, int c, int hw) {
  require(fragment_count(variant) > 0, "make_fragment_block: not a fragment kind");
  return make_block({.kind = variant, .channels = c}, hw);
}

}  // namespace shufflenet
