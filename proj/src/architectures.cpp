#include "shufflenet/architectures.hpp"

#include <cmath>

#include "shufflenet/blocks.hpp"
#include "shufflenet/error.hpp"
#include "strcat.hpp"

namespace shufflenet {

using detail::cat;

std::string_view to_string(Width width) {
  switch (width) {
    case Width::X0_5: return "0.5x";
    case Width::X1: return "1x";
    case Width::X1_5: return "1.5x";
    case Width::X2: return "2x";
  }
  return "?";
}

std::optional<Width> parse_width(std::string_view tag) {
  for (Width w : kAllWidths) {
    if (to_string(w) == tag) return w;
  }
  return std::nullopt;
}

ArchConfig ArchConfig::shufflenet_v2(Width width) {
  ArchConfig cfg;
  cfg.width = width;
  switch (width) {
    case Width::X0_5: cfg.stage_channels = {48, 96, 192}; break;
    case Width::X1: cfg.stage_channels = {116, 232, 464}; break;
    case Width::X1_5: cfg.stage_channels = {176, 352, 704}; break;
    case Width::X2:
      cfg.stage_channels = {244, 488, 976};
      cfg.conv5_channels = 2048;
      break;
  }
  return cfg;
}

namespace {

ConvAttrs conv_bn_relu(int c_in, int c_out, int kernel, int stride) {
  return {ConvSpec{c_in, c_out, kernel, kernel, stride, kernel / 2, 1}, false, true, true};
}

// conv -> global pool -> FC. `conv_channels` == 0 skips the 1x1 conv.
ValueRef append_head(GraphBuilder& b, ValueRef x, int conv_channels, int classes,
                     const std::string& conv_name) {
  b.begin_block("head", "head", BlockRole::Head, "head");
  if (conv_channels > 0) {
    x = b.conv(x, conv_bn_relu(b.shape(x).c, conv_channels, 1, 1), conv_name);
  }
  x = b.global_avg_pool(x, "globalpool");
  return b.fully_connected(x, classes, true, "fc");
}

// One stage: a width-changing first unit followed by basic units.
ValueRef append_stage(GraphBuilder& b, ValueRef x, const std::string& stage,
                      BlockSpec first, const BlockSpec& rest, int repeats,
                      void (*decorate)(GraphBuilder&, ValueRef&) = nullptr) {
  first.channels = b.shape(x).c;
  x = append_block(b, x, first, cat(stage, ".unit1"), stage);
  if (decorate) decorate(b, x);
  for (int i = 1; i < repeats; ++i) {
    x = append_block(b, x, rest, cat(stage, ".unit", i + 1), stage);
  }
  return x;
}

std::array<int, 3> v1_stage_channels(int groups) {
  switch (groups) {
    case 1: return {144, 288, 576};
    case 2: return {200, 400, 800};
    case 3: return {240, 480, 960};
    case 4: return {272, 544, 1088};
    case 8: return {384, 768, 1536};
    default:
      throw ConfigError(cat("ShuffleNet v1 is defined for g in {1,2,3,4,8}, got ", groups));
  }
}

double width_multiplier(Width w) {
  switch (w) {
    case Width::X0_5: return 0.5;
    case Width::X1: return 1.0;
    case Width::X1_5: return 1.5;
    case Width::X2: return 2.0;
  }
  return 1.0;
}

}  // namespace

Graph build_shufflenet_v2(Width width, int input_size, bool star) {
  const ArchConfig cfg = ArchConfig::shufflenet_v2(width);
  GraphBuilder b({3, input_size, input_size});

  b.begin_block("stem", "stem", BlockRole::Stem, "stem");
  ValueRef x = b.conv(b.input(), conv_bn_relu(3, cfg.stem_channels, 3, 2), "conv1");
  x = b.max_pool(x, 3, 2, 1, "maxpool");

  for (int s = 0; s < 3; ++s) {
    const int c = cfg.stage_channels[s];
    const BlockSpec down{.kind = BlockKind::V2Down, .out_channels = c, .stride = 2, .star = star};
    const BlockSpec basic{.kind = BlockKind::V2Basic, .channels = c, .star = star};
    x = append_stage(b, x, cat("stage", s + 2), down, basic, cfg.stage_repeats[s]);
  }
  x = append_head(b, x, cfg.conv5_channels, cfg.classes, "conv5");
  return std::move(b).finish(x);
}

Graph build_shufflenet_v1(Width width, int groups, int input_size) {
  const std::array<int, 3> base = v1_stage_channels(groups);
  const double mult = width_multiplier(width);
  GraphBuilder b({3, input_size, input_size});

  b.begin_block("stem", "stem", BlockRole::Stem, "stem");
  ValueRef x = b.conv(b.input(), conv_bn_relu(3, 24, 3, 2), "conv1");
  x = b.max_pool(x, 3, 2, 1, "maxpool");

  const std::array<int, 3> repeats{4, 8, 4};
  for (int s = 0; s < 3; ++s) {
    const int c = static_cast<int>(std::lround(base[s] * mult));
    BlockSpec down{.kind = BlockKind::V1Down, .out_channels = c, .groups = groups, .stride = 2};
    // The first stage's entry conv sees only the 24-channel stem.
    down.group_first = s > 0;
    const BlockSpec basic{.kind = BlockKind::V1Basic, .channels = c, .groups = groups};
    x = append_stage(b, x, cat("stage", s + 2), down, basic, repeats[s]);
  }
  x = append_head(b, x, 0, 1000, "");
  return std::move(b).finish(x);
}

std::string_view to_string(LargeModel model) {
  switch (model) {
    case LargeModel::V2_50: return "shufflenet-v2-50";
    case LargeModel::V1_50: return "shufflenet-v1-50";
    case LargeModel::SeV2_164: return "se-shufflenet-v2-164";
  }
  return "?";
}

Graph build_large(LargeModel model, int input_size) {
  GraphBuilder b({3, input_size, input_size});
  b.begin_block("conv1", "stem", BlockRole::Stem, "conv1");
  ValueRef x = b.conv(b.input(), conv_bn_relu(3, 64, 3, 2), "conv1_1");
  if (model == LargeModel::SeV2_164) {
    x = b.conv(x, conv_bn_relu(64, 64, 3, 1), "conv1_2");
    x = b.conv(x, conv_bn_relu(64, 128, 3, 1), "conv1_3");
  }
  x = b.max_pool(x, 3, 2, 1, "maxpool");

  const std::array<int, 4> repeats =
      model == LargeModel::SeV2_164 ? std::array<int, 4>{10, 10, 23, 10}
                                    : std::array<int, 4>{3, 4, 6, 3};
  std::array<int, 4> widths{};
  switch (model) {
    case LargeModel::V2_50: widths = {244, 488, 976, 1952}; break;
    case LargeModel::V1_50: widths = {360, 720, 1440, 2880}; break;
    case LargeModel::SeV2_164: widths = {340, 680, 1360, 2720}; break;
  }

  for (int s = 0; s < 4; ++s) {
    const std::string stage = cat("conv", s + 2);
    const int c = widths[s];
    // conv2_1 changes width at 56x56; conv3_1..conv5_1 downsample.
    const int stride = s == 0 ? 1 : 2;
    switch (model) {
      case LargeModel::V2_50:
        x = append_stage(b, x, stage,
                         {.kind = BlockKind::V2Down, .out_channels = c, .stride = stride},
                         {.kind = BlockKind::V2Basic, .channels = c}, repeats[s]);
        break;
      case LargeModel::V1_50: {
        BlockSpec down{.kind = BlockKind::V1Down, .out_channels = c, .groups = 3,
                       .stride = stride};
        // 64 stem channels and the 296-wide conv2_1 branch do not divide by 3.
        down.group_first = s > 0;
        down.group_last = s > 0;
        x = append_stage(b, x, stage, down,
                         {.kind = BlockKind::V1Basic, .channels = c, .groups = 3}, repeats[s]);
        break;
      }
      case LargeModel::SeV2_164:
        x = append_stage(
            b, x, stage, {.kind = BlockKind::V2Down, .out_channels = c, .stride = stride},
            {.kind = BlockKind::V2SeResidual, .channels = c}, repeats[s],
            [](GraphBuilder& gb, ValueRef& v) { v = append_se(gb, v, gb.shape(v).c / 2); });
        break;
    }
  }
  x = append_head(b, x, model == LargeModel::V1_50 ? 0 : 2048, 1000, "conv6");
  return std::move(b).finish(x);
}

std::string_view to_string(Experiment e) {
  switch (e) {
    case Experiment::G1: return "g1";
    case Experiment::G2: return "g2";
    case Experiment::G3: return "g3";
    case Experiment::G4: return "g4";
  }
  return "?";
}

std::optional<Experiment> parse_experiment(std::string_view tag) {
  for (Experiment e : {Experiment::G1, Experiment::G2, Experiment::G3, Experiment::G4}) {
    if (to_string(e) == tag) return e;
  }
  return std::nullopt;
}

namespace {

struct ChannelPair {
  int c1;
  int c2;
};

constexpr std::array<ChannelPair, 4> kG1Pairs{{{128, 128}, {90, 180}, {52, 312}, {36, 432}}};
constexpr std::array<std::pair<int, int>, 4> kG2Settings{{{1, 128}, {2, 180}, {4, 256}, {8, 360}}};
constexpr std::array<BlockKind, 5> kG3Kinds{BlockKind::Fragment1, BlockKind::Fragment2Series,
                                            BlockKind::Fragment4Series,
                                            BlockKind::Fragment2Parallel,
                                            BlockKind::Fragment4Parallel};
constexpr std::array<std::pair<bool, bool>, 4> kG4Toggles{
    {{true, true}, {true, false}, {false, true}, {false, false}}};

constexpr int kStackDepth = 10;

}  // namespace

std::vector<std::string> experiment_rows(Experiment e) {
  switch (e) {
    case Experiment::G1: return {"1:1", "1:2", "1:6", "1:12"};
    case Experiment::G2: return {"1", "2", "4", "8"};
    case Experiment::G3:
      return {"1-fragment", "2-fragment-series", "4-fragment-series",
              "2-fragment-parallel", "4-fragment-parallel"};
    case Experiment::G4:
      return {"relu=yes shortcut=yes", "relu=yes shortcut=no", "relu=no shortcut=yes",
              "relu=no shortcut=no"};
  }
  return {};
}

std::string experiment_column(Experiment e, int scale) {
  switch (e) {
    case Experiment::G1:
    case Experiment::G2: return cat("x", scale);
    case Experiment::G3: return cat("c=", 128 * scale);
    case Experiment::G4: return cat("c=", 32 * scale);
  }
  return {};
}

Graph build_guideline_net(Experiment e, std::size_t row, int scale, int input_size) {
  const auto rows = experiment_rows(e);
  if (row >= rows.size()) {
    throw ConfigError(cat("experiment ", to_string(e), " has no row ", row));
  }
  if (scale < 1) throw ConfigError("experiment scale must be positive");

  switch (e) {
    case Experiment::G1: {
      const int c1 = kG1Pairs[row].c1 * scale;
      const int c2 = kG1Pairs[row].c2 * scale;
      GraphBuilder b({c1, input_size, input_size});
      ValueRef x = b.input();
      for (int i = 0; i < kStackDepth; ++i) {
        b.begin_block(cat("block", i + 1), "conv_pair");
        x = b.conv(x, {ConvSpec::pointwise(c1, c2), false, false, false}, "conv_a");
        x = b.conv(x, {ConvSpec::pointwise(c2, c1), false, false, false}, "conv_b");
      }
      return std::move(b).finish(x);
    }
    case Experiment::G2: {
      const auto [g, base] = kG2Settings[row];
      const int c = base * scale;
      GraphBuilder b({c, input_size, input_size});
      ValueRef x = b.input();
      for (int i = 0; i < kStackDepth; ++i) {
        b.begin_block(cat("layer", i + 1), "group_conv");
        x = b.conv(x, {ConvSpec::pointwise(c, c, g), false, false, false}, "gconv");
      }
      return std::move(b).finish(x);
    }
    case Experiment::G3: {
      const BlockSpec spec{.kind = kG3Kinds[row], .channels = 128 * scale};
      GraphBuilder b({block_input_channels(spec), input_size, input_size});
      ValueRef x = b.input();
      for (int i = 0; i < kStackDepth; ++i) x = append_block(b, x, spec, cat("block", i + 1));
      return std::move(b).finish(x);
    }
    case Experiment::G4: {
      const auto [relu_on, shortcut_on] = kG4Toggles[row];
      const BlockSpec spec{.kind = BlockKind::ResnetBottleneck,
                           .channels = 32 * scale,
                           .relu_on = relu_on,
                           .shortcut_on = shortcut_on};
      GraphBuilder b({spec.channels, input_size, input_size});
      ValueRef x = b.input();
      for (int i = 0; i < kStackDepth; ++i) x = append_block(b, x, spec, cat("block", i + 1));
      return std::move(b).finish(x);
    }
  }
  throw ConfigError("unknown experiment");
}

}  // namespace shufflenet
