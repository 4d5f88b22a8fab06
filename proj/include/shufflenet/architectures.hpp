#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "shufflenet/graph.hpp"

namespace shufflenet {

enum class Width { X0_5, X1, X1_5, X2 };

inline constexpr Width kAllWidths[] = {Width::X0_5, Width::X1, Width::X1_5, Width::X2};

/// "0.5x", "1x", "1.5x", "2x".
std::string_view to_string(Width width);
std::optional<Width> parse_width(std::string_view tag);

/// Channel table of the four ShuffleNet v2 complexity levels.
struct ArchConfig {
  Width width = Width::X1;
  std::array<int, 3> stage_channels{};
  std::array<int, 3> stage_repeats{4, 8, 4};
  int stem_channels = 24;
  int conv5_channels = 1024;
  int classes = 1000;

  static ArchConfig shufflenet_v2(Width width);
};

/// ShuffleNet v2 for a 224x224 (or `input_size`) RGB image: conv1 3x3/2,
/// maxpool 3x3/2, three stages of one downsampling unit plus basic units,
/// conv5 1x1, global pool, FC. `star` uses the enlarged receptive-field
/// units.
Graph build_shufflenet_v2(Width width, int input_size = 224, bool star = false);

/// ShuffleNet v1 with `groups` (3 by default) at the given width multiplier.
Graph build_shufflenet_v1(Width width, int groups = 3, int input_size = 224);

enum class LargeModel { V2_50, V1_50, SeV2_164 };

std::string_view to_string(LargeModel model);

Graph build_large(LargeModel model, int input_size = 224);

enum class Experiment { G1, G2, G3, G4 };

std::string_view to_string(Experiment e);
std::optional<Experiment> parse_experiment(std::string_view tag);

/// Row labels of an experiment table, in table order.
std::vector<std::string> experiment_rows(Experiment e);

/// Column label for a scale factor (1, 2 or 4): "x1" for g1/g2, "c=128"
/// style for g3/g4.
std::string experiment_column(Experiment e, int scale);

/// Ten stacked blocks at 56x56 (or `input_size`) for one table cell.
/// g1 rows are c1:c2 ratios, g2 rows group counts, g3 rows fragment kinds,
/// g4 rows (ReLU, shortcut) toggles. `scale` multiplies the channel counts.
Graph build_guideline_net(Experiment e, std::size_t row, int scale, int input_size = 56);

}  // namespace shufflenet
