#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "shufflenet/graph.hpp"

namespace shufflenet {

/// A network together with the name it was requested by.
struct Target {
  std::string name;
  Graph graph;
};

/// Builds `family@width`, e.g. "shufflenet-v2@1x". Families: shufflenet-v1,
/// shufflenet-v2, shufflenet-v2-star, shufflenet-v2-50, shufflenet-v1-50,
/// se-shufflenet-v2-164. The large models take no width (or "@1x").
/// `input_size` 0 means 224. Throws ConfigError for unknown names.
Graph build_named(std::string_view name, int input_size = 0);

/// Parses a JSON network description. Either a named architecture:
///
///   {"arch": "shufflenet-v2@1x", "input_size": 224}
///
/// or an explicit block stack:
///
///   {"name": "tiny",
///    "input": {"channels": 24, "height": 56, "width": 56},
///    "blocks": [{"kind": "v2_down", "out_channels": 116},
///               {"kind": "v2_basic", "repeat": 3}]}
///
/// Block keys: kind (required), channels, out_channels, groups, stride,
/// relu, shortcut, star, se_hidden, repeat, label. `channels` defaults to
/// the running width. Syntax errors report the line, schema errors the key
/// path; both as ConfigError prefixed with `origin`.
Target parse_config(std::string_view text, std::string_view origin = "config");

/// Reads and parses a config file.
Target load_config(const std::filesystem::path& path);

}  // namespace shufflenet
