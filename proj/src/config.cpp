#include "shufflenet/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "shufflenet/architectures.hpp"
#include "shufflenet/blocks.hpp"
#include "shufflenet/error.hpp"
#include "strcat.hpp"

namespace shufflenet {

using detail::cat;
using nlohmann::json;

Graph build_named(std::string_view name, int input_size) {
  const int size = input_size > 0 ? input_size : 224;
  const auto at = name.find('@');
  const std::string_view family = name.substr(0, at);
  const std::string_view tag = at == std::string_view::npos ? "" : name.substr(at + 1);

  const auto width = [&]() -> Width {
    if (tag.empty()) throw ConfigError(cat("'", name, "' needs a width, e.g. ", family, "@1x"));
    const auto w = parse_width(tag);
    if (!w) throw ConfigError(cat("unknown width '", tag, "' (expected 0.5x, 1x, 1.5x or 2x)"));
    return *w;
  };
  const auto large = [&](LargeModel m) {
    if (!tag.empty() && tag != "1x") {
      throw ConfigError(cat(family, " has a single width, got '", tag, "'"));
    }
    return build_large(m, size);
  };

  if (family == "shufflenet-v2") return build_shufflenet_v2(width(), size);
  if (family == "shufflenet-v2-star") return build_shufflenet_v2(width(), size, true);
  if (family == "shufflenet-v1") return build_shufflenet_v1(width(), 3, size);
  if (family == "shufflenet-v2-50") return large(LargeModel::V2_50);
  if (family == "shufflenet-v1-50") return large(LargeModel::V1_50);
  if (family == "se-shufflenet-v2-164") return large(LargeModel::SeV2_164);
  throw ConfigError(cat("unknown architecture '", name,
                        "' (families: shufflenet-v1, shufflenet-v2, shufflenet-v2-star, "
                        "shufflenet-v2-50, shufflenet-v1-50, se-shufflenet-v2-164)"));
}

namespace {

int line_of(std::string_view text, std::size_t byte) {
  byte = std::min(byte, text.size());
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(byte), '\n'));
}

class Schema {
 public:
  explicit Schema(std::string origin) : origin_(std::move(origin)) {}

  [[noreturn]] void fail(const std::string& path, const std::string& what) const {
    throw ConfigError(cat(origin_, ": ", path, ": ", what));
  }

  void only_keys(const json& obj, const std::string& path,
                 std::initializer_list<std::string_view> allowed) const {
    if (!obj.is_object()) fail(path, "expected an object");
    for (const auto& [key, _] : obj.items()) {
      if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
        fail(join(path, key), "unknown key");
      }
    }
  }

  int integer(const json& obj, const std::string& path, const char* key, int fallback,
              int min = 1) const {
    if (!obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (!v.is_number_integer()) fail(join(path, key), "expected an integer");
    const auto i = v.get<long long>();
    if (i < min || i > 1'000'000) fail(join(path, key), cat("out of range: ", i));
    return static_cast<int>(i);
  }

  bool boolean(const json& obj, const std::string& path, const char* key, bool fallback) const {
    if (!obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (!v.is_boolean()) fail(join(path, key), "expected true or false");
    return v.get<bool>();
  }

  std::string string(const json& obj, const std::string& path, const char* key,
                     bool required) const {
    if (!obj.contains(key)) {
      if (required) fail(join(path, key), "missing");
      return {};
    }
    const json& v = obj.at(key);
    if (!v.is_string()) fail(join(path, key), "expected a string");
    return v.get<std::string>();
  }

  static std::string join(const std::string& path, std::string_view key) {
    return path.empty() ? std::string(key) : cat(path, ".", key);
  }

 private:
  std::string origin_;
};

Target stack_from_json(const json& root, const Schema& schema) {
  schema.only_keys(root, "", {"name", "input", "blocks"});
  Target t;
  t.name = schema.string(root, "", "name", false);
  if (t.name.empty()) t.name = "custom";

  if (!root.contains("input")) schema.fail("input", "missing");
  const json& in = root.at("input");
  schema.only_keys(in, "input", {"channels", "height", "width"});
  const FeatureShape shape{schema.integer(in, "input", "channels", 3),
                           schema.integer(in, "input", "height", 224),
                           schema.integer(in, "input", "width", 224)};

  if (!root.contains("blocks")) schema.fail("blocks", "missing");
  const json& blocks = root.at("blocks");
  if (!blocks.is_array() || blocks.empty()) schema.fail("blocks", "expected a non-empty array");

  GraphBuilder b(shape);
  ValueRef x = b.input();
  int unit = 0;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const std::string path = cat("blocks[", i, "]");
    const json& node = blocks[i];
    schema.only_keys(node, path,
                     {"kind", "channels", "out_channels", "groups", "stride", "relu",
                      "shortcut", "star", "se_hidden", "repeat", "label"});
    const std::string kind_name = schema.string(node, path, "kind", true);
    const auto kind = parse_block_kind(kind_name);
    if (!kind) schema.fail(Schema::join(path, "kind"), cat("unknown block kind '", kind_name, "'"));

    BlockSpec spec;
    spec.kind = *kind;
    const bool fragment = kind_name.rfind("fragment_", 0) == 0;
    if (fragment && !node.contains("channels")) {
      schema.fail(Schema::join(path, "channels"), "required for fragment blocks");
    }
    spec.out_channels = schema.integer(node, path, "out_channels", 0, 0);
    spec.groups = schema.integer(node, path, "groups", spec.groups);
    spec.stride = schema.integer(node, path, "stride", spec.stride);
    spec.relu_on = schema.boolean(node, path, "relu", spec.relu_on);
    spec.shortcut_on = schema.boolean(node, path, "shortcut", spec.shortcut_on);
    spec.star = schema.boolean(node, path, "star", spec.star);
    spec.se_hidden = schema.integer(node, path, "se_hidden", 0, 0);
    const int repeat = schema.integer(node, path, "repeat", 1);
    const std::string label = schema.string(node, path, "label", false);
    if ((spec.kind == BlockKind::V1Down || spec.kind == BlockKind::V2Down) &&
        spec.out_channels == 0) {
      schema.fail(Schema::join(path, "out_channels"), "required for downsampling blocks");
    }

    for (int r = 0; r < repeat; ++r) {
      spec.channels = schema.integer(node, path, "channels", b.shape(x).c);
      ++unit;
      const std::string name = label.empty() ? cat("block", unit)
                               : repeat > 1  ? cat(label, ".", r + 1)
                                             : label;
      try {
        x = append_block(b, x, spec, name);
      } catch (const ShapeError& e) {
        schema.fail(path, e.what());
      }
    }
  }
  t.graph = std::move(b).finish(x);
  return t;
}

}  // namespace

Target parse_config(std::string_view text, std::string_view origin) {
  json root;
  try {
    root = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ConfigError(cat(origin, ":", line_of(text, e.byte > 0 ? e.byte - 1 : 0),
                          ": syntax error: ", e.what()));
  }
  const Schema schema{std::string(origin)};
  if (!root.is_object()) schema.fail("(root)", "expected an object");
  if (root.contains("arch")) {
    schema.only_keys(root, "", {"arch", "input_size"});
    const std::string arch = schema.string(root, "", "arch", true);
    const int size = schema.integer(root, "", "input_size", 224, 32);
    try {
      return {arch, build_named(arch, size)};
    } catch (const ConfigError& e) {
      schema.fail("arch", e.what());
    }
  }
  return stack_from_json(root, schema);
}

Target load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(cat(path.string(), ": cannot open config file"));
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.string());
}

}  // namespace shufflenet
