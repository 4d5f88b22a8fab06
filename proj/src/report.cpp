#include "shufflenet/report.hpp"

#include <charconv>
#include <map>
#include <optional>
#include <stdexcept>

#include <json.hpp>

#include "strcat.hpp"

namespace shufflenet {

using detail::cat;
using nlohmann::ordered_json;

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view text) {
  double v = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw std::invalid_argument(cat("not a number: '", text, "'"));
  }
  return v;
}

std::int64_t parse_int(std::string_view text) {
  std::int64_t v = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw std::invalid_argument(cat("not an integer: '", text, "'"));
  }
  return v;
}

std::string csv_field(std::string_view text) {
  if (text.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(text);
  std::string out = "\"";
  for (char ch : text) {
    if (ch == '"') out += '"';
    out += ch;
  }
  out += '"';
  return out;
}

std::vector<std::vector<std::string>> parse_csv(std::string_view text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  bool any = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char ch = text[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += ch;
      }
      continue;
    }
    switch (ch) {
      case '"':
        quoted = true;
        any = true;
        break;
      case ',':
        row.push_back(std::move(field));
        field.clear();
        any = true;
        break;
      case '\r':
        break;
      case '\n':
        row.push_back(std::move(field));
        field.clear();
        rows.push_back(std::move(row));
        row.clear();
        any = false;
        break;
      default:
        field += ch;
        any = true;
    }
  }
  if (quoted) throw std::invalid_argument("parse_csv: unterminated quoted field");
  if (any) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<StageCost> stage_breakdown(const CostReport& report) {
  std::vector<StageCost> stages;
  std::map<std::string, std::size_t> index;
  for (const BlockCost& b : report.blocks) {
    const std::string& key = b.stage.empty() ? b.label : b.stage;
    auto [it, fresh] = index.try_emplace(key, stages.size());
    if (fresh) stages.push_back({key});
    StageCost& s = stages[it->second];
    s.flops += b.flops;
    s.mac += b.mac;
    s.params += b.params;
    ++s.blocks;
  }
  return stages;
}

std::string cost_report_json(const CostReport& report, std::string_view target) {
  ordered_json j;
  j["target"] = target;
  j["flops"] = report.flops;
  j["mac"] = report.mac;
  j["params"] = report.params;
  j["elementwise_mac_share"] = report.elementwise_mac_share();
  j["max_fragmentation"] = report.max_fragmentation();
  ordered_json cats = ordered_json::object();
  for (const auto& [c, cost] : report.per_category) {
    cats[std::string(to_string(c))] = {{"flops", cost.flops}, {"mac", cost.mac}};
  }
  j["categories"] = cats;
  ordered_json stages = ordered_json::array();
  for (const StageCost& s : stage_breakdown(report)) {
    stages.push_back({{"stage", s.stage},
                      {"blocks", s.blocks},
                      {"flops", s.flops},
                      {"mac", s.mac},
                      {"params", s.params}});
  }
  j["stages"] = stages;
  ordered_json blocks = ordered_json::array();
  for (const BlockCost& b : report.blocks) {
    blocks.push_back({{"label", b.label},
                      {"kind", b.kind},
                      {"role", to_string(b.role)},
                      {"stage", b.stage},
                      {"flops", b.flops},
                      {"mac", b.mac},
                      {"params", b.params},
                      {"fragmentation", b.fragmentation}});
  }
  j["blocks"] = blocks;
  return j.dump(2) + "\n";
}

std::string cost_report_csv(const CostReport& report) {
  std::string out = "scope,name,flops,mac,params\n";
  const auto line = [&](std::string_view scope, std::string_view name, std::int64_t flops,
                        std::int64_t mac, std::optional<std::int64_t> params) {
    out += cat(scope, ",", csv_field(name), ",", flops, ",", mac, ",");
    if (params) out += std::to_string(*params);
    out += "\n";
  };
  line("total", "all", report.flops, report.mac, report.params);
  for (const auto& [c, cost] : report.per_category) {
    // Depthwise convs split FLOPs and MAC across categories; params stay blank.
    line("category", to_string(c), cost.flops, cost.mac, std::nullopt);
  }
  for (const StageCost& s : stage_breakdown(report)) {
    line("stage", s.stage, s.flops, s.mac, s.params);
  }
  for (const BlockCost& b : report.blocks) line("block", b.label, b.flops, b.mac, b.params);
  return out;
}

namespace {

std::string join_nodes(const std::vector<std::size_t>& nodes) {
  std::string s;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (i) s += ' ';
    s += std::to_string(nodes[i]);
  }
  return s;
}

}  // namespace

std::string lint_json(const std::vector<LintFinding>& findings,
                      const LintThresholds& t, std::string_view target) {
  ordered_json j;
  j["target"] = target;
  j["thresholds"] = {{"g1_max_ratio", t.g1_max_ratio},
                     {"g2_max_groups", t.g2_max_groups},
                     {"g3_max_fragments", t.g3_max_fragments},
                     {"g4_max_share", t.g4_max_share}};
  ordered_json list = ordered_json::array();
  for (const LintFinding& f : findings) {
    list.push_back({{"guideline", to_string(f.guideline)},
                    {"severity", to_string(f.severity)},
                    {"block", f.block},
                    {"nodes", f.nodes},
                    {"value", f.value},
                    {"threshold", f.threshold},
                    {"message", f.message}});
  }
  j["findings"] = list;
  return j.dump(2) + "\n";
}

std::string lint_csv(const std::vector<LintFinding>& findings) {
  std::string out = "guideline,severity,block,value,threshold,nodes,message\n";
  for (const LintFinding& f : findings) {
    out += cat(to_string(f.guideline), ",", to_string(f.severity), ",", csv_field(f.block),
               ",", format_double(f.value), ",", format_double(f.threshold), ",",
               join_nodes(f.nodes), ",", csv_field(f.message), "\n");
  }
  return out;
}

std::vector<BenchRow> bench_rows(std::string_view experiment, std::string_view config,
                                 std::string_view scale, const BenchResult& result) {
  std::vector<BenchRow> rows;
  rows.reserve(result.wall_ns.size());
  for (std::size_t i = 0; i < result.wall_ns.size(); ++i) {
    rows.push_back({std::string(experiment), std::string(config), std::string(scale),
                    static_cast<int>(i), result.wall_ns[i]});
  }
  return rows;
}

std::vector<BenchRow> bench_rows(const ExperimentTable& table) {
  std::vector<BenchRow> rows;
  const std::string exp(to_string(table.experiment));
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    for (std::size_t c = 0; c < table.columns.size(); ++c) {
      auto part = bench_rows(exp, table.rows[r], table.columns[c], table.cells[r][c].result);
      rows.insert(rows.end(), part.begin(), part.end());
    }
  }
  return rows;
}

std::string bench_csv(const std::vector<BenchRow>& rows) {
  std::string out = cat(kBenchCsvHeader, "\n");
  for (const BenchRow& r : rows) {
    out += cat(csv_field(r.experiment), ",", csv_field(r.config), ",", csv_field(r.scale), ",",
               r.run_index, ",", r.wall_ns, "\n");
  }
  return out;
}

std::vector<BenchRow> parse_bench_csv(std::string_view text) {
  const auto table = parse_csv(text);
  if (table.empty()) throw std::invalid_argument("bench CSV is empty");
  std::string header;
  for (std::size_t i = 0; i < table[0].size(); ++i) header += (i ? "," : "") + table[0][i];
  if (header != kBenchCsvHeader) {
    throw std::invalid_argument(cat("unexpected bench CSV header: ", header));
  }
  std::vector<BenchRow> rows;
  for (std::size_t i = 1; i < table.size(); ++i) {
    const auto& f = table[i];
    if (f.size() != 5) throw std::invalid_argument(cat("bench CSV row ", i, " has ", f.size(),
                                                       " fields"));
    rows.push_back({f[0], f[1], f[2], static_cast<int>(parse_int(f[3])), parse_int(f[4])});
  }
  return rows;
}

namespace {

ordered_json shares_json(const CategoryShares& s) {
  ordered_json j;
  for (TimeCategory c : kAllTimeCategories) j[std::string(to_string(c))] = s.get(c);
  return j;
}

ordered_json config_json(const BenchConfig& c) {
  return {{"runs", c.runs},         {"warmup", c.warmup},         {"batch", c.batch},
          {"input_size", c.input_size}, {"pin_thread", c.pin_thread}, {"seed", c.seed},
          {"threads", c.threads}};
}

ordered_json result_json(const BenchResult& r) {
  return {{"mean_ns", r.mean_ns},
          {"std_ns", r.std_ns},
          {"median_ns", r.median_ns},
          {"runs", r.wall_ns.size()},
          {"outputs_consistent", r.outputs_consistent},
          {"shares", shares_json(r.shares)}};
}

}  // namespace

std::string bench_summary_json(const BenchResult& result, std::string_view target) {
  ordered_json j;
  j["target"] = target;
  j["config"] = config_json(result.config);
  j["result"] = result_json(result);
  return j.dump(2) + "\n";
}

std::string experiment_summary_csv(const ExperimentTable& t) {
  std::string out = "config";
  for (const std::string& c : t.columns) out += cat(",", csv_field(c), " median_ms");
  for (const std::string& c : t.columns) out += cat(",", csv_field(c), " mac");
  out += "\n";
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    out += csv_field(t.rows[r]);
    for (const ExperimentCell& cell : t.cells[r]) {
      out += cat(",", format_double(cell.result.median_ns / 1e6));
    }
    for (const ExperimentCell& cell : t.cells[r]) out += cat(",", cell.mac);
    out += "\n";
  }
  return out;
}

std::string experiment_summary_json(const ExperimentTable& t) {
  ordered_json j;
  j["experiment"] = to_string(t.experiment);
  j["rows"] = t.rows;
  j["columns"] = t.columns;
  j["scales"] = t.scales;
  ordered_json cells = ordered_json::array();
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    ordered_json row = ordered_json::array();
    for (const ExperimentCell& cell : t.cells[r]) {
      ordered_json c = result_json(cell.result);
      c["flops"] = cell.flops;
      c["mac"] = cell.mac;
      row.push_back(c);
    }
    cells.push_back(row);
  }
  j["cells"] = cells;
  if (const auto trend = g2_trend_holds(t)) j["g2_trend_informational"] = *trend;
  if (!t.cells.empty() && !t.cells[0].empty()) j["config"] = config_json(t.cells[0][0].result.config);
  return j.dump(2) + "\n";
}

std::string reuse_csv(const ReuseMatrix& m) {
  std::string out;
  for (int s = 0; s < m.blocks; ++s) {
    for (int l = 0; l < m.blocks; ++l) {
      if (l) out += ',';
      out += format_double(m.at(s, l));
    }
    out += '\n';
  }
  return out;
}

ReuseMatrix parse_reuse_csv(std::string_view text, double r) {
  const auto rows = parse_csv(text);
  const int n = static_cast<int>(rows.size());
  ReuseMatrix m{n, r, {}};
  m.values.reserve(static_cast<std::size_t>(n) * n);
  for (int s = 0; s < n; ++s) {
    if (static_cast<int>(rows[s].size()) != n) {
      throw std::invalid_argument(cat("reuse CSV row ", s, " has ", rows[s].size(),
                                      " entries, expected ", n));
    }
    for (const std::string& f : rows[s]) m.values.push_back(parse_double(f));
  }
  return m;
}

std::string reuse_json(const ReuseMatrix& m) {
  ordered_json j;
  j["blocks"] = m.blocks;
  j["r"] = m.r;
  ordered_json rows = ordered_json::array();
  for (int s = 0; s < m.blocks; ++s) rows.push_back(m.row(s));
  j["matrix"] = rows;
  return j.dump(2) + "\n";
}

}  // namespace shufflenet
