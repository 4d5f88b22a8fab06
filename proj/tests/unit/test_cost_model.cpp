#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "oracle.hpp"
#include "shufflenet/architectures.hpp"
#include "shufflenet/blocks.hpp"
#include "shufflenet/cost_model.hpp"
#include "shufflenet/error.hpp"

using namespace shufflenet;

namespace {

Graph single_conv(int c1, int c2, int hw, int groups = 1, bool scale_shift = false) {
  GraphBuilder b({c1, hw, hw});
  const ValueRef y =
      b.conv(b.input(), {ConvSpec::pointwise(c1, c2, groups), false, scale_shift, false});
  return std::move(b).finish(y);
}

bool has(const std::vector<LintFinding>& fs, Guideline g) {
  return std::any_of(fs.begin(), fs.end(), [g](const LintFinding& f) { return f.guideline == g; });
}

}  // namespace

TEST_CASE("flops_conv worked values") {
  CHECK(flops_conv(ConvSpec::pointwise(128, 128), 56, 56) == 51'380'224);
  CHECK(flops_conv(ConvSpec::pointwise(180, 180, 2), 56, 56) == 50'803'200);
  CHECK(std::abs(50'803'200.0 / 51'380'224.0 - 1.0) < 0.012);
  CHECK_THROWS_AS(flops_conv(ConvSpec::pointwise(128, 0), 56, 56), ShapeError);
}

TEST_CASE("flops_conv equals the oracle's multiply-add trips") {
  std::mt19937_64 rng(21);
  std::uniform_int_distribution<int> pick(1, 4);
  for (int trial = 0; trial < 60; ++trial) {
    const int groups = pick(rng);
    const int k = 2 * (pick(rng) % 2) + 1;
    const ConvSpec spec{groups * pick(rng), groups * pick(rng), k, k, pick(rng) % 2 + 1,
                        pick(rng) % 2, groups};
    const int hw = 4 + pick(rng);
    const Tensor x(Shape{1, spec.c_in, hw, hw});
    Weights w;
    w.values.assign(spec.weight_count(), 0.0f);
    std::int64_t trips = 0;
    const Tensor y = oracle::conv(x, w, spec, false, &trips);
    CHECK(flops_conv(spec, y.h(), y.w()) == trips);
  }
}

TEST_CASE("memory access formulas") {
  CHECK(mac_conv1x1(56, 56, 128, 128) == 819'200);
  CHECK(mac_conv1x1(1, 1, 1, 1) == 3);
  CHECK(mac_lower_bound(3136.0 * 128 * 128, 3136.0) == doctest::Approx(819'200.0));
  CHECK(mac_conv1x1(56, 56, 90, 180) == 862'920);
  CHECK(mac_conv1x1(56, 56, 90, 180) > mac_lower_bound(3136.0 * 90 * 180, 3136.0));
  CHECK(mac_lower_bound(2000.0, 10.0) > mac_lower_bound(1000.0, 10.0));
  CHECK_THROWS_AS(mac_lower_bound(0.0, 10.0), std::invalid_argument);
  CHECK_THROWS_AS(mac_lower_bound(10.0, -1.0), std::invalid_argument);

  CHECK(mac_group_conv(56, 56, 128, 128, 1) == mac_conv1x1(56, 56, 128, 128));
  CHECK(mac_group_conv(56, 56, 360, 360, 8) == 2'274'120);
  const std::int64_t table2[] = {mac_group_conv(56, 56, 128, 128, 1),
                                 mac_group_conv(56, 56, 180, 180, 2),
                                 mac_group_conv(56, 56, 256, 256, 4),
                                 mac_group_conv(56, 56, 360, 360, 8)};
  CHECK(std::is_sorted(std::begin(table2), std::end(table2), std::less_equal<>()));
  CHECK(table2[0] < table2[1]);
  CHECK_THROWS_AS(mac_group_conv(56, 56, 100, 100, 3), ShapeError);
  CHECK_THROWS_AS(mac_group_conv(56, 56, 100, 100, 0), ShapeError);

  double prev = 0.0;
  for (double g : {1.0, 2.0, 4.0, 8.0}) {
    const double m = mac_group_conv_at_flops(3136.0, 128.0, 51'380'224.0, g);
    CHECK(m > prev);
    prev = m;
  }
}

TEST_CASE("node costs of element-wise operators") {
  GraphBuilder b({8, 5, 5});
  const ValueRef r = b.relu(b.input());
  const ValueRef a = b.add(r, b.input());
  const ValueRef d = b.conv(a, {ConvSpec::depthwise(8, 3, 1), false, true, false});
  const Graph g = std::move(b).finish(d);
  CHECK(node_cost(g, r.node).mac == 2 * 8 * 25);
  CHECK(node_cost(g, a.node).mac == 3 * 8 * 25);
  CHECK(node_cost(g, r.node).flops == 0);

  const CostReport rep = analyze(g);
  CHECK(rep.per_category.at(Category::Conv).flops == 25 * 8 * 9);
  CHECK(rep.per_category.at(Category::Conv).mac == 0);
  CHECK(rep.per_category.at(Category::Elementwise).mac == rep.mac);
  CHECK(rep.elementwise_mac_share() == doctest::Approx(1.0));
}

TEST_CASE("report totals equal sums and survive reordering") {
  const Graph g = make_v2_down(24, 116, 16);
  const CostReport rep = analyze(g);
  std::int64_t flops = 0, mac = 0, params = 0;
  for (const NodeCost& c : rep.nodes) {
    flops += c.flops;
    mac += c.mac;
    params += c.params;
  }
  CHECK(flops == rep.flops);
  CHECK(mac == rep.mac);
  CHECK(params == rep.params);
  std::int64_t cat_flops = 0, cat_mac = 0;
  for (const auto& [c, v] : rep.per_category) {
    CHECK(v.flops >= 0);
    CHECK(v.mac >= 0);
    cat_flops += v.flops;
    cat_mac += v.mac;
  }
  CHECK(cat_flops == rep.flops);
  CHECK(cat_mac == rep.mac);

  // Move the projection branch (proj_dw, proj_pw) after the main branch.
  std::vector<std::size_t> order(g.size());
  std::iota(order.begin(), order.end(), 0);
  std::rotate(order.begin() + 1, order.begin() + 3, order.begin() + 6);
  const Graph h = g.reordered(order);
  CHECK(h.node(1).name != g.node(1).name);
  const CostReport moved = analyze(h);
  CHECK(moved.flops == rep.flops);
  CHECK(moved.mac == rep.mac);
  CHECK(moved.params == rep.params);
  for (Category c : kAllCategories) {
    CHECK(moved.per_category.at(c).flops == rep.per_category.at(c).flops);
    CHECK(moved.per_category.at(c).mac == rep.per_category.at(c).mac);
  }
}

TEST_CASE("fragmentation degree") {
  CHECK(fragmentation_degree(make_bottleneck(128, true, true)) == 3);
  CHECK(fragmentation_degree(make_fragment_block(BlockKind::Fragment4Parallel, 128)) == 4);
  CHECK(fragmentation_degree(make_fragment_block(BlockKind::Fragment1, 128)) == 1);
  const Graph v1 = make_v1_down(240, 480, 3, 28);
  CHECK(fragmentation_degree(v1, 0) == 4);  // three convs plus the shortcut pool
}

TEST_CASE("parameter counts") {
  CHECK(param_count(single_conv(128, 128, 8)) == 16'384);
  CHECK(param_count(single_conv(128, 128, 8, 1, true)) == 16'384 + 256);
  GraphBuilder b({1024, 1, 1});
  const Graph fc = std::move(b).finish(b.fully_connected(b.input(), 1000));
  CHECK(param_count(fc) == 1'025'000);
  CHECK(param_count(build_shufflenet_v2(Width::X1)) == doctest::Approx(2.3e6).epsilon(0.05));
}

TEST_CASE("lint ground truth on single blocks") {
  const auto v1 = lint(make_v1_basic(240, 3));
  CHECK(has(v1, Guideline::G1));
  CHECK(has(v1, Guideline::G2));
  for (const LintFinding& f : v1) {
    CHECK_FALSE(f.nodes.empty());
    CHECK(f.value > f.threshold);
  }

  const auto v2 = lint(make_v2_basic(116));
  CHECK_FALSE(has(v2, Guideline::G1));
  CHECK_FALSE(has(v2, Guideline::G2));
  CHECK_FALSE(has(v2, Guideline::G3));

  CHECK(lint(single_conv(64, 64, 8)).empty());
}

TEST_CASE("lint thresholds and ordering") {
  const Graph g3 = make_v1_basic(240, 3);
  const Graph g8 = make_v1_basic(384, 8);
  const LintThresholds three{.g2_max_groups = 3};
  CHECK_FALSE(has(lint(g3, three), Guideline::G2));
  CHECK(has(lint(g8, three), Guideline::G2));

  const auto fs = lint(g8, three);
  for (std::size_t i = 1; i < fs.size(); ++i) CHECK(fs[i - 1].nodes.front() <= fs[i].nodes.front());
  for (const LintFinding& f : fs) {
    if (f.guideline == Guideline::G2) CHECK(f.severity == Severity::Severe);  // 8 > 2 * 3
  }

  const LintThresholds strict_frag{.g3_max_fragments = 2};
  const auto frag = lint(make_bottleneck(64, false, false), strict_frag);
  REQUIRE(has(frag, Guideline::G3));

  const LintThresholds no_ew{.g4_max_share = 0.0};
  const auto ew = lint(make_bottleneck(64, true, true), no_ew);
  REQUIRE(has(ew, Guideline::G4));

  const LintThresholds loose{.g1_max_ratio = 10.0, .g2_max_groups = 8, .g3_max_fragments = 9,
                             .g4_max_share = 1.0};
  CHECK(lint(g8, loose).empty());
}

TEST_CASE("bottleneck toggles order the memory access") {
  for (int c : {32, 64, 128}) {
    const auto mac = [c](bool r, bool s) { return analyze(make_bottleneck(c, r, s)).mac; };
    CHECK(mac(false, false) < mac(true, true));
    CHECK(mac(false, true) < mac(true, true));
    CHECK(mac(true, false) < mac(true, true));
  }
}
