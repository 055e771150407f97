// Attribute schema expansion, flow<->table conversion, min-max scalers,
// context-window encoding/padding, and the two masking modes.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <set>
#include <vector>

#include "doctest.h"
#include "stan/flow.hpp"
#include "stan/model.hpp"
#include "stan/rng.hpp"
#include "stan/schema.hpp"
#include "stan/table.hpp"

using namespace stan;

namespace {

std::vector<FlowRecord> tiny_flows() {
  auto mk = [](double te, const char* sa, const char* da, uint16_t sp,
               uint16_t dp, Protocol pr, int flg_idx, uint64_t pkt,
               uint64_t byt, double td) {
    FlowRecord f;
    f.te = te;
    f.td = td;
    f.sa = *parse_ipv4(sa);
    f.da = *parse_ipv4(da);
    f.sp = sp;
    f.dp = dp;
    f.pr = pr;
    f.flg = TcpFlags::from_index(flg_idx);
    f.pkt = pkt;
    f.byt = byt;
    return f;
  };
  return {
      mk(100.0, "42.219.156.1", "93.184.216.34", 51000, 443, Protocol::kTcp,
         19, 12, 4872, 0.8),
      mk(101.5, "42.219.156.2", "8.8.8.8", 40000, 53, Protocol::kUdp, 0, 1, 74,
         0.01),
      mk(105.0, "42.219.156.1", "93.184.216.34", 51001, 80, Protocol::kTcp, 27,
         30, 21000, 2.5),
      mk(105.0, "10.0.0.7", "10.0.0.8", 0, 0, Protocol::kOther, 0, 3, 252,
         0.2),
  };
}

}  // namespace

// ---------------------------------------------------------------------------
// Schema expansion
// ---------------------------------------------------------------------------

TEST_CASE("schema: netflow expands to 16 modeled columns, window width 81") {
  const AttributeSchema s = AttributeSchema::netflow();
  CHECK(s.attributes().size() == 10);
  CHECK(s.num_expanded() == 16);
  // dt + td + 8 octets + sp + dp + pr one-hot(3) + flg one-hot(64) + pkt + byt
  CHECK(s.width() == 1 + 1 + 8 + 1 + 1 + 3 + 64 + 1 + 1);
  CHECK(s.is_netflow());

  const std::vector<std::string> names = {"dt",   "td",   "sa.0", "sa.1",
                                          "sa.2", "sa.3", "da.0", "da.1",
                                          "da.2", "da.3", "sp",   "dp",
                                          "pr",   "flg",  "pkt",  "byt"};
  REQUIRE(s.num_expanded() == static_cast<int>(names.size()));
  for (int i = 0; i < s.num_expanded(); ++i) {
    const ExpandedAttribute& e = s.expanded()[i];
    CHECK(e.name == names[i]);
    if (e.name == "dt" || e.name == "td" || e.name == "pkt" ||
        e.name == "byt") {
      CHECK(e.cardinality == 0);
      CHECK(e.width == 1);
    } else if (e.name.substr(0, 3) == "sa." || e.name.substr(0, 3) == "da.") {
      CHECK(e.cardinality == 256);
      CHECK_FALSE(e.onehot);  // scalar-encoded octet
      CHECK(e.width == 1);
    } else if (e.name == "sp" || e.name == "dp") {
      CHECK(e.cardinality == kPortCategories);
      CHECK_FALSE(e.onehot);
      CHECK(e.width == 1);
    } else if (e.name == "pr") {
      CHECK(e.cardinality == 3);
      CHECK(e.onehot);
      CHECK(e.width == 3);
    } else if (e.name == "flg") {
      CHECK(e.cardinality == kFlagCategories);
      CHECK(e.onehot);
      CHECK(e.width == 64);
    }
  }
  // Column layout is contiguous and covers the full width exactly once.
  int col = 0;
  for (const auto& e : s.expanded()) {
    CHECK(e.col == col);
    col += e.width;
  }
  CHECK(col == s.width());
}

TEST_CASE("schema: default generation order follows declaration order") {
  const AttributeSchema s = AttributeSchema::netflow();
  const auto& order = s.generation_order();
  REQUIRE(order.size() == 16);
  for (size_t i = 0; i < order.size(); ++i) {
    CHECK(order[i] == static_cast<int>(i));
    CHECK(s.expanded()[order[i]].order == static_cast<int>(i));
  }
}

TEST_CASE("schema: generation order can be permuted by base attribute") {
  AttributeSchema s = AttributeSchema::netflow();
  s.set_generation_order(
      {"byt", "pkt", "flg", "pr", "dp", "sp", "da", "sa", "td", "te"});
  // byt now samples first, te (dt) last; every expanded column has a rank.
  CHECK(s.expanded()[s.expanded_index("byt")].order == 0);
  CHECK(s.expanded()[s.expanded_index("pkt")].order == 1);
  CHECK(s.expanded()[s.expanded_index("dt")].order == 15);
  std::set<int> ranks;
  for (const auto& e : s.expanded()) ranks.insert(e.order);
  CHECK(ranks.size() == 16);
  CHECK(*ranks.begin() == 0);
  CHECK(*ranks.rbegin() == 15);
  // The order list itself is sorted by rank.
  const auto& order = s.generation_order();
  for (size_t i = 0; i < order.size(); ++i)
    CHECK(s.expanded()[order[i]].order == static_cast<int>(i));
}

TEST_CASE("schema: invalid generation orders are rejected") {
  AttributeSchema s = AttributeSchema::netflow();
  CHECK_THROWS_AS(s.set_generation_order({"te", "td"}), ConfigError);
  CHECK_THROWS_AS(
      s.set_generation_order({"te", "te", "sa", "da", "sp", "dp", "pr", "flg",
                              "pkt", "byt"}),
      ConfigError);
  CHECK_THROWS_AS(
      s.set_generation_order({"te", "td", "sa", "da", "sp", "dp", "pr", "flg",
                              "pkt", "nonesuch"}),
      ConfigError);
}

TEST_CASE("schema: continuous schema and JSON round trip") {
  const AttributeSchema xy = AttributeSchema::continuous({"x", "y"});
  CHECK(xy.num_expanded() == 2);
  CHECK(xy.width() == 2);
  CHECK_FALSE(xy.is_netflow());
  CHECK(xy.expanded()[0].cardinality == 0);

  for (const AttributeSchema& s : {AttributeSchema::netflow(), xy}) {
    const AttributeSchema back = AttributeSchema::from_json(s.to_json());
    CHECK(back == s);
    CHECK(back.width() == s.width());
    CHECK(back.generation_order() == s.generation_order());
  }
  CHECK_THROWS_AS(AttributeSchema::from_json(nlohmann::json::object()),
                  ConfigError);
}

// ---------------------------------------------------------------------------
// Flows <-> table
// ---------------------------------------------------------------------------

TEST_CASE("table: te becomes delta to previous row; first delta is zero") {
  const AttributeSchema s = AttributeSchema::netflow();
  const auto flows = tiny_flows();
  const DataTable t = flows_to_table(flows, s);
  REQUIRE(t.rows() == flows.size());
  const int dt = s.expanded_index("dt");
  CHECK(t.at(0, dt) == 0.0);
  CHECK(t.at(1, dt) == doctest::Approx(1.5));
  CHECK(t.at(2, dt) == doctest::Approx(3.5));
  CHECK(t.at(3, dt) == 0.0);  // tied timestamps

  CHECK(t.at(0, s.expanded_index("td")) == doctest::Approx(0.8));
  CHECK(t.at(0, s.expanded_index("sa.0")) == 42);
  CHECK(t.at(0, s.expanded_index("sa.3")) == 1);
  CHECK(t.at(0, s.expanded_index("da.0")) == 93);
  CHECK(t.at(0, s.expanded_index("sp")) == port_to_category(51000));
  CHECK(t.at(0, s.expanded_index("dp")) == 443);  // <1024: identity
  CHECK(t.at(0, s.expanded_index("pr")) == 0);
  CHECK(t.at(1, s.expanded_index("pr")) == 1);
  CHECK(t.at(3, s.expanded_index("pr")) == 2);
  CHECK(t.at(0, s.expanded_index("flg")) == 19);
  CHECK(t.at(0, s.expanded_index("pkt")) == 12);
  CHECK(t.at(0, s.expanded_index("byt")) == 4872);

  const auto col = t.column(s.expanded_index("byt"));
  REQUIRE(col.size() == 4);
  CHECK(col[2] == 21000);
  CHECK_THROWS_AS(t.column(99), Error);
}

TEST_CASE("table: decode clamps negatives and rounds counts up to one") {
  AttributeSchema s = AttributeSchema::netflow();
  DataTable t(s);
  std::vector<double> row(16, 0.0);
  row[s.expanded_index("dt")] = -5.0;   // clamps to 0
  row[s.expanded_index("td")] = -1.0;   // clamps to 0
  row[s.expanded_index("sa.0")] = 10;
  row[s.expanded_index("da.0")] = 20;
  row[s.expanded_index("sp")] = 443;    // identity region
  row[s.expanded_index("dp")] = 1024;   // first wide bin [1024, 1123]
  row[s.expanded_index("pr")] = 0;
  row[s.expanded_index("flg")] = 19;
  row[s.expanded_index("pkt")] = 0.4;   // rounds to minimum 1
  row[s.expanded_index("byt")] = 2.6;   // rounds to 3
  t.append_row(row);

  Rng rng(42);
  const FlowRecord f = decode_row(t, 0, 1000.0, rng);
  CHECK(f.te == 1000.0);
  CHECK(f.td == 0.0);
  CHECK(f.sa[0] == 10);
  CHECK(f.da[0] == 20);
  CHECK(f.sp == 443);
  CHECK(f.dp >= 1024);
  CHECK(f.dp <= 1123);  // drawn inside the category's range
  CHECK(f.pr == Protocol::kTcp);
  CHECK(f.flg.index() == 19);
  CHECK(f.pkt == 1);
  CHECK(f.byt == 3);
}

TEST_CASE("table: flows -> table -> flows round trips exactly") {
  const AttributeSchema s = AttributeSchema::netflow();
  const auto flows = tiny_flows();
  const DataTable t = flows_to_table(flows, s);
  Rng rng(7);
  const auto back = table_to_flows(t, flows[0].te, rng);
  REQUIRE(back.size() == flows.size());
  for (size_t i = 0; i < flows.size(); ++i) {
    CHECK(back[i].te == doctest::Approx(flows[i].te).epsilon(1e-12));
    CHECK(back[i].td == doctest::Approx(flows[i].td).epsilon(1e-12));
    CHECK(back[i].sa == flows[i].sa);
    CHECK(back[i].da == flows[i].da);
    CHECK(back[i].pr == flows[i].pr);
    CHECK(back[i].flg == flows[i].flg);
    CHECK(back[i].pkt == flows[i].pkt);
    CHECK(back[i].byt == flows[i].byt);
    // Ports in the identity region are exact; binned ports stay in their bin.
    CHECK(port_to_category(back[i].sp) == port_to_category(flows[i].sp));
    CHECK(port_to_category(back[i].dp) == port_to_category(flows[i].dp));
    if (flows[i].dp < 1024) CHECK(back[i].dp == flows[i].dp);
  }
}

TEST_CASE("table: append_row validates width, slice copies rows") {
  const AttributeSchema s = AttributeSchema::continuous({"x", "y"});
  DataTable t(s);
  CHECK_THROWS_AS(t.append_row(std::vector<double>{1.0}), Error);
  t.append_row(std::vector<double>{1.0, 2.0});
  t.append_row(std::vector<double>{3.0, 4.0});
  t.append_row(std::vector<double>{5.0, 6.0});
  const DataTable mid = t.slice(1, 3);
  CHECK(mid.rows() == 2);
  CHECK(mid.at(0, 0) == 3.0);
  CHECK(mid.at(1, 1) == 6.0);
}

// ---------------------------------------------------------------------------
// Scalers
// ---------------------------------------------------------------------------

TEST_CASE("scalers: continuous ranges from data, categorical ranges fixed") {
  const AttributeSchema s = AttributeSchema::netflow();
  const DataTable t = flows_to_table(tiny_flows(), s);
  const ScalerParams sc = ScalerParams::fit(t);
  REQUIRE(sc.ranges.size() == 16);

  const int byt = s.expanded_index("byt");
  CHECK(sc.ranges[byt].lo == 74.0);
  CHECK(sc.ranges[byt].hi == 21000.0);
  // Categorical ranges ignore the data: full [0, C-1] span.
  CHECK(sc.ranges[s.expanded_index("sa.0")].lo == 0.0);
  CHECK(sc.ranges[s.expanded_index("sa.0")].hi == 255.0);
  CHECK(sc.ranges[s.expanded_index("sp")].hi == kPortCategories - 1);
  CHECK(sc.ranges[s.expanded_index("pr")].hi == 2.0);
  CHECK(sc.ranges[s.expanded_index("flg")].hi == 63.0);

  // Round trip within 1e-9 for in-range values.
  Rng rng(3);
  for (int trial = 0; trial < 1000; ++trial) {
    const double v = rng.uniform(74.0, 21000.0);
    const double sv = sc.scale(byt, v);
    CHECK(sv >= 0.0);
    CHECK(sv <= 1.0);
    CHECK(sc.unscale(byt, sv) == doctest::Approx(v).epsilon(1e-9));
  }

  // Out-of-range values clamp and are counted.
  size_t clamped = 0;
  CHECK(sc.scale(byt, 1e9, &clamped) == 1.0);
  CHECK(sc.scale(byt, -1e9, &clamped) == 0.0);
  CHECK(sc.scale(byt, 100.0, &clamped) > 0.0);
  CHECK(clamped == 2);

  const nlohmann::json j = sc.to_json();
  const ScalerParams back = ScalerParams::from_json(j);
  REQUIRE(back.ranges.size() == sc.ranges.size());
  for (size_t i = 0; i < sc.ranges.size(); ++i) {
    CHECK(back.ranges[i].lo == sc.ranges[i].lo);
    CHECK(back.ranges[i].hi == sc.ranges[i].hi);
  }
}

TEST_CASE("scalers: degenerate range maps to zero and unscales to itself") {
  const AttributeSchema s = AttributeSchema::continuous({"x", "y"});
  DataTable t(s);
  t.append_row(std::vector<double>{5.0, 1.0});
  t.append_row(std::vector<double>{5.0, 2.0});
  const ScalerParams sc = ScalerParams::fit(t);
  CHECK(sc.ranges[0].lo == 5.0);
  CHECK(sc.ranges[0].hi == 5.0);
  CHECK(sc.scale(0, 5.0) == 0.0);
  CHECK(sc.scale(0, 123.0) == 0.0);
  CHECK(sc.unscale(0, 0.0) == 5.0);
  CHECK(sc.unscale(0, 0.7) == 5.0);
}

// ---------------------------------------------------------------------------
// Window encoding
// ---------------------------------------------------------------------------

TEST_CASE("encode: one-hot categoricals, scalar octets and ports") {
  const AttributeSchema s = AttributeSchema::netflow();
  const DataTable t = flows_to_table(tiny_flows(), s);
  const ScalerParams sc = ScalerParams::fit(t);
  std::vector<float> row(s.width());
  const size_t clamped = encode_row(t, 0, sc, row.data());
  CHECK(clamped == 0);

  const auto& pr = s.expanded()[s.expanded_index("pr")];
  CHECK(row[pr.col + 0] == 1.0f);  // TCP
  CHECK(row[pr.col + 1] == 0.0f);
  CHECK(row[pr.col + 2] == 0.0f);
  const auto& flg = s.expanded()[s.expanded_index("flg")];
  int ones = 0;
  for (int c = 0; c < flg.width; ++c) ones += row[flg.col + c] == 1.0f;
  CHECK(ones == 1);
  CHECK(row[flg.col + 19] == 1.0f);

  const auto& sa0 = s.expanded()[s.expanded_index("sa.0")];
  CHECK(row[sa0.col] == doctest::Approx(42.0 / 255.0));
  const auto& dp = s.expanded()[s.expanded_index("dp")];
  CHECK(row[dp.col] == doctest::Approx(443.0 / (kPortCategories - 1)));
  const auto& byt = s.expanded()[s.expanded_index("byt")];
  CHECK(row[byt.col] ==
        doctest::Approx((4872.0 - 74.0) / (21000.0 - 74.0)).epsilon(1e-6));

  size_t total_clamped = 0;
  const auto all = encode_table(t, sc, &total_clamped);
  CHECK(all.size() == t.rows() * static_cast<size_t>(s.width()));
  CHECK(total_clamped == 0);
  for (int j = 0; j < s.width(); ++j) CHECK(all[j] == row[j]);
}

TEST_CASE("windows: leading rows are zero padded, later windows slide") {
  const AttributeSchema s = AttributeSchema::netflow();
  const DataTable t = flows_to_table(tiny_flows(), s);
  const ScalerParams sc = ScalerParams::fit(t);
  const auto enc = encode_table(t, sc);
  const int w = s.width(), k = 2;
  WindowBuilder wb(enc.data(), t.rows(), w, k);
  CHECK(wb.count() == t.rows());
  CHECK(wb.window_shape() == nn::Shape{1, 1, k + 1, w});

  std::vector<float> win((k + 1) * w);
  wb.fill(0, win.data());
  for (int j = 0; j < 2 * w; ++j) CHECK(win[j] == 0.0f);          // padding
  for (int j = 0; j < w; ++j) CHECK(win[2 * w + j] == enc[j]);    // row 0

  wb.fill(1, win.data());
  for (int j = 0; j < w; ++j) {
    CHECK(win[j] == 0.0f);
    CHECK(win[w + j] == enc[j]);
    CHECK(win[2 * w + j] == enc[w + j]);
  }

  wb.fill(3, win.data());
  for (int j = 0; j < (k + 1) * w; ++j) CHECK(win[j] == enc[w + j]);

  const std::vector<size_t> idx = {0, 3};
  const nn::Tensor batch = wb.batch(idx);
  CHECK(batch.shape() == nn::Shape{2, 1, k + 1, w});
  std::vector<float> w0((k + 1) * w), w3((k + 1) * w);
  wb.fill(0, w0.data());
  wb.fill(3, w3.data());
  for (int j = 0; j < (k + 1) * w; ++j) {
    CHECK(batch[j] == w0[j]);
    CHECK(batch[(k + 1) * w + j] == w3[j]);
  }
}

// ---------------------------------------------------------------------------
// Masks
// ---------------------------------------------------------------------------

TEST_CASE("masks: A hides the whole current row; B hides later-order columns") {
  const AttributeSchema s = AttributeSchema::netflow();
  const DataTable t = flows_to_table(tiny_flows(), s);
  const ScalerParams sc = ScalerParams::fit(t);
  const auto enc = encode_table(t, sc);
  const int w = s.width(), k = 2;
  WindowBuilder wb(enc.data(), t.rows(), w, k);
  const std::vector<size_t> idx = {2, 3};

  // Mask A: the current (last) window row becomes all zeros for every head;
  // history rows are untouched.
  for (int head : {0, 5, 15}) {
    nn::Tensor m = wb.batch(idx);
    const nn::Tensor orig = m;
    apply_mask(m, MaskKind::kA, s, head);
    for (int b = 0; b < 2; ++b) {
      for (int r = 0; r < k; ++r)
        for (int j = 0; j < w; ++j)
          CHECK(m.at(b, 0, r, j) == orig.at(b, 0, r, j));
      for (int j = 0; j < w; ++j) CHECK(m.at(b, 0, k, j) == 0.0f);
    }
  }

  // Mask B for head h: current-row columns of attributes sampled before h
  // stay visible; the head's own columns and all later ones are hidden.
  for (int head : {0, 3, 12, 15}) {
    nn::Tensor m = wb.batch(idx);
    const nn::Tensor orig = m;
    apply_mask(m, MaskKind::kB, s, head);
    const int rank = s.expanded()[head].order;
    for (int b = 0; b < 2; ++b) {
      for (int r = 0; r < k; ++r)
        for (int j = 0; j < w; ++j)
          CHECK(m.at(b, 0, r, j) == orig.at(b, 0, r, j));
      for (const auto& e : s.expanded())
        for (int c = e.col; c < e.col + e.width; ++c) {
          if (e.order >= rank) {
            CHECK(m.at(b, 0, k, c) == 0.0f);
          } else {
            CHECK(m.at(b, 0, k, c) == orig.at(b, 0, k, c));
          }
        }
    }
  }

  // Mask B for the first head in generation order equals mask A.
  nn::Tensor ma = wb.batch(idx), mb = wb.batch(idx);
  apply_mask(ma, MaskKind::kA, s, s.generation_order()[0]);
  apply_mask(mb, MaskKind::kB, s, s.generation_order()[0]);
  for (size_t i = 0; i < ma.size(); ++i) CHECK(ma[i] == mb[i]);

  // Shape validation.
  nn::Tensor bad({1, 1, 3, 5});
  CHECK_THROWS_AS(apply_mask(bad, MaskKind::kA, s, 0), ShapeError);
}
