// Distribution metrics (histograms, divergence, attribute NLL), protocol
// validity rules, and flow-level summaries.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <vector>

#include "doctest.h"
#include "stan/flow.hpp"
#include "stan/metrics.hpp"
#include "stan/model.hpp"
#include "stan/rng.hpp"
#include "stan/rules.hpp"
#include "stan/table.hpp"

using namespace stan;

namespace {

std::vector<double> random_simplex(int k, Rng& rng) {
  std::vector<double> p(k);
  double total = 0;
  for (double& x : p) {
    x = -std::log(1.0 - rng.uniform());  // exponential
    total += x;
  }
  for (double& x : p) x /= total;
  return p;
}

}  // namespace

// ---------------------------------------------------------------------------
// Histograms and divergence
// ---------------------------------------------------------------------------

TEST_CASE("histogram: (lo, hi] bins, minimum in bin 0, clamped overflow") {
  const auto edges = equal_width_edges(0.0, 10.0, 5);
  REQUIRE(edges.size() == 6);
  CHECK(edges.front() == 0.0);
  CHECK(edges.back() == 10.0);
  CHECK(edges[1] == doctest::Approx(2.0));

  const std::vector<double> values = {0.0, 2.0, 2.00001, 4.0, 10.0,
                                      -5.0, 15.0, 1.0};
  const auto mass = histogram_mass(values, edges);
  REQUIRE(mass.size() == 5);
  double total = 0;
  for (double m : mass) total += m;
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  // bin 0 (0,2]: 0.0 (minimum), 2.0, -5.0 (clamped), 1.0 -> 4/8
  CHECK(mass[0] == doctest::Approx(4.0 / 8.0));
  // bin 1 (2,4]: 2.00001, 4.0 -> 2/8
  CHECK(mass[1] == doctest::Approx(2.0 / 8.0));
  // bin 4 (8,10]: 10.0, 15.0 (clamped) -> 2/8
  CHECK(mass[4] == doctest::Approx(2.0 / 8.0));

  const std::vector<double> cats = {0, 2, 2, 1, 2, 5};
  const auto cmass = categorical_mass(cats, 6);
  REQUIRE(cmass.size() == 6);
  CHECK(cmass[2] == doctest::Approx(0.5));
  CHECK(cmass[3] == 0.0);
  CHECK(cmass[5] == doctest::Approx(1.0 / 6.0));
}

TEST_CASE("jsd: pinned value for a maximally informative pair") {
  const std::vector<double> p = {0.5, 0.5}, q = {1.0, 0.0};
  // 1 - H(3/4) in bits = 1 - (-(3/4)log2(3/4) - (1/4)log2(1/4))
  CHECK(jensen_shannon_divergence(p, q) ==
        doctest::Approx(0.31127812445913283).epsilon(1e-12));
  const std::vector<double> r = {1.0, 0.0}, s = {0.0, 1.0};
  CHECK(jensen_shannon_divergence(r, s) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("jsd: properties over random simplex pairs") {
  Rng rng(55);
  for (int trial = 0; trial < 1000; ++trial) {
    const int k = 2 + int(rng.integer(8));
    const auto p = random_simplex(k, rng);
    const auto q = random_simplex(k, rng);
    const double d = jensen_shannon_divergence(p, q);
    CHECK(d >= 0.0);
    CHECK(d <= 1.0 + 1e-12);
    CHECK(d == doctest::Approx(jensen_shannon_divergence(q, p))
                   .epsilon(1e-12));  // symmetric
    CHECK(jensen_shannon_divergence(p, p) ==
          doctest::Approx(0.0).epsilon(1e-12));
  }
}

TEST_CASE("jsd: unnormalized or mismatched inputs are rejected") {
  const std::vector<double> p = {0.5, 0.5}, big = {0.9, 0.9},
                            three = {0.2, 0.3, 0.5};
  CHECK_THROWS_AS(jensen_shannon_divergence(p, big), Error);
  CHECK_THROWS_AS(jensen_shannon_divergence(big, p), Error);
  CHECK_THROWS_AS(jensen_shannon_divergence(p, three), Error);
}

TEST_CASE("compare_tables: identical tables diverge nowhere") {
  const AttributeSchema s = AttributeSchema::continuous({"x", "y"});
  DataTable t(s);
  Rng rng(4);
  for (int i = 0; i < 500; ++i)
    t.append_row(std::vector<double>{rng.normal(), rng.uniform(0, 5)});
  const auto comps = compare_tables(t, t, 40);
  REQUIRE(comps.size() == 2);
  CHECK(comps[0].attribute == "x");
  for (const auto& c : comps) CHECK(c.jsd == doctest::Approx(0.0).epsilon(1e-12));

  // Disjoint supports have maximal divergence.
  DataTable shifted(s);
  for (size_t i = 0; i < t.rows(); ++i)
    shifted.append_row(std::vector<double>{t.at(i, 0) + 1000.0, t.at(i, 1)});
  const auto far = compare_tables(t, shifted, 40);
  CHECK(far[0].jsd > 0.99);
  CHECK(far[1].jsd == doctest::Approx(0.0).epsilon(1e-12));
}

// ---------------------------------------------------------------------------
// Attribute NLL
// ---------------------------------------------------------------------------

TEST_CASE("nll: self-likelihood of the empirical density is the entropy") {
  const AttributeSchema s = AttributeSchema::netflow();
  const auto flows = read_flow_csv(std::string(STAN_DATA_DIR) +
                                   "/sample_flows.csv",
                                   {.skip_bad_rows = false, .max_rows = 3000});
  const DataTable t = flows_to_table(flows, s);
  const NllBinning binning = make_nll_binning(t, t, 100);
  const EmpiricalDensity density(t, binning);
  const NllReport report = attribute_nll(density, t, binning);
  REQUIRE(report.names.size() == 16);
  REQUIRE(report.nll.size() == 16);
  CHECK(report.floored == 0);  // every observed bin has empirical mass

  for (int j = 0; j < 16; ++j) {
    // Discrete entropy of the binned attribute, computed independently.
    const auto& e = s.expanded()[j];
    std::vector<double> mass;
    const auto col = t.column(j);
    if (e.cardinality > 0) {
      mass = categorical_mass(col, e.cardinality);
    } else {
      mass = histogram_mass(col, binning.edges[j]);
    }
    double entropy = 0;
    for (double m : mass)
      if (m > 0) entropy -= m * std::log(m);
    CHECK(report.nll[j] == doctest::Approx(entropy).epsilon(1e-9));
    CHECK(report.get(report.names[j]) == report.nll[j]);
  }
  CHECK_THROWS_AS(report.get("nonesuch"), Error);

  const nlohmann::json j = report.to_json();
  REQUIRE(j.contains("per_attribute"));
  REQUIRE(j.contains("floored"));
  CHECK(j["per_attribute"].size() == 16);
  CHECK(j["per_attribute"]["byt"].get<double>() ==
        doctest::Approx(report.get("byt")));
}

TEST_CASE("nll: binning index respects (lo, hi] semantics") {
  const AttributeSchema s = AttributeSchema::continuous({"x"});
  DataTable a(s), b(s);
  for (int i = 0; i <= 10; ++i) a.append_row(std::vector<double>{double(i)});
  b.append_row(std::vector<double>{2.5});
  const NllBinning binning = make_nll_binning(a, b, 10);
  REQUIRE(binning.edges.size() == 1);
  REQUIRE(binning.edges[0].size() == 11);
  CHECK(binning.edges[0].front() == 0.0);
  CHECK(binning.edges[0].back() == 10.0);
  CHECK(binning.index(0, 0.0) == 0);   // minimum falls into bin 0
  CHECK(binning.index(0, 1.0) == 0);   // (0, 1]
  CHECK(binning.index(0, 1.0001) == 1);
  CHECK(binning.index(0, 10.0) == 9);
  CHECK(binning.index(0, -99.0) == 0);  // clamped
  CHECK(binning.index(0, 99.0) == 9);
}

TEST_CASE("nll: model cross-entropy is bounded below by the entropy") {
  const auto flows = read_flow_csv(std::string(STAN_DATA_DIR) +
                                   "/sample_flows.csv",
                                   {.skip_bad_rows = false, .max_rows = 4000});
  const DataTable t = flows_to_table(flows, AttributeSchema::netflow());
  const NllBinning binning = make_nll_binning(t, t, 100);
  const EmpiricalDensity self(t, binning);
  const NllReport entropy = attribute_nll(self, t, binning);

  EmConfig em;
  em.components = 10;
  const GmmModel gmm = GmmModel::fit(t, em);
  const GmmDensity density(gmm);
  const NllReport model_nll = attribute_nll(density, t, binning);
  for (size_t j = 0; j < entropy.nll.size(); ++j) {
    // Gibbs: cross entropy >= entropy, up to discretization slack.
    CHECK(model_nll.nll[j] >= entropy.nll[j] - 0.02);
    CHECK(std::isfinite(model_nll.nll[j]));
  }
}

TEST_CASE("nll: teacher-forced network density is a proper distribution") {
  const auto flows = read_flow_csv(std::string(STAN_DATA_DIR) +
                                   "/sample_flows.csv",
                                   {.skip_bad_rows = false, .max_rows = 400});
  const DataTable t = flows_to_table(flows, AttributeSchema::netflow());
  TrainConfig cfg;
  cfg.k = 2;
  cfg.components = 3;
  cfg.epochs = 1;
  cfg.batch_size = 128;
  cfg.seed = 7;
  cfg.trunk.naive = true;
  const StanModel m = StanModel::train(t, cfg);

  const DataTable tail = t.slice(300, 360);
  const StanDensity density(m, tail);
  const auto& schema = m.schema();
  const NllBinning binning = make_nll_binning(t, t, 50);
  for (int j : {schema.expanded_index("byt"), schema.expanded_index("dt")}) {
    // Total mass over the attribute's full real line is 1 per row.
    CHECK(density.bin_mass(tail, 5, j, -1e15, 1e15) ==
          doctest::Approx(1.0).epsilon(1e-5));
  }
  // Categorical masses agree with the head probabilities of the observed
  // category, teacher-forced on the true context.
  const int pr = schema.expanded_index("pr");
  const auto enc = encode_table(tail, m.scalers());
  WindowBuilder wb(enc.data(), tail.rows(), schema.width(), m.k());
  nn::Tensor win({1, 1, m.k() + 1, schema.width()});
  for (size_t i : {size_t{0}, size_t{5}, size_t{20}}) {
    wb.fill(i, win.data());
    const auto probs = m.head_categorical(win, pr);
    const int observed = static_cast<int>(tail.at(i, pr));
    const double mass = density.category_mass(tail, i, pr, observed);
    CHECK(mass == doctest::Approx(probs[observed]).epsilon(1e-5));
    CHECK(mass > 0.0);
    CHECK(mass <= 1.0);
  }

  const NllReport report = attribute_nll(density, tail, binning);
  for (double v : report.nll) CHECK(std::isfinite(v));
}

// ---------------------------------------------------------------------------
// Validity rules
// ---------------------------------------------------------------------------

namespace {

FlowRecord base_flow() {
  FlowRecord f;
  f.te = 100;
  f.td = 0.5;
  f.sa = *parse_ipv4("42.219.156.1");
  f.da = *parse_ipv4("93.184.216.34");
  f.sp = 51000;
  f.dp = 443;
  f.pr = Protocol::kTcp;
  f.flg = *TcpFlags::parse(".AP.SF");
  f.pkt = 10;
  f.byt = 4000;
  return f;
}

}  // namespace

TEST_CASE("rules: a well-formed TCP flow passes every applicable test") {
  const FlowRecord f = base_flow();
  CHECK(rule1_applies(f));
  CHECK(rule1_passes(f));
  CHECK(rule2_applies(f));
  CHECK(rule2_passes(f));
  CHECK(rule3_applies(f));
  CHECK(rule3_passes(f));
  CHECK_FALSE(rule4_applies(f));  // TCP record: flag test not applicable
  CHECK(rule5_applies(f));        // port 443 present
  CHECK(rule5_passes(f));
}

TEST_CASE("rules: address sanity catches multicast, reserved and zero nets") {
  FlowRecord f = base_flow();
  f.sa = *parse_ipv4("224.0.0.5");  // multicast source
  CHECK_FALSE(rule1_passes(f));
  f.sa = *parse_ipv4("239.255.255.250");
  CHECK_FALSE(rule1_passes(f));
  f.sa = *parse_ipv4("255.1.2.3");  // reserved /8
  CHECK_FALSE(rule1_passes(f));
  f.sa = *parse_ipv4("223.255.255.255");  // just below multicast: fine
  CHECK(rule1_passes(f));
  f = base_flow();
  f.da = *parse_ipv4("0.1.2.3");  // destination in 0.0.0.0/8
  CHECK_FALSE(rule1_passes(f));
}

TEST_CASE("rules: minimum size depends on the protocol") {
  FlowRecord f = base_flow();
  f.pkt = 1;
  f.byt = 39;  // below the 40-byte minimum TCP packet
  CHECK_FALSE(rule2_passes(f));
  CHECK_FALSE(rule3_passes(f));
  f.byt = 40;
  CHECK(rule2_passes(f));
  CHECK(rule3_passes(f));

  f.pr = Protocol::kUdp;
  f.flg = TcpFlags{0};
  f.byt = 28;
  CHECK(rule2_passes(f));
  f.byt = 27;
  CHECK_FALSE(rule2_passes(f));

  f.pr = Protocol::kOther;
  f.byt = 1;
  CHECK(rule2_passes(f));
  f.byt = 0;
  CHECK_FALSE(rule2_passes(f));
  f.byt = 10;
  f.pkt = 0;
  CHECK_FALSE(rule2_passes(f));
}

TEST_CASE("rules: bytes-per-packet window applies to TCP and UDP only") {
  FlowRecord f = base_flow();
  f.pkt = 10;
  f.byt = 400;  // exactly 40 per packet
  CHECK(rule3_passes(f));
  f.byt = 399;
  CHECK_FALSE(rule3_passes(f));
  f.byt = 65535ull * 10;
  CHECK(rule3_passes(f));
  f.byt = 65535ull * 10 + 1;
  CHECK_FALSE(rule3_passes(f));

  f.pr = Protocol::kUdp;
  f.flg = TcpFlags{0};
  f.byt = 280;
  CHECK(rule3_passes(f));
  f.byt = 279;
  CHECK_FALSE(rule3_passes(f));

  f.pr = Protocol::kOther;
  CHECK_FALSE(rule3_applies(f));
}

TEST_CASE("rules: flags only on TCP; web ports only on TCP") {
  FlowRecord f = base_flow();
  f.pr = Protocol::kUdp;
  CHECK(rule4_applies(f));
  CHECK_FALSE(rule4_passes(f));  // UDP with .AP.SF flags
  f.flg = TcpFlags{0};
  CHECK(rule4_passes(f));

  // Port 80/443 on a non-TCP record violates the web-port rule.
  f.dp = 80;
  CHECK(rule5_applies(f));
  CHECK_FALSE(rule5_passes(f));
  f.dp = 8080;
  f.sp = 443;
  CHECK(rule5_applies(f));  // source side counts too
  CHECK_FALSE(rule5_passes(f));
  f.sp = 9999;
  CHECK_FALSE(rule5_applies(f));

  FlowRecord tcp = base_flow();
  tcp.dp = 80;
  CHECK(rule5_passes(tcp));
}

TEST_CASE("rules: report aggregates rates and first failures") {
  std::vector<FlowRecord> flows;
  flows.push_back(base_flow());  // clean
  FlowRecord bad_flags = base_flow();
  bad_flags.pr = Protocol::kUdp;
  bad_flags.dp = 53;
  flows.push_back(bad_flags);  // UDP with flags: fails test 4
  FlowRecord tiny = base_flow();
  tiny.pkt = 1;
  tiny.byt = 10;
  flows.push_back(tiny);  // fails tests 2 and 3
  FlowRecord multicast = base_flow();
  multicast.sa = *parse_ipv4("230.0.0.1");
  flows.push_back(multicast);  // fails test 1

  RuleOptions opt;
  opt.annotate = true;
  const RuleReport report = check_rules(flows, opt);
  CHECK(report.records == 4);
  CHECK(report.records_all_pass == 1);
  CHECK(report.all_pass_rate() == doctest::Approx(0.25));

  CHECK(report.tests[0].evaluated == 4);  // rule 1 applies to all
  CHECK(report.tests[0].passed == 3);
  CHECK(report.tests[1].evaluated == 4);
  CHECK(report.tests[1].passed == 3);
  CHECK(report.tests[2].evaluated == 4);  // all records here are TCP/UDP
  CHECK(report.tests[2].passed == 3);
  CHECK(report.tests[3].evaluated == 1);  // only the UDP record
  CHECK(report.tests[3].passed == 0);
  CHECK(report.tests[4].evaluated == 3);  // records with port 80/443
  CHECK(report.tests[4].passed == 3);

  REQUIRE(report.first_failure.size() == 4);
  CHECK(report.first_failure[0] == 0);
  CHECK(report.first_failure[1] == 4);
  CHECK(report.first_failure[2] == 2);  // test 2 fails before test 3
  CHECK(report.first_failure[3] == 1);

  const nlohmann::json j = report.to_json();
  REQUIRE(j.contains("tests"));
  CHECK(j["tests"].size() == 5);
  CHECK(j["records"] == 4);

  // Empty input: vacuous pass.
  const RuleReport empty = check_rules({});
  CHECK(empty.all_pass_rate() == 1.0);
  CHECK(empty.tests[0].pass_rate() == 1.0);
}

TEST_CASE("rules: the bundled sample corpus is fully valid") {
  const auto flows =
      read_flow_csv(std::string(STAN_DATA_DIR) + "/sample_flows.csv");
  const RuleReport report = check_rules(flows);
  CHECK(report.records == flows.size());
  for (int t = 0; t < 5; ++t) {
    CHECK(report.tests[t].evaluated > 0);
    CHECK(report.tests[t].pass_rate() == 1.0);
  }
  CHECK(report.all_pass_rate() == 1.0);
}

// ---------------------------------------------------------------------------
// Flow summaries
// ---------------------------------------------------------------------------

TEST_CASE("summaries: per-user peers and byte volumes") {
  auto mk = [](const char* sa, const char* da, uint64_t byt) {
    FlowRecord f = base_flow();
    f.sa = *parse_ipv4(sa);
    f.da = *parse_ipv4(da);
    f.byt = byt;
    return f;
  };
  const std::vector<FlowRecord> flows = {
      mk("10.0.0.1", "10.0.0.2", 100),
      mk("10.0.0.1", "10.0.0.3", 50),
      mk("10.0.0.2", "10.0.0.1", 25),
  };
  const UserActivity act = user_activity(flows);
  REQUIRE(act.users.size() == 3);
  CHECK(std::is_sorted(act.users.begin(), act.users.end()));
  const uint32_t u1 = ipv4_key(*parse_ipv4("10.0.0.1"));
  const size_t i1 =
      std::lower_bound(act.users.begin(), act.users.end(), u1) -
      act.users.begin();
  CHECK(act.unique_peers[i1] == 2.0);   // talks to .2 and .3
  CHECK(act.byte_volume[i1] == 175.0);  // 100 + 50 + 25
  const uint32_t u3 = ipv4_key(*parse_ipv4("10.0.0.3"));
  const size_t i3 =
      std::lower_bound(act.users.begin(), act.users.end(), u3) -
      act.users.begin();
  CHECK(act.unique_peers[i3] == 1.0);
  CHECK(act.byte_volume[i3] == 50.0);
}

TEST_CASE("summaries: destination port shares within a protocol") {
  std::vector<FlowRecord> flows;
  auto add = [&](Protocol pr, uint16_t dp, int n) {
    for (int i = 0; i < n; ++i) {
      FlowRecord f = base_flow();
      f.pr = pr;
      if (pr != Protocol::kTcp) f.flg = TcpFlags{0};
      f.dp = dp;
      flows.push_back(f);
    }
  };
  add(Protocol::kTcp, 443, 60);
  add(Protocol::kTcp, 80, 30);
  add(Protocol::kTcp, 22, 10);
  add(Protocol::kUdp, 53, 5);

  const auto tcp = top_ports(flows, Protocol::kTcp, 0.01, 10);
  REQUIRE(tcp.size() == 3);
  CHECK(tcp[0].port == 443);
  CHECK(tcp[0].share == doctest::Approx(0.6));
  CHECK(tcp[1].port == 80);
  CHECK(tcp[1].share == doctest::Approx(0.3));
  CHECK(tcp[2].port == 22);

  // Shares are within the protocol, so UDP:53 has share 1.
  const auto udp = top_ports(flows, Protocol::kUdp, 0.01, 10);
  REQUIRE(udp.size() == 1);
  CHECK(udp[0].port == 53);
  CHECK(udp[0].share == doctest::Approx(1.0));

  // min_share filters, limit truncates.
  CHECK(top_ports(flows, Protocol::kTcp, 0.25, 10).size() == 2);
  CHECK(top_ports(flows, Protocol::kTcp, 0.01, 1).size() == 1);
  CHECK(top_ports(flows, Protocol::kOther, 0.01, 10).empty());
}
