// Field codecs: protocol names, TCP flag strings, IPv4 parsing, datetime
// conversion, port-category binning, and the flow CSV reader/writer.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <sstream>
#include <vector>

#include "doctest.h"
#include "stan/flow.hpp"
#include "stan/rng.hpp"
#include "stan/schema.hpp"

using namespace stan;

// ---------------------------------------------------------------------------
// Protocol
// ---------------------------------------------------------------------------

TEST_CASE("protocol: canonical names round trip, unknowns collapse to OTHER") {
  CHECK(protocol_name(Protocol::kTcp) == "TCP");
  CHECK(protocol_name(Protocol::kUdp) == "UDP");
  CHECK(protocol_name(Protocol::kOther) == "OTHER");
  CHECK(protocol_from_name("TCP") == Protocol::kTcp);
  CHECK(protocol_from_name("tcp") == Protocol::kTcp);
  CHECK(protocol_from_name("Udp") == Protocol::kUdp);
  CHECK(protocol_from_name("ICMP") == Protocol::kOther);
  CHECK(protocol_from_name("GRE") == Protocol::kOther);
  CHECK(protocol_from_name("") == Protocol::kOther);
  for (Protocol p : {Protocol::kTcp, Protocol::kUdp, Protocol::kOther})
    CHECK(protocol_from_name(protocol_name(p)) == p);
}

// ---------------------------------------------------------------------------
// TCP flags
// ---------------------------------------------------------------------------

TEST_CASE("flags: every 6-bit mask round trips through the string form") {
  for (int idx = 0; idx < 64; ++idx) {
    const TcpFlags f = TcpFlags::from_index(idx);
    CHECK(f.index() == idx);
    const std::string s = f.str();
    REQUIRE(s.size() == 6);
    const auto parsed = TcpFlags::parse(s);
    REQUIRE(parsed.has_value());
    CHECK(parsed->bits == f.bits);
  }
  CHECK_THROWS_AS(TcpFlags::from_index(64), Error);
  CHECK_THROWS_AS(TcpFlags::from_index(-1), Error);
}

TEST_CASE("flags: fixed UAPRSF positions with known bit values") {
  CHECK(TcpFlags::from_index(0).str() == "......");
  CHECK(TcpFlags::from_index(63).str() == "UAPRSF");
  // ACK(16) + SYN(2) + FIN(1) = 19
  const auto asf = TcpFlags::parse(".A..SF");
  REQUIRE(asf.has_value());
  CHECK(asf->index() == 19);
  CHECK(TcpFlags::from_index(19).str() == ".A..SF");
  const auto syn = TcpFlags::parse("....S.");
  REQUIRE(syn.has_value());
  CHECK(syn->index() == 2);
  const auto urg = TcpFlags::parse("U.....");
  REQUIRE(urg.has_value());
  CHECK(urg->index() == 32);
  CHECK_FALSE(TcpFlags{0}.any());
  CHECK(TcpFlags{2}.any());
}

TEST_CASE("flags: malformed strings are rejected") {
  CHECK_FALSE(TcpFlags::parse("").has_value());
  CHECK_FALSE(TcpFlags::parse(".A..S").has_value());    // too short
  CHECK_FALSE(TcpFlags::parse(".A..SF.").has_value());  // too long
  CHECK_FALSE(TcpFlags::parse("A.....").has_value());   // A in URG slot
  CHECK_FALSE(TcpFlags::parse("......x").has_value());
  CHECK_FALSE(TcpFlags::parse("UAPRSX").has_value());
}

// ---------------------------------------------------------------------------
// IPv4
// ---------------------------------------------------------------------------

TEST_CASE("ipv4: parse/format round trip and key packing") {
  const auto ip = parse_ipv4("42.219.156.1");
  REQUIRE(ip.has_value());
  CHECK((*ip)[0] == 42);
  CHECK((*ip)[3] == 1);
  CHECK(ipv4_str(*ip) == "42.219.156.1");
  CHECK(ipv4_key(*ip) == ((42u << 24) | (219u << 16) | (156u << 8) | 1u));

  Rng rng(77);
  for (int i = 0; i < 10000; ++i) {
    const uint32_t key = static_cast<uint32_t>(rng.raw());
    const Ipv4 a = ipv4_from_key(key);
    CHECK(ipv4_key(a) == key);
    const auto b = parse_ipv4(ipv4_str(a));
    REQUIRE(b.has_value());
    CHECK(*b == a);
  }
}

TEST_CASE("ipv4: malformed addresses are rejected") {
  CHECK_FALSE(parse_ipv4("").has_value());
  CHECK_FALSE(parse_ipv4("1.2.3").has_value());
  CHECK_FALSE(parse_ipv4("1.2.3.4.5").has_value());
  CHECK_FALSE(parse_ipv4("256.1.1.1").has_value());
  CHECK_FALSE(parse_ipv4("1.2.3.-4").has_value());
  CHECK_FALSE(parse_ipv4("a.b.c.d").has_value());
  CHECK_FALSE(parse_ipv4("1.2.3.4 ").has_value());
}

// ---------------------------------------------------------------------------
// Datetime
// ---------------------------------------------------------------------------

TEST_CASE("datetime: known epoch values including a leap day") {
  auto t = parse_datetime("2016-04-11 13:30:05");
  REQUIRE(t.has_value());
  CHECK(*t == 1460381405.0);
  t = parse_datetime("2016-02-29 12:00:00");
  REQUIRE(t.has_value());
  CHECK(*t == 1456747200.0);
  t = parse_datetime("1970-01-01 00:00:00");
  REQUIRE(t.has_value());
  CHECK(*t == 0.0);
  CHECK(format_datetime(1460381405.0) == "2016-04-11 13:30:05");
  CHECK(format_datetime(1456747200.0) == "2016-02-29 12:00:00");
  CHECK(format_datetime(0.0) == "1970-01-01 00:00:00");
  CHECK(format_datetime(-1.0) == "1969-12-31 23:59:59");
}

TEST_CASE("datetime: parse/format round trips across a wide range") {
  Rng rng(78);
  for (int i = 0; i < 2000; ++i) {
    // 1990..2040, whole seconds
    const double t = std::floor(rng.uniform(631152000.0, 2208988800.0));
    const std::string s = format_datetime(t);
    const auto back = parse_datetime(s);
    REQUIRE(back.has_value());
    CHECK(*back == t);
  }
}

TEST_CASE("datetime: malformed strings are rejected") {
  CHECK_FALSE(parse_datetime("").has_value());
  CHECK_FALSE(parse_datetime("2016-04-11").has_value());
  CHECK_FALSE(parse_datetime("2016-13-01 00:00:00").has_value());
  CHECK_FALSE(parse_datetime("2016-00-01 00:00:00").has_value());
  CHECK_FALSE(parse_datetime("2016-04-32 00:00:00").has_value());
  CHECK_FALSE(parse_datetime("2016-04-11 24:00:00").has_value());
  CHECK_FALSE(parse_datetime("2016-04-11 13:61:00").has_value());
  CHECK_FALSE(parse_datetime("2016-04-11 13:30:05.5").has_value());
  CHECK_FALSE(parse_datetime("2016-04-11 13:30:05 x").has_value());
  CHECK_FALSE(parse_datetime("not a date").has_value());
}

// ---------------------------------------------------------------------------
// Port categories
// ---------------------------------------------------------------------------

TEST_CASE("ports: exhaustive binning properties over all 65536 ports") {
  int prev = -1;
  std::vector<bool> hit(kPortCategories, false);
  for (int port = 0; port <= 65535; ++port) {
    const int cat = port_to_category(port);
    REQUIRE(cat >= 0);
    REQUIRE(cat < kPortCategories);
    CHECK(cat >= prev);  // monotone in the port
    prev = cat;
    hit[cat] = true;
    if (port < 1024) CHECK(cat == port);
    int lo = -1, hi = -1;
    port_category_range(cat, &lo, &hi);
    CHECK(lo <= port);
    CHECK(port <= hi);
    if (cat < 1024) {
      CHECK(lo == hi);  // identity region
    } else {
      CHECK(hi - lo + 1 <= 100);
    }
  }
  // Every category is reachable (surjective).
  for (int c = 0; c < kPortCategories; ++c) CHECK(hit[c]);
}

TEST_CASE("ports: pinned examples") {
  CHECK(port_to_category(0) == 0);
  CHECK(port_to_category(443) == 443);
  CHECK(port_to_category(1023) == 1023);
  CHECK(port_to_category(1024) == 1024);
  CHECK(port_to_category(1123) == 1024);
  CHECK(port_to_category(1124) == 1025);
  CHECK(port_to_category(19925) == 1213);
  CHECK(port_to_category(65535) == kPortCategories - 1);
  int lo = 0, hi = 0;
  port_category_range(kPortCategories - 1, &lo, &hi);
  CHECK(lo == 65524);
  CHECK(hi == 65535);  // final bin truncated at the port maximum
  port_category_range(80, &lo, &hi);
  CHECK(lo == 80);
  CHECK(hi == 80);
}

// ---------------------------------------------------------------------------
// CSV reader/writer
// ---------------------------------------------------------------------------

namespace {

FlowRecord make_flow(double te, const char* sa, const char* da, uint16_t sp,
                     uint16_t dp, Protocol pr, const char* flg, uint64_t pkt,
                     uint64_t byt, double td = 0.5) {
  FlowRecord f;
  f.te = te;
  f.td = td;
  f.sa = *parse_ipv4(sa);
  f.da = *parse_ipv4(da);
  f.sp = sp;
  f.dp = dp;
  f.pr = pr;
  f.flg = pr == Protocol::kTcp ? *TcpFlags::parse(flg) : TcpFlags{0};
  f.pkt = pkt;
  f.byt = byt;
  return f;
}

}  // namespace

TEST_CASE("csv: write/read round trip in both timestamp formats") {
  std::vector<FlowRecord> flows = {
      make_flow(1460381405, "10.0.0.1", "93.184.216.34", 51000, 443,
                Protocol::kTcp, ".AP.SF", 12, 4872),
      make_flow(1460381406, "10.0.0.2", "8.8.8.8", 53001, 53, Protocol::kUdp,
                "......", 1, 74),
      make_flow(1460381407.25, "10.0.0.3", "10.0.0.9", 0, 0, Protocol::kOther,
                "......", 2, 128),
  };
  for (auto fmt : {TimestampFormat::kEpochSeconds, TimestampFormat::kDateTime}) {
    std::ostringstream out;
    write_flow_csv(out, flows, fmt);
    std::istringstream in(out.str());
    CsvReadReport report;
    const auto back = read_flow_csv(in, {}, &report);
    CHECK(report.te_format == fmt);
    CHECK(report.parsed == flows.size());
    CHECK(report.skipped == 0);
    REQUIRE(back.size() == flows.size());
    for (size_t i = 0; i < flows.size(); ++i) {
      // Datetime output floors te to the second.
      const double expect_te = fmt == TimestampFormat::kDateTime
                                   ? std::floor(flows[i].te)
                                   : flows[i].te;
      CHECK(back[i].te == doctest::Approx(expect_te).epsilon(1e-9));
      CHECK(back[i].td == doctest::Approx(flows[i].td).epsilon(1e-9));
      CHECK(back[i].sa == flows[i].sa);
      CHECK(back[i].da == flows[i].da);
      CHECK(back[i].sp == flows[i].sp);
      CHECK(back[i].dp == flows[i].dp);
      CHECK(back[i].pr == flows[i].pr);
      CHECK(back[i].flg == flows[i].flg);
      CHECK(back[i].pkt == flows[i].pkt);
      CHECK(back[i].byt == flows[i].byt);
    }
  }
}

TEST_CASE("csv: extra columns are ignored and header order is free") {
  std::istringstream in(
      "byt,pkt,flg,pr,dp,sp,da,sa,td,te,fwd,stos\n"
      "4872,12,.AP.SF,TCP,443,51000,93.184.216.34,10.0.0.1,0.500,1.5,junk,0\n");
  const auto flows = read_flow_csv(in);
  REQUIRE(flows.size() == 1);
  CHECK(flows[0].byt == 4872);
  CHECK(flows[0].pr == Protocol::kTcp);
  CHECK(flows[0].te == 1.5);
  CHECK(flows[0].sp == 51000);
}

TEST_CASE("csv: rows come back sorted by end time, stably") {
  std::istringstream in(
      "te,td,sa,da,sp,dp,pr,flg,pkt,byt\n"
      "30,0.1,1.1.1.1,2.2.2.2,1,1,UDP,......,1,100\n"
      "10,0.1,3.3.3.3,2.2.2.2,2,2,UDP,......,1,200\n"
      "30,0.1,4.4.4.4,2.2.2.2,3,3,UDP,......,1,300\n"
      "20,0.1,5.5.5.5,2.2.2.2,4,4,UDP,......,1,400\n");
  const auto flows = read_flow_csv(in);
  REQUIRE(flows.size() == 4);
  CHECK(flows[0].byt == 200);
  CHECK(flows[1].byt == 400);
  CHECK(flows[2].byt == 100);  // stable: first 30 keeps file order
  CHECK(flows[3].byt == 300);
}

TEST_CASE("csv: malformed rows throw with a line number, or are skipped") {
  const std::string text =
      "te,td,sa,da,sp,dp,pr,flg,pkt,byt\n"
      "1,0.1,1.1.1.1,2.2.2.2,1,1,UDP,......,1,100\n"
      "2,0.1,not-an-ip,2.2.2.2,1,1,UDP,......,1,100\n"
      "3,0.1,1.1.1.1,2.2.2.2,1,1,UDP,......,1,100\n";
  {
    std::istringstream in(text);
    CHECK_THROWS_AS(read_flow_csv(in), IoError);
  }
  {
    std::istringstream in(text);
    bool mentions_line = false;
    try {
      read_flow_csv(in);
    } catch (const IoError& e) {
      mentions_line = std::string(e.what()).find("3") != std::string::npos;
    }
    CHECK(mentions_line);  // bad row is on line 3 of the file
  }
  {
    std::istringstream in(text);
    CsvReadReport report;
    CsvReadOptions opt;
    opt.skip_bad_rows = true;
    const auto flows = read_flow_csv(in, opt, &report);
    CHECK(flows.size() == 2);
    CHECK(report.parsed == 2);
    CHECK(report.skipped == 1);
    CHECK(report.errors.size() == 1);
  }
}

TEST_CASE("csv: missing required column and empty input fail loudly") {
  {
    std::istringstream in("te,td,sa,da,sp,dp,pr,flg,pkt\n");  // no byt
    CHECK_THROWS_AS(read_flow_csv(in), IoError);
  }
  {
    std::istringstream in("");
    CHECK_THROWS_AS(read_flow_csv(in), IoError);
  }
}

TEST_CASE("csv: max_rows stops early") {
  std::istringstream in(
      "te,td,sa,da,sp,dp,pr,flg,pkt,byt\n"
      "1,0.1,1.1.1.1,2.2.2.2,1,1,UDP,......,1,100\n"
      "2,0.1,1.1.1.1,2.2.2.2,1,1,UDP,......,1,100\n"
      "3,0.1,1.1.1.1,2.2.2.2,1,1,UDP,......,1,100\n");
  CsvReadOptions opt;
  opt.max_rows = 2;
  const auto flows = read_flow_csv(in, opt);
  CHECK(flows.size() == 2);
}

TEST_CASE("csv: datetime timestamps are auto-detected") {
  std::istringstream in(
      "te,td,sa,da,sp,dp,pr,flg,pkt,byt\n"
      "2016-04-11 13:30:05,0.1,1.1.1.1,2.2.2.2,1,1,UDP,......,1,100\n");
  CsvReadReport report;
  const auto flows = read_flow_csv(in, {}, &report);
  REQUIRE(flows.size() == 1);
  CHECK(report.te_format == TimestampFormat::kDateTime);
  CHECK(flows[0].te == 1460381405.0);
}

TEST_CASE("csv: bundled sample corpus loads cleanly") {
  CsvReadReport report;
  const auto flows =
      read_flow_csv(std::string(STAN_DATA_DIR) + "/sample_flows.csv", {},
                    &report);
  CHECK(flows.size() > 10000);
  CHECK(report.skipped == 0);
  CHECK(report.te_format == TimestampFormat::kDateTime);
  for (size_t i = 1; i < flows.size(); ++i)
    CHECK(flows[i].te >= flows[i - 1].te);
}
