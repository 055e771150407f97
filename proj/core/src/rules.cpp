#include "stan/rules.hpp"

namespace stan {

namespace {
uint64_t min_packet_bytes(Protocol pr) {
  switch (pr) {
    case Protocol::kTcp: return 40;
    case Protocol::kUdp: return 28;
    case Protocol::kOther: return 1;
  }
  return 1;
}

bool is_web_port(uint16_t p) { return p == 80 || p == 443; }
}  // namespace

bool rule1_applies(const FlowRecord&) { return true; }
bool rule2_applies(const FlowRecord&) { return true; }
bool rule3_applies(const FlowRecord& f) { return f.pr != Protocol::kOther; }
bool rule4_applies(const FlowRecord& f) { return f.pr != Protocol::kTcp; }
bool rule5_applies(const FlowRecord& f) {
  return is_web_port(f.sp) || is_web_port(f.dp);
}

bool rule1_passes(const FlowRecord& f) {
  const bool sa_multicast = f.sa[0] >= 224 && f.sa[0] <= 239;
  const bool sa_reserved = f.sa[0] == 255;
  const bool da_zero_net = f.da[0] == 0;
  return !sa_multicast && !sa_reserved && !da_zero_net;
}

bool rule2_passes(const FlowRecord& f) {
  return f.pkt >= 1 && f.byt >= min_packet_bytes(f.pr);
}

bool rule3_passes(const FlowRecord& f) {
  const uint64_t per_packet_min = min_packet_bytes(f.pr);
  return f.byt >= per_packet_min * f.pkt && f.byt <= 65535 * f.pkt;
}

bool rule4_passes(const FlowRecord& f) { return !f.flg.any(); }

bool rule5_passes(const FlowRecord& f) { return f.pr == Protocol::kTcp; }

nlohmann::json RuleReport::to_json() const {
  nlohmann::json arr = nlohmann::json::array();
  for (size_t t = 0; t < tests.size(); ++t)
    arr.push_back({{"test", t + 1},
                   {"evaluated", tests[t].evaluated},
                   {"passed", tests[t].passed},
                   {"pass_rate", tests[t].pass_rate()}});
  return {{"tests", arr},
          {"records", records},
          {"records_all_pass", records_all_pass},
          {"all_pass_rate", all_pass_rate()}};
}

RuleReport check_rules(const std::vector<FlowRecord>& flows,
                       const RuleOptions& options) {
  using Applies = bool (*)(const FlowRecord&);
  using Passes = bool (*)(const FlowRecord&);
  static constexpr Applies applies[5] = {rule1_applies, rule2_applies,
                                         rule3_applies, rule4_applies,
                                         rule5_applies};
  static constexpr Passes passes[5] = {rule1_passes, rule2_passes,
                                       rule3_passes, rule4_passes,
                                       rule5_passes};
  RuleReport report;
  report.records = flows.size();
  if (options.annotate) report.first_failure.reserve(flows.size());
  for (const FlowRecord& f : flows) {
    int8_t first = 0;
    for (int t = 0; t < 5; ++t) {
      if (!applies[t](f)) continue;
      ++report.tests[t].evaluated;
      if (passes[t](f))
        ++report.tests[t].passed;
      else if (first == 0)
        first = static_cast<int8_t>(t + 1);
    }
    if (first == 0) ++report.records_all_pass;
    if (options.annotate) report.first_failure.push_back(first);
  }
  return report;
}

}  // namespace stan
