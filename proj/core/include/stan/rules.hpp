#pragma once

#include <array>
#include <vector>

#include <nlohmann/json.hpp>

#include "stan/flow.hpp"

namespace stan {

// Protocol-level validity tests.  Each test has an applicability predicate and
// a pass predicate; pass rates are reported over applicable records only.
//
//  1. Address sanity (all records): the source is not a multicast address
//     (224.0.0.0 - 239.255.255.255) or in the reserved 255.0.0.0/8 block,
//     and the destination does not lie in 0.0.0.0/8.
//  2. Minimum size (all records): pkt >= 1 and byt at least one minimum-size
//     packet: 40 bytes for TCP, 28 for UDP, 1 otherwise.
//  3. Bytes-per-packet bounds (TCP/UDP records): 40*pkt <= byt <= 65535*pkt
//     for TCP and 28*pkt <= byt <= 65535*pkt for UDP.
//  4. Flag consistency (non-TCP records): no TCP flags set.
//  5. Web ports (records with port 80 or 443 on either side): protocol is TCP.

bool rule1_applies(const FlowRecord& f);
bool rule2_applies(const FlowRecord& f);
bool rule3_applies(const FlowRecord& f);
bool rule4_applies(const FlowRecord& f);
bool rule5_applies(const FlowRecord& f);

bool rule1_passes(const FlowRecord& f);
bool rule2_passes(const FlowRecord& f);
bool rule3_passes(const FlowRecord& f);
bool rule4_passes(const FlowRecord& f);
bool rule5_passes(const FlowRecord& f);

struct RuleStats {
  uint64_t evaluated = 0;
  uint64_t passed = 0;
  // Pass fraction over evaluated records; 1 when no record was applicable.
  double pass_rate() const {
    return evaluated == 0
               ? 1.0
               : static_cast<double>(passed) / static_cast<double>(evaluated);
  }
};

struct RuleOptions {
  bool annotate = false;  // also record each record's first failing test
};

struct RuleReport {
  std::array<RuleStats, 5> tests;
  uint64_t records = 0;
  uint64_t records_all_pass = 0;
  // Per record when annotate was set: 0 = all applicable tests passed,
  // otherwise the 1-based number of the first failing test.
  std::vector<int8_t> first_failure;

  double all_pass_rate() const {
    return records == 0 ? 1.0
                        : static_cast<double>(records_all_pass) /
                              static_cast<double>(records);
  }
  nlohmann::json to_json() const;
};

RuleReport check_rules(const std::vector<FlowRecord>& flows,
                       const RuleOptions& options = {});

}  // namespace stan
