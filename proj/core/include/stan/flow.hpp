#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "stan/error.hpp"

namespace stan {

enum class Protocol : uint8_t { kTcp = 0, kUdp = 1, kOther = 2 };

std::string protocol_name(Protocol p);
// TCP and UDP (case-insensitive) map to themselves; everything else is OTHER.
Protocol protocol_from_name(std::string_view s);

// TCP flag set stored as a 6-bit mask: URG=32, ACK=16, PSH=8, RST=4, SYN=2,
// FIN=1.  The string form is the fixed-width "UAPRSF" layout with '.' for
// unset bits, e.g. ".A..SF".
struct TcpFlags {
  uint8_t bits = 0;

  bool any() const { return bits != 0; }
  int index() const { return bits; }
  static TcpFlags from_index(int idx);

  std::string str() const;
  static std::optional<TcpFlags> parse(std::string_view s);

  bool operator==(const TcpFlags&) const = default;
};

using Ipv4 = std::array<uint8_t, 4>;

std::optional<Ipv4> parse_ipv4(std::string_view s);
std::string ipv4_str(const Ipv4& ip);
inline uint32_t ipv4_key(const Ipv4& ip) {
  return (uint32_t(ip[0]) << 24) | (uint32_t(ip[1]) << 16) |
         (uint32_t(ip[2]) << 8) | uint32_t(ip[3]);
}
Ipv4 ipv4_from_key(uint32_t key);

struct FlowRecord {
  double te = 0;  // end time, seconds since the Unix epoch (UTC)
  double td = 0;  // duration, seconds
  Ipv4 sa{}, da{};
  uint16_t sp = 0, dp = 0;
  Protocol pr = Protocol::kOther;
  TcpFlags flg;
  uint64_t pkt = 1, byt = 1;
};

enum class TimestampFormat { kEpochSeconds, kDateTime };

// "YYYY-MM-DD hh:mm:ss" in UTC <-> epoch seconds.
std::optional<double> parse_datetime(std::string_view s);
std::string format_datetime(double epoch_seconds);

struct CsvReadOptions {
  // Skip malformed rows (counting them) instead of aborting on the first one.
  bool skip_bad_rows = false;
  // Stop after this many parsed rows; 0 = no limit.
  size_t max_rows = 0;
};

struct CsvReadReport {
  size_t parsed = 0;
  size_t skipped = 0;
  TimestampFormat te_format = TimestampFormat::kEpochSeconds;
  std::vector<std::string> errors;  // first few row errors, with line numbers
};

// Reads flow records from CSV.  The header must name the ten canonical
// columns te,td,sa,da,sp,dp,pr,flg,pkt,byt (any order); extra columns are
// ignored.  The te column may hold either "YYYY-MM-DD hh:mm:ss" datetimes or
// numeric epoch seconds (auto-detected from the first data row).  Rows are
// returned sorted by te (stable).  Malformed rows throw IoError with the line
// number, or are skipped when options.skip_bad_rows is set.
std::vector<FlowRecord> read_flow_csv(std::istream& in,
                                      const CsvReadOptions& options = {},
                                      CsvReadReport* report = nullptr);
std::vector<FlowRecord> read_flow_csv(const std::string& path,
                                      const CsvReadOptions& options = {},
                                      CsvReadReport* report = nullptr);

void write_flow_csv(std::ostream& out, const std::vector<FlowRecord>& flows,
                    TimestampFormat te_format = TimestampFormat::kDateTime);
void write_flow_csv(const std::string& path,
                    const std::vector<FlowRecord>& flows,
                    TimestampFormat te_format = TimestampFormat::kDateTime);

}  // namespace stan
