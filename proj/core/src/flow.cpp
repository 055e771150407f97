#include "stan/flow.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace stan {

std::string protocol_name(Protocol p) {
  switch (p) {
    case Protocol::kTcp: return "TCP";
    case Protocol::kUdp: return "UDP";
    case Protocol::kOther: return "OTHER";
  }
  throw Error("bad protocol value");
}

Protocol protocol_from_name(std::string_view s) {
  std::string up;
  up.reserve(s.size());
  for (char c : s) up.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  if (up == "TCP") return Protocol::kTcp;
  if (up == "UDP") return Protocol::kUdp;
  return Protocol::kOther;
}

namespace {
constexpr char kFlagLetters[6] = {'U', 'A', 'P', 'R', 'S', 'F'};
}

TcpFlags TcpFlags::from_index(int idx) {
  if (idx < 0 || idx > 63) throw Error("flag index out of range");
  return TcpFlags{static_cast<uint8_t>(idx)};
}

std::string TcpFlags::str() const {
  std::string s(6, '.');
  for (int i = 0; i < 6; ++i)
    if (bits & (1 << (5 - i))) s[i] = kFlagLetters[i];
  return s;
}

std::optional<TcpFlags> TcpFlags::parse(std::string_view s) {
  if (s.size() != 6) return std::nullopt;
  uint8_t bits = 0;
  for (int i = 0; i < 6; ++i) {
    if (s[i] == kFlagLetters[i])
      bits |= static_cast<uint8_t>(1 << (5 - i));
    else if (s[i] != '.')
      return std::nullopt;
  }
  return TcpFlags{bits};
}

std::optional<Ipv4> parse_ipv4(std::string_view s) {
  Ipv4 out{};
  int part = 0;
  size_t pos = 0;
  for (int i = 0; i < 4; ++i) {
    if (pos >= s.size()) return std::nullopt;
    int value = 0;
    size_t digits = 0;
    while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') {
      value = value * 10 + (s[pos] - '0');
      if (value > 255) return std::nullopt;
      ++pos;
      ++digits;
    }
    if (digits == 0 || digits > 3) return std::nullopt;
    out[part++] = static_cast<uint8_t>(value);
    if (i < 3) {
      if (pos >= s.size() || s[pos] != '.') return std::nullopt;
      ++pos;
    }
  }
  if (pos != s.size()) return std::nullopt;
  return out;
}

std::string ipv4_str(const Ipv4& ip) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%u.%u.%u.%u", ip[0], ip[1], ip[2], ip[3]);
  return buf;
}

Ipv4 ipv4_from_key(uint32_t key) {
  return {static_cast<uint8_t>(key >> 24), static_cast<uint8_t>(key >> 16),
          static_cast<uint8_t>(key >> 8), static_cast<uint8_t>(key)};
}

// ---------------------------------------------------------------------------
// Timestamps
// ---------------------------------------------------------------------------
namespace {

// Days since 1970-01-01 for a civil date (Gregorian, proleptic).
long days_from_civil(int y, int m, int d) {
  y -= m <= 2;
  const long era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153u * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<long>(doe) - 719468;
}

void civil_from_days(long z, int* y, int* m, int* d) {
  z += 719468;
  const long era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const long yy = static_cast<long>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  *d = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
  *m = static_cast<int>(mp + (mp < 10 ? 3 : -9));
  *y = static_cast<int>(yy + (*m <= 2));
}

}  // namespace

std::optional<double> parse_datetime(std::string_view s) {
  int y, mo, d, h, mi, sec;
  char extra;
  std::string tmp(s);
  if (std::sscanf(tmp.c_str(), "%d-%d-%d %d:%d:%d%c", &y, &mo, &d, &h, &mi,
                  &sec, &extra) != 6)
    return std::nullopt;
  if (mo < 1 || mo > 12 || d < 1 || d > 31 || h < 0 || h > 23 || mi < 0 ||
      mi > 59 || sec < 0 || sec > 60)
    return std::nullopt;
  return static_cast<double>(days_from_civil(y, mo, d)) * 86400.0 +
         h * 3600.0 + mi * 60.0 + sec;
}

std::string format_datetime(double epoch_seconds) {
  const long long t = static_cast<long long>(std::floor(epoch_seconds));
  long days = static_cast<long>(t / 86400);
  long rem = static_cast<long>(t % 86400);
  if (rem < 0) {
    rem += 86400;
    --days;
  }
  int y, m, d;
  civil_from_days(days, &y, &m, &d);
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02d %02ld:%02ld:%02ld", y, m, d,
                rem / 3600, (rem / 60) % 60, rem % 60);
  return buf;
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------
namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

std::string trim(const std::string& s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

bool parse_u64(const std::string& s, uint64_t* out) {
  const std::string t = trim(s);
  if (t.empty()) return false;
  auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), *out);
  return ec == std::errc() && p == t.data() + t.size();
}

bool parse_double(const std::string& s, double* out) {
  const std::string t = trim(s);
  if (t.empty()) return false;
  char* end = nullptr;
  *out = std::strtod(t.c_str(), &end);
  return end == t.c_str() + t.size() && std::isfinite(*out);
}

struct Columns {
  int te, td, sa, da, sp, dp, pr, flg, pkt, byt;
};

Columns resolve_columns(const std::vector<std::string>& header) {
  auto find = [&](const char* name) {
    for (size_t i = 0; i < header.size(); ++i)
      if (trim(header[i]) == name) return static_cast<int>(i);
    throw IoError(std::string("CSV header is missing required column '") +
                  name + "'");
  };
  return Columns{find("te"), find("td"), find("sa"), find("da"),
                 find("sp"), find("dp"), find("pr"), find("flg"),
                 find("pkt"), find("byt")};
}

}  // namespace

std::vector<FlowRecord> read_flow_csv(std::istream& in,
                                      const CsvReadOptions& options,
                                      CsvReadReport* report) {
  std::string line;
  if (!std::getline(in, line)) throw IoError("CSV input is empty");
  const auto header = split_csv_line(line);
  const Columns cols = resolve_columns(header);
  const size_t ncols = header.size();

  std::vector<FlowRecord> flows;
  CsvReadReport local;
  CsvReadReport& rep = report ? *report : local;
  rep = CsvReadReport{};
  bool format_known = false;

  size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    if (options.max_rows > 0 && flows.size() >= options.max_rows) break;

    std::string err;
    FlowRecord r;
    const auto fields = split_csv_line(line);
    auto fail = [&](const std::string& what) {
      err = "line " + std::to_string(line_no) + ": " + what;
    };

    if (fields.size() != ncols) {
      fail("expected " + std::to_string(ncols) + " fields, got " +
           std::to_string(fields.size()));
    } else {
      const std::string te_field = trim(fields[cols.te]);
      if (!format_known) {
        rep.te_format = te_field.find('-') != std::string::npos
                            ? TimestampFormat::kDateTime
                            : TimestampFormat::kEpochSeconds;
        format_known = true;
      }
      if (rep.te_format == TimestampFormat::kDateTime) {
        auto t = parse_datetime(te_field);
        if (!t) fail("bad te datetime '" + te_field + "'");
        else r.te = *t;
      } else if (double v; parse_double(te_field, &v)) {
        r.te = v;
      } else {
        fail("bad te value '" + te_field + "'");
      }

      double td;
      uint64_t sp, dp, pkt, byt;
      std::optional<Ipv4> sa, da;
      std::optional<TcpFlags> flg;
      if (err.empty()) {
        if (!parse_double(fields[cols.td], &td) || td < 0)
          fail("bad td '" + trim(fields[cols.td]) + "'");
        else if (!(sa = parse_ipv4(trim(fields[cols.sa]))).has_value())
          fail("bad sa '" + trim(fields[cols.sa]) + "'");
        else if (!(da = parse_ipv4(trim(fields[cols.da]))).has_value())
          fail("bad da '" + trim(fields[cols.da]) + "'");
        else if (!parse_u64(fields[cols.sp], &sp) || sp > 65535)
          fail("bad sp '" + trim(fields[cols.sp]) + "'");
        else if (!parse_u64(fields[cols.dp], &dp) || dp > 65535)
          fail("bad dp '" + trim(fields[cols.dp]) + "'");
        else if (!(flg = TcpFlags::parse(trim(fields[cols.flg]))).has_value())
          fail("bad flg '" + trim(fields[cols.flg]) + "'");
        else if (!parse_u64(fields[cols.pkt], &pkt) || pkt == 0)
          fail("bad pkt '" + trim(fields[cols.pkt]) + "'");
        else if (!parse_u64(fields[cols.byt], &byt) || byt == 0)
          fail("bad byt '" + trim(fields[cols.byt]) + "'");
        else {
          r.td = td;
          r.sa = *sa;
          r.da = *da;
          r.sp = static_cast<uint16_t>(sp);
          r.dp = static_cast<uint16_t>(dp);
          r.pr = protocol_from_name(trim(fields[cols.pr]));
          r.flg = *flg;
          r.pkt = pkt;
          r.byt = byt;
        }
      }
    }

    if (!err.empty()) {
      if (!options.skip_bad_rows) throw IoError(err);
      ++rep.skipped;
      if (rep.errors.size() < 10) rep.errors.push_back(err);
      continue;
    }
    flows.push_back(r);
  }
  rep.parsed = flows.size();
  std::stable_sort(flows.begin(), flows.end(),
                   [](const FlowRecord& a, const FlowRecord& b) {
                     return a.te < b.te;
                   });
  return flows;
}

std::vector<FlowRecord> read_flow_csv(const std::string& path,
                                      const CsvReadOptions& options,
                                      CsvReadReport* report) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  return read_flow_csv(in, options, report);
}

namespace {
std::string format_compact(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  std::string s = buf;
  // Strip trailing zeros and a trailing dot.
  const size_t dot = s.find('.');
  if (dot != std::string::npos) {
    size_t e = s.size();
    while (e > dot + 1 && s[e - 1] == '0') --e;
    if (e == dot + 1) --e;
    s.resize(e);
  }
  return s;
}
}  // namespace

void write_flow_csv(std::ostream& out, const std::vector<FlowRecord>& flows,
                    TimestampFormat te_format) {
  out << "te,td,sa,da,sp,dp,pr,flg,pkt,byt\n";
  for (const auto& r : flows) {
    if (te_format == TimestampFormat::kDateTime)
      out << format_datetime(r.te);
    else
      out << format_compact(r.te);
    out << ',' << format_compact(r.td) << ',' << ipv4_str(r.sa) << ','
        << ipv4_str(r.da) << ',' << r.sp << ',' << r.dp << ','
        << protocol_name(r.pr) << ',' << r.flg.str() << ',' << r.pkt << ','
        << r.byt << '\n';
  }
}

void write_flow_csv(const std::string& path,
                    const std::vector<FlowRecord>& flows,
                    TimestampFormat te_format) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  write_flow_csv(out, flows, te_format);
}

}  // namespace stan
