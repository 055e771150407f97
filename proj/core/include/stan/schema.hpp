#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "stan/error.hpp"

namespace stan {

// Attribute kinds.
//  - kContinuous: real-valued, min-max scaled, mixture-density head.
//  - kCategorical: small closed set, one-hot context, softmax head.
//  - kIp: IPv4 address; expands to four 256-way categorical octets.
//  - kPort: TCP/UDP port; 1670-way categorical (0..1023 individually, then
//    100-wide bins up to 65535).
//  - kTimeDelta: absolute timestamp modeled as the delta to the previous row.
//  - kFlags: TCP flag set; single 64-way categorical over the flag bitmask.
enum class AttrKind { kContinuous, kCategorical, kIp, kPort, kTimeDelta, kFlags };

std::string attr_kind_name(AttrKind kind);
AttrKind attr_kind_from_name(const std::string& name);

struct Attribute {
  std::string name;
  AttrKind kind = AttrKind::kContinuous;
  std::vector<std::string> categories;  // kCategorical only
};

// Port category codec: ports below 1024 map to themselves; higher ports fall
// into 100-wide bins, giving 1024 + ceil((65536-1024)/100) = 1670 categories.
inline constexpr int kPortCategories = 1670;
int port_to_category(int port);
// Inclusive port range covered by a category (last bin is truncated at 65535).
void port_category_range(int category, int* lo, int* hi);

inline constexpr int kFlagCategories = 64;

// One modeled column after expansion.  Continuous attributes have
// cardinality 0 and use a mixture-density head; all others are categorical
// with a softmax head of size `cardinality`.
struct ExpandedAttribute {
  std::string name;     // e.g. "dt", "sa.2", "byt"
  AttrKind kind = AttrKind::kContinuous;
  int base = 0;         // index into AttributeSchema::attributes()
  int sub = 0;          // sub-column within the base attribute
  int cardinality = 0;  // 0 => continuous
  bool onehot = false;  // context encoding: one-hot (true) or scaled scalar
  int col = 0;          // first context-window column
  int width = 1;        // context-window columns used
  int order = 0;        // rank in the generation order
};

// Declares the attributes of a flow table, their expansion into modeled
// columns, the context-window encoding layout, and the order in which a
// generator samples the columns of a row.
class AttributeSchema {
 public:
  AttributeSchema() = default;

  // The canonical netflow schema:
  // te, td, sa, da, sp, dp, pr(TCP/UDP/OTHER), flg, pkt, byt.
  static AttributeSchema netflow();
  // All-continuous schema (e.g. simulated series with columns x, y).
  static AttributeSchema continuous(const std::vector<std::string>& names);

  static AttributeSchema from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;

  const std::vector<Attribute>& attributes() const { return attrs_; }
  const std::vector<ExpandedAttribute>& expanded() const { return expanded_; }
  int num_expanded() const { return static_cast<int>(expanded_.size()); }
  // Total context-window row width (sum of expanded widths).
  int width() const { return width_; }

  // Expanded indices in sampling order.
  const std::vector<int>& generation_order() const { return order_; }
  // Reorders sampling by base-attribute names (a permutation of all names).
  void set_generation_order(const std::vector<std::string>& base_names);

  int attribute_index(const std::string& name) const;     // -1 if missing
  int expanded_index(const std::string& name) const;      // -1 if missing
  bool is_netflow() const;

  bool operator==(const AttributeSchema& o) const {
    return to_json() == o.to_json();
  }

 private:
  void expand();

  std::vector<Attribute> attrs_;
  std::vector<ExpandedAttribute> expanded_;
  std::vector<int> order_;
  std::vector<std::string> order_names_;
  int width_ = 0;
};

}  // namespace stan
