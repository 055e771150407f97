#include "stan/schema.hpp"

#include <algorithm>

namespace stan {

std::string attr_kind_name(AttrKind kind) {
  switch (kind) {
    case AttrKind::kContinuous: return "continuous";
    case AttrKind::kCategorical: return "categorical";
    case AttrKind::kIp: return "ip";
    case AttrKind::kPort: return "port";
    case AttrKind::kTimeDelta: return "time_delta";
    case AttrKind::kFlags: return "flags";
  }
  throw Error("unknown attribute kind");
}

AttrKind attr_kind_from_name(const std::string& name) {
  if (name == "continuous") return AttrKind::kContinuous;
  if (name == "categorical") return AttrKind::kCategorical;
  if (name == "ip") return AttrKind::kIp;
  if (name == "port") return AttrKind::kPort;
  if (name == "time_delta") return AttrKind::kTimeDelta;
  if (name == "flags") return AttrKind::kFlags;
  throw ConfigError("unknown attribute kind '" + name + "'");
}

int port_to_category(int port) {
  if (port < 0 || port > 65535)
    throw Error("port " + std::to_string(port) + " out of range");
  if (port < 1024) return port;
  return 1024 + (port - 1024) / 100;
}

void port_category_range(int category, int* lo, int* hi) {
  if (category < 0 || category >= kPortCategories)
    throw Error("port category " + std::to_string(category) + " out of range");
  if (category < 1024) {
    *lo = *hi = category;
    return;
  }
  *lo = 1024 + (category - 1024) * 100;
  *hi = std::min(*lo + 99, 65535);
}

AttributeSchema AttributeSchema::netflow() {
  AttributeSchema s;
  s.attrs_ = {
      {"te", AttrKind::kTimeDelta, {}},
      {"td", AttrKind::kContinuous, {}},
      {"sa", AttrKind::kIp, {}},
      {"da", AttrKind::kIp, {}},
      {"sp", AttrKind::kPort, {}},
      {"dp", AttrKind::kPort, {}},
      {"pr", AttrKind::kCategorical, {"TCP", "UDP", "OTHER"}},
      {"flg", AttrKind::kFlags, {}},
      {"pkt", AttrKind::kContinuous, {}},
      {"byt", AttrKind::kContinuous, {}},
  };
  s.expand();
  return s;
}

AttributeSchema AttributeSchema::continuous(
    const std::vector<std::string>& names) {
  AttributeSchema s;
  for (const auto& n : names) s.attrs_.push_back({n, AttrKind::kContinuous, {}});
  s.expand();
  return s;
}

AttributeSchema AttributeSchema::from_json(const nlohmann::json& j) {
  AttributeSchema s;
  if (!j.contains("attributes") || !j["attributes"].is_array() ||
      j["attributes"].empty())
    throw ConfigError("schema: missing or empty 'attributes' array");
  for (const auto& e : j["attributes"]) {
    Attribute a;
    a.name = e.at("name").get<std::string>();
    a.kind = attr_kind_from_name(e.at("kind").get<std::string>());
    if (a.kind == AttrKind::kCategorical) {
      if (!e.contains("categories") || e["categories"].empty())
        throw ConfigError("schema: categorical attribute '" + a.name +
                          "' needs non-empty 'categories'");
      a.categories = e["categories"].get<std::vector<std::string>>();
    }
    for (const auto& prev : s.attrs_)
      if (prev.name == a.name)
        throw ConfigError("schema: duplicate attribute '" + a.name + "'");
    s.attrs_.push_back(std::move(a));
  }
  s.expand();
  if (j.contains("generation_order"))
    s.set_generation_order(
        j["generation_order"].get<std::vector<std::string>>());
  return s;
}

nlohmann::json AttributeSchema::to_json() const {
  nlohmann::json j;
  j["attributes"] = nlohmann::json::array();
  for (const auto& a : attrs_) {
    nlohmann::json e;
    e["name"] = a.name;
    e["kind"] = attr_kind_name(a.kind);
    if (a.kind == AttrKind::kCategorical) e["categories"] = a.categories;
    j["attributes"].push_back(e);
  }
  j["generation_order"] = order_names_;
  return j;
}

void AttributeSchema::expand() {
  expanded_.clear();
  int col = 0;
  for (size_t b = 0; b < attrs_.size(); ++b) {
    const Attribute& a = attrs_[b];
    auto push = [&](const std::string& name, int cardinality, bool onehot) {
      ExpandedAttribute e;
      e.name = name;
      e.kind = a.kind;
      e.base = static_cast<int>(b);
      e.sub = 0;
      e.cardinality = cardinality;
      e.onehot = onehot;
      e.col = col;
      e.width = onehot ? cardinality : 1;
      col += e.width;
      expanded_.push_back(e);
    };
    switch (a.kind) {
      case AttrKind::kTimeDelta:
        push("dt", 0, false);
        break;
      case AttrKind::kContinuous:
        push(a.name, 0, false);
        break;
      case AttrKind::kIp:
        for (int o = 0; o < 4; ++o) {
          push(a.name + "." + std::to_string(o), 256, false);
          expanded_.back().sub = o;
        }
        break;
      case AttrKind::kPort:
        push(a.name, kPortCategories, false);
        break;
      case AttrKind::kCategorical:
        push(a.name, static_cast<int>(a.categories.size()), true);
        break;
      case AttrKind::kFlags:
        push(a.name, kFlagCategories, true);
        break;
    }
  }
  width_ = col;
  // Default generation order: schema order.
  order_names_.clear();
  for (const auto& a : attrs_) order_names_.push_back(a.name);
  order_.resize(expanded_.size());
  for (size_t i = 0; i < expanded_.size(); ++i) {
    order_[i] = static_cast<int>(i);
    expanded_[i].order = static_cast<int>(i);
  }
}

void AttributeSchema::set_generation_order(
    const std::vector<std::string>& base_names) {
  if (base_names.size() != attrs_.size())
    throw ConfigError("generation order must list every attribute exactly once");
  std::vector<bool> seen(attrs_.size(), false);
  std::vector<int> base_order;
  for (const auto& n : base_names) {
    const int idx = attribute_index(n);
    if (idx < 0) throw ConfigError("generation order: unknown attribute '" + n + "'");
    if (seen[idx]) throw ConfigError("generation order: duplicate '" + n + "'");
    seen[idx] = true;
    base_order.push_back(idx);
  }
  order_.clear();
  for (int b : base_order)
    for (size_t i = 0; i < expanded_.size(); ++i)
      if (expanded_[i].base == b) order_.push_back(static_cast<int>(i));
  for (size_t r = 0; r < order_.size(); ++r)
    expanded_[order_[r]].order = static_cast<int>(r);
  order_names_ = base_names;
}

int AttributeSchema::attribute_index(const std::string& name) const {
  for (size_t i = 0; i < attrs_.size(); ++i)
    if (attrs_[i].name == name) return static_cast<int>(i);
  return -1;
}

int AttributeSchema::expanded_index(const std::string& name) const {
  for (size_t i = 0; i < expanded_.size(); ++i)
    if (expanded_[i].name == name) return static_cast<int>(i);
  return -1;
}

bool AttributeSchema::is_netflow() const {
  return *this == netflow() ||
         (attrs_.size() == 10 && to_json()["attributes"] ==
                                     netflow().to_json()["attributes"]);
}

}  // namespace stan
