#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "sal/util.hpp"

namespace sal {

// One named attribute group.  A group is either a single binary attribute
// (one 0/1 slot) or a mutually exclusive multi-valued attribute stored
// one-hot across `value_names.size()` slots.
struct AttributeGroup {
  std::string name;
  std::vector<std::string> value_names;  // empty => binary group

  bool is_exclusive() const { return !value_names.empty(); }
  int width() const { return is_exclusive() ? static_cast<int>(value_names.size()) : 1; }

  bool operator==(const AttributeGroup&) const = default;
};

// Ordered list of attribute groups plus the flat slot layout they induce.
class AttributeSchema {
 public:
  AttributeSchema() = default;

  explicit AttributeSchema(std::vector<AttributeGroup> groups) : groups_(std::move(groups)) {
    std::unordered_set<std::string> seen;
    for (const auto& g : groups_) {
      require(!g.name.empty(), "attribute group with empty name");
      require(seen.insert(g.name).second, "duplicate attribute group name '", g.name, "'");
      if (g.is_exclusive()) {
        require(g.value_names.size() >= 2, "exclusive group '", g.name,
                "' needs at least 2 values");
        std::unordered_set<std::string> vals;
        for (const auto& v : g.value_names) {
          require(!v.empty(), "empty value name in group '", g.name, "'");
          require(vals.insert(v).second, "duplicate value '", v, "' in group '", g.name, "'");
        }
      }
      offsets_.push_back(total_dim_);
      total_dim_ += g.width();
    }
    require(total_dim_ > 0, "attribute schema has no groups");
  }

  // Grammar: schema := group ('|' group)*
  //          group  := name                      (binary)
  //                  | name ':' value (',' value)+  (exclusive, one-hot)
  // Names must not contain '|', ':' or ','.
  static AttributeSchema parse(std::string_view text) {
    std::vector<AttributeGroup> groups;
    for (const auto& part : split(text, '|')) {
      std::string_view p = trim(part);
      require(!p.empty(), "empty attribute group in schema text");
      AttributeGroup g;
      std::size_t colon = p.find(':');
      if (colon == std::string_view::npos) {
        g.name = std::string(p);
      } else {
        g.name = std::string(trim(p.substr(0, colon)));
        for (const auto& v : split(p.substr(colon + 1), ','))
          g.value_names.emplace_back(trim(v));
        require(g.value_names.size() >= 2, "exclusive group '", g.name,
                "' needs at least 2 values");
      }
      require(g.name.find(',') == std::string::npos, "invalid ',' in group name '", g.name, "'");
      groups.push_back(std::move(g));
    }
    return AttributeSchema(std::move(groups));
  }

  std::string format() const {
    std::string out;
    for (std::size_t i = 0; i < groups_.size(); ++i) {
      if (i) out += '|';
      out += groups_[i].name;
      for (std::size_t v = 0; v < groups_[i].value_names.size(); ++v) {
        out += (v == 0 ? ':' : ',');
        out += groups_[i].value_names[v];
      }
    }
    return out;
  }

  const std::vector<AttributeGroup>& groups() const { return groups_; }
  std::size_t num_groups() const { return groups_.size(); }
  int total_dim() const { return total_dim_; }
  int group_offset(std::size_t g) const { return offsets_.at(g); }

  // Number of distinct attribute combinations the schema admits, saturating
  // at `cap` to avoid overflow for wide schemas.
  std::uint64_t combination_capacity(
      std::uint64_t cap = std::numeric_limits<std::uint64_t>::max()) const {
    std::uint64_t n = 1;
    for (const auto& g : groups_) {
      const std::uint64_t card = g.is_exclusive() ? g.value_names.size() : 2;
      if (n > cap / card) return cap;
      n *= card;
    }
    return n < cap ? n : cap;
  }

  bool operator==(const AttributeSchema&) const = default;

 private:
  std::vector<AttributeGroup> groups_;
  std::vector<int> offsets_;
  int total_dim_ = 0;
};

// Flat 0/1 slot vector laid out per the schema.
struct AttributeVector {
  std::vector<std::uint8_t> values;

  bool operator==(const AttributeVector&) const = default;
};

// Validates length, binary-ness, and one-hot exclusivity.  `context` prefixes
// error messages (e.g. "row 7 of train.manifest").
inline void validate_attributes(const AttributeSchema& schema, const AttributeVector& a,
                                const std::string& context = {}) {
  const std::string where = context.empty() ? std::string() : context + ": ";
  require(static_cast<int>(a.values.size()) == schema.total_dim(), where,
          "attribute vector has ", a.values.size(), " slots, schema expects ",
          schema.total_dim());
  for (std::size_t i = 0; i < a.values.size(); ++i)
    require(a.values[i] <= 1, where, "non-binary attribute value at slot ", i);
  for (std::size_t g = 0; g < schema.num_groups(); ++g) {
    const auto& grp = schema.groups()[g];
    if (!grp.is_exclusive()) continue;
    int active = 0;
    for (int k = 0; k < grp.width(); ++k) active += a.values[schema.group_offset(g) + k];
    require(active == 1, where, "exclusivity violated in group '", grp.name, "' (", active,
            " active values, expected exactly 1)");
  }
}

}  // namespace sal
