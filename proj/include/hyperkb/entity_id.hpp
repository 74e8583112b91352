#pragma once

#include <compare>
#include <cstddef>
#include <functional>
#include <ostream>
#include <string>
#include <string_view>

namespace hyperkb {

/// Identifier of any entity in a knowledge base, written `namespace:local`.
///
/// The namespace may be empty, in which case the text form is just the local
/// part and the local part may not contain ':'. The text is split at the first
/// ':' so that `parse(to_string(id)) == id` always holds.
class EntityId {
 public:
  EntityId() = default;
  EntityId(std::string_view ns, std::string_view local);

  /// Throws InvariantError on empty local part or malformed text.
  static EntityId parse(std::string_view text);

  std::string_view ns() const { return sep_ == std::string::npos ? std::string_view{} : std::string_view(text_).substr(0, sep_); }
  std::string_view local() const {
    return sep_ == std::string::npos ? std::string_view(text_) : std::string_view(text_).substr(sep_ + 1);
  }
  const std::string& str() const { return text_; }
  bool empty() const { return text_.empty(); }

  friend bool operator==(const EntityId& a, const EntityId& b) { return a.text_ == b.text_; }
  friend std::strong_ordering operator<=>(const EntityId& a, const EntityId& b) { return a.text_ <=> b.text_; }

 private:
  std::string text_;
  std::size_t sep_ = std::string::npos;
};

inline std::ostream& operator<<(std::ostream& os, const EntityId& id) { return os << id.str(); }

/// Reserved ids created by every knowledge base.
namespace builtin {
inline constexpr std::string_view kNamespace = "hk";
inline constexpr std::string_view kLambda = "lambda";
const EntityId& default_context();
const EntityId& instance_of();
const EntityId& sub_class_of();
/// Property marking a node as a concept (value "concept").
inline constexpr std::string_view kKindProperty = "hk:kind";
inline constexpr std::string_view kConceptKind = "concept";
}  // namespace builtin

}  // namespace hyperkb

template <>
struct std::hash<hyperkb::EntityId> {
  std::size_t operator()(const hyperkb::EntityId& id) const noexcept { return std::hash<std::string>{}(id.str()); }
};
