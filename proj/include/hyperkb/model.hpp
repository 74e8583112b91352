#pragma once

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "hyperkb/entity_id.hpp"
#include "hyperkb/literal.hpp"

namespace hyperkb {

using PropertyMap = std::map<std::string, Literal, std::less<>>;

/// Named fragment of a node's resource. `descriptor` is opaque.
struct Anchor {
  std::string name;
  std::optional<std::string> descriptor;

  friend bool operator==(const Anchor&, const Anchor&) = default;
};

struct Node {
  EntityId id;
  /// Keyed by anchor name; always holds `lambda`.
  std::map<std::string, Anchor, std::less<>> anchors;
  PropertyMap properties;
  EntityId context;

  Node() = default;
  explicit Node(EntityId node_id, EntityId ctx = builtin::default_context());

  bool has_anchor(std::string_view name) const { return anchors.find(name) != anchors.end(); }
  void add_anchor(Anchor anchor);
  /// Overwrites an existing value.
  void set_property(std::string name, Literal value) { properties.insert_or_assign(std::move(name), std::move(value)); }
  const Literal* property(std::string_view name) const;

  friend bool operator==(const Node&, const Node&) = default;
};

struct Connector {
  EntityId id;
  std::string name;
  /// Ordered; at least two, unique.
  std::vector<std::string> roles;
  EntityId context;
  /// Metadata such as domain/range declarations.
  PropertyMap properties;

  bool has_role(std::string_view role) const;

  friend bool operator==(const Connector&, const Connector&) = default;
};

/// Binary connectors use these role names.
inline constexpr std::string_view kSubjectRole = "subject";
inline constexpr std::string_view kObjectRole = "object";

struct Binding {
  EntityId node;
  std::string anchor = std::string(builtin::kLambda);

  friend bool operator==(const Binding&, const Binding&) = default;
};

struct Link {
  EntityId id;
  EntityId connector;
  std::map<std::string, Binding, std::less<>> bindings;
  PropertyMap properties;
  EntityId context;

  const Binding* binding(std::string_view role) const;

  friend bool operator==(const Link&, const Link&) = default;
};

struct Context {
  EntityId id;
  std::string name;
  std::optional<EntityId> parent;
  std::set<EntityId> members;

  friend bool operator==(const Context&, const Context&) = default;
};

/// Throws InvariantError when roles are fewer than two, empty or repeated.
void check_roles(const std::vector<std::string>& roles);

// ---------------------------------------------------------------------------
// Link validation

enum class ViolationKind { missing_role, extra_role, unknown_anchor, dangling_node };

std::string_view to_string(ViolationKind kind);

struct Violation {
  ViolationKind kind;
  std::string role;
  std::string detail;

  std::string message() const;
};

using NodeLookup = std::function<const Node*(const EntityId&)>;

/// Empty result means the link is valid against `connector`.
std::vector<Violation> validate_link(const Link& link, const Connector& connector, const NodeLookup& resolve);

/// Thrown when a link fails validation on insertion.
class LinkValidationError : public InvariantError {
 public:
  LinkValidationError(const EntityId& link, std::vector<Violation> violations);
  const std::vector<Violation>& violations() const { return violations_; }

 private:
  std::vector<Violation> violations_;
};

}  // namespace hyperkb
