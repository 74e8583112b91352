#include "hyperkb/model.hpp"

#include <algorithm>

namespace hyperkb {

Node::Node(EntityId node_id, EntityId ctx) : id(std::move(node_id)), context(std::move(ctx)) {
  anchors.emplace(std::string(builtin::kLambda), Anchor{std::string(builtin::kLambda), std::nullopt});
}

void Node::add_anchor(Anchor anchor) {
  if (anchor.name.empty()) throw InvariantError("anchor name must not be empty");
  auto name = anchor.name;
  anchors.insert_or_assign(std::move(name), std::move(anchor));
}

const Literal* Node::property(std::string_view name) const {
  auto it = properties.find(name);
  return it == properties.end() ? nullptr : &it->second;
}

bool Connector::has_role(std::string_view role) const {
  return std::find(roles.begin(), roles.end(), role) != roles.end();
}

const Binding* Link::binding(std::string_view role) const {
  auto it = bindings.find(role);
  return it == bindings.end() ? nullptr : &it->second;
}

void check_roles(const std::vector<std::string>& roles) {
  if (roles.size() < 2) throw InvariantError("a connector needs at least two roles");
  for (std::size_t i = 0; i < roles.size(); ++i) {
    if (roles[i].empty()) throw InvariantError("role names must not be empty");
    for (std::size_t j = 0; j < i; ++j)
      if (roles[i] == roles[j]) throw InvariantError("duplicate role '" + roles[i] + "'");
  }
}

std::string_view to_string(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::missing_role:
      return "missing role";
    case ViolationKind::extra_role:
      return "extra role";
    case ViolationKind::unknown_anchor:
      return "unknown anchor";
    case ViolationKind::dangling_node:
      return "dangling node";
  }
  return "?";
}

std::string Violation::message() const {
  std::string out(to_string(kind));
  if (!role.empty()) out += " '" + role + "'";
  if (!detail.empty()) out += ": " + detail;
  return out;
}

std::vector<Violation> validate_link(const Link& link, const Connector& connector, const NodeLookup& resolve) {
  std::vector<Violation> out;
  for (const auto& role : connector.roles)
    if (!link.bindings.contains(role))
      out.push_back({ViolationKind::missing_role, role, "connector " + connector.id.str()});
  for (const auto& [role, binding] : link.bindings) {
    if (!connector.has_role(role)) {
      out.push_back({ViolationKind::extra_role, role, "connector " + connector.id.str()});
      continue;
    }
    const Node* node = resolve(binding.node);
    if (node == nullptr) {
      out.push_back({ViolationKind::dangling_node, role, binding.node.str()});
    } else if (!node->has_anchor(binding.anchor)) {
      out.push_back({ViolationKind::unknown_anchor, role, binding.node.str() + "#" + binding.anchor});
    }
  }
  return out;
}

namespace {

std::string describe(const EntityId& link, const std::vector<Violation>& violations) {
  std::string out = "invalid link";
  if (!link.empty()) out += " " + link.str();
  for (const auto& v : violations) out += "; " + v.message();
  return out;
}

}  // namespace

LinkValidationError::LinkValidationError(const EntityId& link, std::vector<Violation> violations)
    : InvariantError(describe(link, violations)), violations_(std::move(violations)) {}

}  // namespace hyperkb
