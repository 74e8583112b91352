#include "hyperkb/entity_id.hpp"

#include "hyperkb/error.hpp"

namespace hyperkb {

EntityId::EntityId(std::string_view ns, std::string_view local) {
  if (local.empty()) throw InvariantError("entity id: empty local part");
  if (ns.find(':') != std::string_view::npos) throw InvariantError("entity id: namespace contains ':'");
  if (ns.empty()) {
    if (local.find(':') != std::string_view::npos)
      throw InvariantError("entity id: local part '" + std::string(local) + "' needs a namespace");
    text_ = std::string(local);
    sep_ = std::string::npos;
  } else {
    text_.reserve(ns.size() + local.size() + 1);
    text_.append(ns).append(":").append(local);
    sep_ = ns.size();
  }
}

EntityId EntityId::parse(std::string_view text) {
  auto colon = text.find(':');
  if (colon == std::string_view::npos) return EntityId({}, text);
  if (colon == 0) throw InvariantError("entity id: '" + std::string(text) + "' has an empty namespace");
  return EntityId(text.substr(0, colon), text.substr(colon + 1));
}

namespace builtin {

const EntityId& default_context() {
  static const EntityId id(kNamespace, "default");
  return id;
}

const EntityId& instance_of() {
  static const EntityId id(kNamespace, "instanceOf");
  return id;
}

const EntityId& sub_class_of() {
  static const EntityId id(kNamespace, "subClassOf");
  return id;
}

}  // namespace builtin

}  // namespace hyperkb
