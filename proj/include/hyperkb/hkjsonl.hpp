#pragma once

// HKJSONL: one JSON object per line, discriminated by the "t" field.
//
//   {"t":"ctx","id":..,"name":..,"parent":..?}
//   {"t":"conn","id":..,"name":..,"roles":[..],"ctx":..?,"props":{..}?}
//   {"t":"node","id":..,"ctx":..?,"anchors":[..]?,"props":{..}?}
//   {"t":"link","id":..?,"conn":..,"ctx":..?,"b":{role:{"n":..,"a":..?}},"props":{..}?}
//
// Journals additionally carry mutation records:
//
//   {"t":"set","id":..,"k":..,"v":..}   {"t":"unset","id":..,"k":..}   {"t":"del","id":..}

#include <istream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "hyperkb/model.hpp"

namespace hyperkb::hkjsonl {

struct SetProperty {
  EntityId node;
  std::string name;
  Literal value;
  friend bool operator==(const SetProperty&, const SetProperty&) = default;
};

struct UnsetProperty {
  EntityId node;
  std::string name;
  friend bool operator==(const UnsetProperty&, const UnsetProperty&) = default;
};

/// Logical deletion of a node or link.
struct Remove {
  EntityId id;
  friend bool operator==(const Remove&, const Remove&) = default;
};

/// An empty `context` (and an empty link id) means "not specified".
using Record = std::variant<Context, Connector, Node, Link, SetProperty, UnsetProperty, Remove>;

/// Throws hyperkb::Error describing the malformed field.
Record parse_record(std::string_view line);
Record record_from_json(const nlohmann::json& j);

/// Compact single-line form without trailing newline.
std::string to_line(const Record& record);

Literal literal_from_json(const nlohmann::json& j);
nlohmann::json literal_to_json(const Literal& lit);

/// Reads every non-blank line of `in`. Throws LoadError with the 1-based line
/// number of the first malformed record.
std::vector<Record> read_records(std::istream& in);

}  // namespace hyperkb::hkjsonl
