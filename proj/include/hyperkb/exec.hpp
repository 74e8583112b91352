#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "hyperkb/store.hpp"

namespace hyperkb::exec {

class ExecError : public Error {
 public:
  using Error::Error;
};

struct ExecutorBinding {
  EntityId implementation;
  /// Whitespace-separated argv; `{input}` and `{output}` each appear exactly
  /// once and may sit inside a larger token.
  std::string command_template;
  std::filesystem::path working_dir;
  double timeout_seconds = 60.0;
};

struct ExecutionRecord {
  EntityId run;
  int exit_code = -1;
  bool timed_out = false;
  /// "succeeded" or "failed".
  std::string status;
  std::int64_t started_ms = 0;
  std::int64_t finished_ms = 0;
  std::string stdout_text;
  std::string stderr_text;
  std::vector<EntityId> outputs;
};

/// Per-stream capture kept on the Run node; the full stream goes to a file
/// beyond this.
inline constexpr std::size_t kCaptureLimit = 64 * 1024;

/// Splits a template into argv tokens. Throws ExecError when a placeholder is
/// missing or repeated.
std::vector<std::string> template_tokens(const std::string& command_template);

/// Stores the binding as properties of the implementation node, replacing any
/// earlier one.
void bind_executor(KnowledgeBase& kb, const ExecutorBinding& binding);

std::optional<ExecutorBinding> binding_of(const Snapshot& snap, const EntityId& implementation);

/// Runs the bound command on the input node's `path` and records a Run in
/// `context`. A nonzero exit or a timeout is recorded, not thrown.
ExecutionRecord execute_component(KnowledgeBase& kb, const EntityId& implementation, const EntityId& input,
                                  const EntityId& context);

/// Lowercase hex SHA-256 of a file.
std::string sha256_file(const std::filesystem::path& path);

}  // namespace hyperkb::exec
