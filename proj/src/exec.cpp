#include "hyperkb/exec.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <chrono>
#include <cstring>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <sstream>

#include <openssl/evp.h>

#include "hyperkb/mlschema.hpp"

extern char** environ;

namespace hyperkb::exec {

namespace {

constexpr std::string_view kTemplateProperty = "exec:template";
constexpr std::string_view kTimeoutProperty = "exec:timeout";
constexpr std::string_view kWorkingDirProperty = "exec:working_dir";

std::size_t count_of(const std::string& s, std::string_view needle) {
  std::size_t n = 0;
  for (auto pos = s.find(needle); pos != std::string::npos; pos = s.find(needle, pos + needle.size())) ++n;
  return n;
}

void replace_all(std::string& s, std::string_view from, const std::string& to) {
  for (auto pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + to.size()))
    s.replace(pos, from.size(), to);
}

std::int64_t now_ms() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::system_clock::now().time_since_epoch())
      .count();
}

/// Replaces invalid UTF-8 with U+FFFD so captured output survives JSON.
std::string valid_utf8(const std::string& in) {
  std::string out;
  out.reserve(in.size());
  std::size_t i = 0;
  while (i < in.size()) {
    unsigned char c = static_cast<unsigned char>(in[i]);
    std::size_t len = c < 0x80 ? 1 : (c >> 5) == 0x6 ? 2 : (c >> 4) == 0xE ? 3 : (c >> 3) == 0x1E ? 4 : 0;
    bool ok = len > 0 && i + len <= in.size();
    for (std::size_t k = 1; ok && k < len; ++k) ok = (static_cast<unsigned char>(in[i + k]) >> 6) == 0x2;
    if (ok && len == 2) ok = c >= 0xC2;
    if (ok && len == 3) {
      unsigned char c1 = static_cast<unsigned char>(in[i + 1]);
      ok = !(c == 0xE0 && c1 < 0xA0) && !(c == 0xED && c1 >= 0xA0);
    }
    if (ok && len == 4) {
      unsigned char c1 = static_cast<unsigned char>(in[i + 1]);
      ok = c <= 0xF4 && !(c == 0xF0 && c1 < 0x90) && !(c == 0xF4 && c1 >= 0x90);
    }
    if (ok) {
      out.append(in, i, len);
      i += len;
    } else {
      out += "\xEF\xBF\xBD";
      ++i;
    }
  }
  return out;
}

/// First kCaptureLimit bytes in memory; everything in a spill file once the
/// limit is passed.
class Capture {
 public:
  explicit Capture(std::filesystem::path spill) : spill_path_(std::move(spill)) {}

  void append(const char* data, std::size_t n) {
    total_ += n;
    if (!spill_ && head_.size() + n > kCaptureLimit) {
      spill_ = std::make_unique<std::ofstream>(spill_path_, std::ios::binary);
      spill_->write(head_.data(), static_cast<std::streamsize>(head_.size()));
    }
    if (spill_) spill_->write(data, static_cast<std::streamsize>(n));
    std::size_t room = kCaptureLimit - std::min(kCaptureLimit, head_.size());
    head_.append(data, std::min(room, n));
  }

  void close() {
    if (spill_) spill_->close();
  }

  const std::string& head() const { return head_; }
  bool spilled() const { return spill_ != nullptr; }
  const std::filesystem::path& spill_path() const { return spill_path_; }

 private:
  std::filesystem::path spill_path_;
  std::string head_;
  std::unique_ptr<std::ofstream> spill_;
  std::size_t total_ = 0;
};

struct ProcessResult {
  int exit_code = -1;
  bool timed_out = false;
  std::string spawn_error;
};

class Pipe {
 public:
  Pipe() {
    if (::pipe2(fds_, O_CLOEXEC) != 0) throw ExecError(std::string("pipe: ") + std::strerror(errno));
  }
  ~Pipe() {
    close_read();
    close_write();
  }
  int read_end() const { return fds_[0]; }
  int write_end() const { return fds_[1]; }
  void close_read() {
    if (fds_[0] >= 0) ::close(fds_[0]);
    fds_[0] = -1;
  }
  void close_write() {
    if (fds_[1] >= 0) ::close(fds_[1]);
    fds_[1] = -1;
  }

 private:
  int fds_[2] = {-1, -1};
};

ProcessResult run_process(const std::vector<std::string>& argv, const std::filesystem::path& cwd,
                          const std::string& run_id, double timeout_seconds, Capture& out, Capture& err) {
  ProcessResult result;
  Pipe out_pipe;
  Pipe err_pipe;

  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_adddup2(&actions, out_pipe.write_end(), STDOUT_FILENO);
  posix_spawn_file_actions_adddup2(&actions, err_pipe.write_end(), STDERR_FILENO);
  posix_spawn_file_actions_addopen(&actions, STDIN_FILENO, "/dev/null", O_RDONLY, 0);
  posix_spawn_file_actions_addchdir_np(&actions, cwd.c_str());

  std::vector<std::string> env_store;
  for (char** e = environ; e && *e; ++e)
    if (std::strncmp(*e, "HYPERKB_RUN_ID=", 15) != 0) env_store.emplace_back(*e);
  env_store.push_back("HYPERKB_RUN_ID=" + run_id);
  std::vector<char*> envp;
  for (auto& e : env_store) envp.push_back(e.data());
  envp.push_back(nullptr);
  std::vector<std::string> args = argv;
  std::vector<char*> argp;
  for (auto& a : args) argp.push_back(a.data());
  argp.push_back(nullptr);

  pid_t pid = 0;
  int rc = posix_spawnp(&pid, argp[0], &actions, nullptr, argp.data(), envp.data());
  posix_spawn_file_actions_destroy(&actions);
  out_pipe.close_write();
  err_pipe.close_write();
  if (rc != 0) {
    result.exit_code = 127;
    result.spawn_error = "cannot start '" + argv[0] + "': " + std::strerror(rc);
    return result;
  }

  const auto deadline = std::chrono::steady_clock::now() + std::chrono::duration<double>(timeout_seconds);
  bool out_open = true, err_open = true;
  char buf[8192];
  while (out_open || err_open) {
    auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) {
      result.timed_out = true;
      break;
    }
    pollfd fds[2];
    nfds_t n = 0;
    if (out_open) fds[n++] = {out_pipe.read_end(), POLLIN, 0};
    if (err_open) fds[n++] = {err_pipe.read_end(), POLLIN, 0};
    int ready = ::poll(fds, n, static_cast<int>(std::min<std::int64_t>(left.count(), 1000)));
    if (ready < 0) {
      if (errno == EINTR) continue;
      break;
    }
    for (nfds_t i = 0; i < n; ++i) {
      if (!(fds[i].revents & (POLLIN | POLLHUP | POLLERR))) continue;
      bool is_out = fds[i].fd == out_pipe.read_end();
      ssize_t got = ::read(fds[i].fd, buf, sizeof buf);
      if (got > 0) {
        (is_out ? out : err).append(buf, static_cast<std::size_t>(got));
      } else if (got == 0 || errno != EINTR) {
        (is_out ? out_open : err_open) = false;
      }
    }
  }

  int status = 0;
  if (result.timed_out) {
    ::kill(pid, SIGKILL);
    ::waitpid(pid, &status, 0);
    result.exit_code = -1;
    return result;
  }
  // Output closed; the process may still be running until the deadline.
  for (;;) {
    pid_t w = ::waitpid(pid, &status, WNOHANG);
    if (w == pid) break;
    if (w < 0 && errno != EINTR) break;
    if (std::chrono::steady_clock::now() >= deadline) {
      result.timed_out = true;
      ::kill(pid, SIGKILL);
      ::waitpid(pid, &status, 0);
      return result;
    }
    ::usleep(2000);
  }
  if (WIFEXITED(status))
    result.exit_code = WEXITSTATUS(status);
  else if (WIFSIGNALED(status))
    result.exit_code = 128 + WTERMSIG(status);
  return result;
}

std::mutex& binding_mutex(const EntityId& implementation) {
  static std::mutex registry_mutex;
  static std::map<EntityId, std::unique_ptr<std::mutex>> registry;
  std::lock_guard lock(registry_mutex);
  auto& slot = registry[implementation];
  if (!slot) slot = std::make_unique<std::mutex>();
  return *slot;
}

EntityId fresh_run_id(const Snapshot& snap, const EntityId& context) {
  static std::atomic<std::uint64_t> counter{0};
  const Context* ctx = snap.find_context(context);
  std::string ns(ctx ? ctx->name : "exec");
  if (ns.find(':') != std::string::npos) ns = "exec";
  for (;;) {
    EntityId id(ns, "run_" + std::to_string(now_ms()) + "_" + std::to_string(counter++));
    if (!snap.find_node(id) && !snap.find_link(id)) return id;
  }
}

std::optional<EntityId> unique_connector(const Snapshot& snap, std::string_view name) {
  auto found = snap.connectors_named(name);
  if (found.size() != 1) return std::nullopt;
  return found.front()->id;
}

Link binary_link(const EntityId& conn, const EntityId& s, const EntityId& o, const EntityId& ctx) {
  Link l;
  l.connector = conn;
  l.context = ctx;
  l.bindings.emplace(std::string(kSubjectRole), Binding{s});
  l.bindings.emplace(std::string(kObjectRole), Binding{o});
  return l;
}

}  // namespace

std::vector<std::string> template_tokens(const std::string& command_template) {
  std::size_t inputs = count_of(command_template, "{input}");
  std::size_t outputs = count_of(command_template, "{output}");
  if (inputs != 1) throw ExecError("template must contain {input} exactly once");
  if (outputs != 1) throw ExecError("template must contain {output} exactly once");
  std::vector<std::string> out;
  std::istringstream in(command_template);
  std::string tok;
  while (in >> tok) out.push_back(tok);
  if (out.empty() || out.front().find('{') == 0) throw ExecError("template must start with a program name");
  return out;
}

void bind_executor(KnowledgeBase& kb, const ExecutorBinding& binding) {
  template_tokens(binding.command_template);
  if (!(binding.timeout_seconds > 0)) throw ExecError("timeout must be positive");
  Snapshot snap = kb.snapshot();
  if (snap.find_node(binding.implementation) == nullptr)
    throw NotFoundError("unknown node " + binding.implementation.str());
  std::vector<hkjsonl::Record> records{
      hkjsonl::SetProperty{binding.implementation, std::string(kTemplateProperty), binding.command_template},
      hkjsonl::SetProperty{binding.implementation, std::string(kTimeoutProperty), binding.timeout_seconds},
      hkjsonl::SetProperty{binding.implementation, std::string(kWorkingDirProperty),
                           binding.working_dir.empty() ? std::string(".") : binding.working_dir.string()},
  };
  kb.apply(records);
}

std::optional<ExecutorBinding> binding_of(const Snapshot& snap, const EntityId& implementation) {
  const Node* node = snap.find_node(implementation);
  if (node == nullptr) return std::nullopt;
  const Literal* tmpl = node->property(kTemplateProperty);
  if (tmpl == nullptr || tmpl->kind() != LiteralKind::text) return std::nullopt;
  ExecutorBinding b;
  b.implementation = implementation;
  b.command_template = tmpl->text();
  if (const Literal* t = node->property(kTimeoutProperty); t && t->is_numeric()) b.timeout_seconds = t->as_double();
  if (const Literal* d = node->property(kWorkingDirProperty); d && d->kind() == LiteralKind::text)
    b.working_dir = d->text();
  return b;
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) throw Error("sha256 init failed");
  char buf[1 << 15];
  while (in) {
    in.read(buf, sizeof buf);
    if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf, static_cast<std::size_t>(in.gcount()));
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), digest, &len);
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 0xF];
  }
  return out;
}

ExecutionRecord execute_component(KnowledgeBase& kb, const EntityId& implementation, const EntityId& input,
                                  const EntityId& context) {
  std::lock_guard serial(binding_mutex(implementation));
  Snapshot snap = kb.snapshot();
  if (snap.find_node(implementation) == nullptr) throw NotFoundError("unknown node " + implementation.str());
  auto binding = binding_of(snap, implementation);
  if (!binding) throw ExecError("no executor bound to " + implementation.str());
  const Node* input_node = snap.find_node(input);
  if (input_node == nullptr) throw NotFoundError("unknown input node " + input.str());
  if (snap.find_context(context) == nullptr) throw NotFoundError("unknown context " + context.str());
  const Literal* input_path = input_node->property("path");
  if (input_path == nullptr || input_path->kind() != LiteralKind::text)
    throw ExecError("input node " + input.str() + " has no text 'path' property");
  auto tokens = template_tokens(binding->command_template);

  namespace fs = std::filesystem;
  fs::path workdir = binding->working_dir.empty() ? fs::current_path() : fs::absolute(binding->working_dir);
  std::error_code ec;
  fs::create_directories(workdir, ec);
  if (!fs::is_directory(workdir)) throw IoError("cannot use working directory " + workdir.string());

  ExecutionRecord rec;
  rec.run = fresh_run_id(snap, context);
  const std::string run_local(rec.run.local());
  const fs::path output_path = workdir / (run_local + ".out");
  for (auto& t : tokens) {
    replace_all(t, "{input}", input_path->text());
    replace_all(t, "{output}", output_path.string());
  }

  Capture out(workdir / (run_local + ".stdout"));
  Capture err(workdir / (run_local + ".stderr"));
  rec.started_ms = now_ms();
  ProcessResult pr = run_process(tokens, workdir, rec.run.str(), binding->timeout_seconds, out, err);
  out.close();
  err.close();
  rec.finished_ms = std::max(rec.started_ms, now_ms());
  rec.exit_code = pr.exit_code;
  rec.timed_out = pr.timed_out;
  rec.stdout_text = valid_utf8(out.head());
  rec.stderr_text = valid_utf8(pr.spawn_error.empty() ? err.head() : pr.spawn_error);

  std::vector<fs::path> produced;
  if (!pr.timed_out && pr.exit_code == 0) {
    if (fs::is_regular_file(output_path)) {
      produced.push_back(output_path);
    } else if (fs::is_directory(output_path)) {
      for (const auto& entry : fs::directory_iterator(output_path))
        if (entry.is_regular_file()) produced.push_back(entry.path());
      std::sort(produced.begin(), produced.end());
    }
  }
  const bool ok = !pr.timed_out && pr.exit_code == 0 && !produced.empty();
  rec.status = ok ? "succeeded" : "failed";

  std::vector<hkjsonl::Record> records;
  auto run_concept = mlschema::find_concept(snap, "Run");
  auto data_concept = mlschema::find_concept(snap, "Data");

  Node run(rec.run, context);
  run.set_property("status", rec.status);
  run.set_property("exit_code", static_cast<std::int64_t>(rec.exit_code));
  run.set_property("timed_out", rec.timed_out);
  run.set_property("started_ms", rec.started_ms);
  run.set_property("finished_ms", rec.finished_ms);
  run.set_property("stdout", rec.stdout_text);
  run.set_property("stderr", rec.stderr_text);
  run.set_property("implementation", implementation.str());
  std::string command;
  for (const auto& t : tokens) command += (command.empty() ? "" : " ") + t;
  run.set_property("command", valid_utf8(command));
  if (!ok && pr.exit_code == 0 && !pr.timed_out) run.set_property("failure", std::string("no output produced"));
  if (pr.timed_out) run.set_property("failure", std::string("timeout"));

  auto artifact = [&](const fs::path& path, const std::string& suffix, const std::string& kind) {
    Node a(EntityId(rec.run.ns(), run_local + "_" + suffix), context);
    a.set_property("path", valid_utf8(fs::absolute(path).string()));
    a.set_property("sha256", sha256_file(path));
    a.set_property("size", static_cast<std::int64_t>(fs::file_size(path)));
    a.set_property("kind", kind);
    EntityId id = a.id;
    records.emplace_back(std::move(a));
    return id;
  };
  if (out.spilled()) run.set_property("stdout_artifact", artifact(out.spill_path(), "stdout", "stdout").str());
  if (err.spilled()) run.set_property("stderr_artifact", artifact(err.spill_path(), "stderr", "stderr").str());
  records.emplace_back(std::move(run));
  if (run_concept) records.emplace_back(binary_link(builtin::instance_of(), rec.run, *run_concept, context));

  auto has_output = unique_connector(snap, "hasOutput");
  for (std::size_t i = 0; i < produced.size(); ++i) {
    EntityId id = artifact(produced[i], "out" + std::to_string(i), "output");
    rec.outputs.push_back(id);
    if (data_concept) records.emplace_back(binary_link(builtin::instance_of(), id, *data_concept, context));
    if (has_output) records.emplace_back(binary_link(*has_output, rec.run, id, context));
  }
  if (auto has_input = unique_connector(snap, "hasInput"))
    records.emplace_back(binary_link(*has_input, rec.run, input, context));
  auto implements = unique_connector(snap, "implements");
  auto realizes = unique_connector(snap, "realizes");
  if (implements && realizes) {
    for (const auto& lid : snap.links_from(implementation, *implements))
      records.emplace_back(binary_link(*realizes, rec.run, snap.find_link(lid)->binding(kObjectRole)->node, context));
  }
  kb.apply(records);
  return rec;
}

}  // namespace hyperkb::exec
