#include "figdet/subprocess_backend.hpp"

#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <csignal>
#include <cstring>

#include <nlohmann/json.hpp>

namespace figdet {

using json = nlohmann::json;

SubprocessBackend::SubprocessBackend(std::vector<std::string> argv) {
  if (argv.empty()) throw BackendError("subprocess backend: empty argv");

  int in_pipe[2];   // parent -> child
  int out_pipe[2];  // child -> parent
  if (pipe(in_pipe) != 0 || pipe(out_pipe) != 0) {
    throw BackendError("pipe failed: " + std::string(std::strerror(errno)));
  }

  pid_t pid = fork();
  if (pid < 0) {
    throw BackendError("fork failed: " + std::string(std::strerror(errno)));
  }
  if (pid == 0) {
    dup2(in_pipe[0], STDIN_FILENO);
    dup2(out_pipe[1], STDOUT_FILENO);
    close(in_pipe[0]);
    close(in_pipe[1]);
    close(out_pipe[0]);
    close(out_pipe[1]);
    std::vector<char*> cargv;
    for (auto& a : argv) cargv.push_back(a.data());
    cargv.push_back(nullptr);
    execvp(cargv[0], cargv.data());
    _exit(127);
  }

  child_pid_ = pid;
  to_child_ = in_pipe[1];
  from_child_ = out_pipe[0];
  close(in_pipe[0]);
  close(out_pipe[1]);
}

SubprocessBackend::~SubprocessBackend() {
  if (to_child_ >= 0) {
    try {
      roundtrip(json{{"op", "shutdown"}}.dump());
    } catch (...) {
    }
    close(to_child_);
  }
  if (from_child_ >= 0) close(from_child_);
  if (child_pid_ > 0) {
    int status = 0;
    if (waitpid(child_pid_, &status, WNOHANG) == 0) {
      kill(child_pid_, SIGTERM);
      waitpid(child_pid_, &status, 0);
    }
  }
}

std::string SubprocessBackend::roundtrip(const std::string& request) const {
  std::string line = request + "\n";
  std::size_t written = 0;
  while (written < line.size()) {
    ssize_t n = write(to_child_, line.data() + written, line.size() - written);
    if (n <= 0) throw BackendError("adapter pipe write failed");
    written += static_cast<std::size_t>(n);
  }

  while (true) {
    auto nl = read_buffer_.find('\n');
    if (nl != std::string::npos) {
      std::string response = read_buffer_.substr(0, nl);
      read_buffer_.erase(0, nl + 1);
      return response;
    }
    char buf[4096];
    ssize_t n = read(from_child_, buf, sizeof(buf));
    if (n <= 0) throw BackendError("adapter closed the pipe");
    read_buffer_.append(buf, static_cast<std::size_t>(n));
  }
}

namespace {

json parse_response(const std::string& line) {
  json resp = json::parse(line, nullptr, false);
  if (resp.is_discarded()) {
    throw BackendError("adapter sent malformed JSON: " + line);
  }
  if (!resp.value("ok", false)) {
    throw BackendError("adapter error: " + resp.value("error", "unknown"));
  }
  return resp;
}

}  // namespace

double SubprocessBackend::fit_step(const std::vector<PromptInstance>& batch,
                                   double lr) {
  if (batch.empty()) throw std::invalid_argument("fit_step: empty batch");
  json items = json::array();
  for (const auto& inst : batch) {
    items.push_back({{"input", inst.input_text}, {"target", inst.target_text}});
  }
  json req = {{"op", "fit_step"}, {"lr", lr}, {"batch", items}};
  return parse_response(roundtrip(req.dump())).at("loss").get<double>();
}

std::vector<std::string> SubprocessBackend::generate(
    const std::vector<std::string>& inputs) {
  json req = {{"op", "generate"}, {"inputs", inputs}};
  json resp = parse_response(roundtrip(req.dump()));
  const json& outputs = resp.at("outputs");
  if (outputs.size() != inputs.size()) {
    throw BackendError("adapter returned misaligned outputs");
  }
  std::vector<std::string> out;
  out.reserve(inputs.size());
  for (const auto& o : outputs) {
    out.push_back(o.is_null() ? kGenerationError : o.get<std::string>());
  }
  return out;
}

void SubprocessBackend::save(const std::filesystem::path& path) const {
  parse_response(
      roundtrip(json{{"op", "save"}, {"path", path.string()}}.dump()));
}

void SubprocessBackend::load(const std::filesystem::path& path) {
  parse_response(
      roundtrip(json{{"op", "load"}, {"path", path.string()}}.dump()));
}

}  // namespace figdet
