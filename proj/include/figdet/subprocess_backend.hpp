#pragma once

#include <string>
#include <vector>

#include "figdet/backend.hpp"

namespace figdet {

// Adapter boundary for external model processes. The child speaks a
// line-delimited JSON protocol over stdin/stdout (see
// docs/backend_protocol.md); heavy dependencies live entirely on the
// other side of the pipe.
class SubprocessBackend : public Backend {
 public:
  // Spawns `argv` (argv[0] is the executable). Throws BackendError if the
  // child cannot be started.
  explicit SubprocessBackend(std::vector<std::string> argv);
  ~SubprocessBackend() override;

  SubprocessBackend(const SubprocessBackend&) = delete;
  SubprocessBackend& operator=(const SubprocessBackend&) = delete;

  std::string kind() const override { return "subprocess"; }
  double fit_step(const std::vector<PromptInstance>& batch,
                  double lr) override;
  std::vector<std::string> generate(
      const std::vector<std::string>& inputs) override;
  void save(const std::filesystem::path& path) const override;
  void load(const std::filesystem::path& path) override;

 private:
  std::string roundtrip(const std::string& request_line) const;

  int child_pid_ = -1;
  int to_child_ = -1;    // write end
  int from_child_ = -1;  // read end
  mutable std::string read_buffer_;
};

}  // namespace figdet
