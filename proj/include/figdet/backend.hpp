#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "figdet/prompt.hpp"

namespace figdet {

// Emitted in place of an output string when generation fails for one
// input; the output list always stays aligned with the input list.
inline constexpr const char* kGenerationError = "<generation-error>";

struct BackendError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Pluggable text-to-text model. One training run owns its backend
// exclusively; generate is safe to call between runs.
class Backend {
 public:
  virtual ~Backend() = default;

  virtual std::string kind() const = 0;

  // One optimization step on a batch; returns the batch mean negative
  // log-likelihood of the targets. Throws BackendError on internal
  // failure and std::invalid_argument on an empty batch.
  virtual double fit_step(const std::vector<PromptInstance>& batch,
                          double lr) = 0;

  // Greedy decoding: one output per input, order-aligned, deterministic.
  virtual std::vector<std::string> generate(
      const std::vector<std::string>& inputs) = 0;

  virtual void save(const std::filesystem::path& path) const = 0;
  virtual void load(const std::filesystem::path& path) = 0;
};

// Gold mapping from rendered prompt to (gold target, opposite target),
// used by the mock backends.
struct GoldEntry {
  std::string target;
  std::string opposite;
};
using GoldMap = std::map<std::string, GoldEntry>;

GoldMap build_gold_map(const std::vector<PromptInstance>& instances,
                       const PromptTemplate& tmpl, Figure figure);

// Emits the gold verbalization for every known prompt; loss is 0 by
// contract (it has memorized the mapping).
class OracleBackend : public Backend {
 public:
  explicit OracleBackend(GoldMap gold) : gold_(std::move(gold)) {}
  std::string kind() const override { return "oracle"; }
  double fit_step(const std::vector<PromptInstance>& batch,
                  double lr) override;
  std::vector<std::string> generate(
      const std::vector<std::string>& inputs) override;
  void save(const std::filesystem::path& path) const override;
  void load(const std::filesystem::path& path) override;

 private:
  GoldMap gold_;
};

// Emits the wrong verbalization for every known prompt.
class AntiOracleBackend : public Backend {
 public:
  explicit AntiOracleBackend(GoldMap gold) : gold_(std::move(gold)) {}
  std::string kind() const override { return "anti-oracle"; }
  double fit_step(const std::vector<PromptInstance>& batch,
                  double lr) override;
  std::vector<std::string> generate(
      const std::vector<std::string>& inputs) override;
  void save(const std::filesystem::path& path) const override;
  void load(const std::filesystem::path& path) override;

 private:
  GoldMap gold_;
};

// Emits one fixed string for every input.
class ConstantBackend : public Backend {
 public:
  explicit ConstantBackend(std::string output) : output_(std::move(output)) {}
  std::string kind() const override { return "constant"; }
  double fit_step(const std::vector<PromptInstance>& batch,
                  double lr) override;
  std::vector<std::string> generate(
      const std::vector<std::string>& inputs) override;
  void save(const std::filesystem::path& path) const override;
  void load(const std::filesystem::path& path) override;

 private:
  std::string output_;
};

// Produces a prescribed validation accuracy on each successive generate
// call: on call k it answers the gold target for the first
// round(scores[k] * n) prompts and the opposite for the rest. Meant for
// single-task runs where one evaluation issues exactly one generate call.
class ScriptedBackend : public Backend {
 public:
  ScriptedBackend(std::vector<double> scores, GoldMap gold)
      : scores_(std::move(scores)), gold_(std::move(gold)) {}
  std::string kind() const override { return "scripted"; }
  double fit_step(const std::vector<PromptInstance>& batch,
                  double lr) override;
  std::vector<std::string> generate(
      const std::vector<std::string>& inputs) override;
  void save(const std::filesystem::path& path) const override;
  void load(const std::filesystem::path& path) override;

 private:
  std::vector<double> scores_;
  GoldMap gold_;
  std::size_t calls_ = 0;
};

}  // namespace figdet
