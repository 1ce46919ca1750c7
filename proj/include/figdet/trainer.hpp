#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "figdet/backend.hpp"
#include "figdet/mixture.hpp"

namespace figdet {

// Training schedule and stopping rule. Defaults are the framework's
// standard recipe: warmup 1,000 steps to 1e-4, polynomial decay over
// 10,000 steps to 5e-5, evaluation every 1,000 steps, patience 5.
struct TrainConfig {
  std::size_t batch_size = 32;
  std::size_t warmup_steps = 1000;
  double max_lr = 1e-4;
  std::size_t decay_steps = 10000;
  double min_lr = 5e-5;
  double decay_power = 1.0;
  std::size_t eval_interval = 1000;
  std::size_t patience = 5;
  std::uint64_t seed = 0;
  std::optional<std::size_t> max_steps;

  std::optional<std::string> validate() const;
};

// lr(0)=0, linear to max_lr at warmup_steps, polynomial decay to min_lr
// at warmup_steps + decay_steps, constant min_lr beyond.
double lr_schedule(std::size_t step, const TrainConfig& config);

// Gold-labelled validation data for one task, already rendered.
struct ValidationSet {
  TaskSpec task;
  const PromptTemplate* tmpl = nullptr;
  std::vector<PromptInstance> instances;
  std::vector<Label> gold;
};

ValidationSet build_validation_set(const std::vector<LabeledExample>& examples,
                                   const TemplateRegistry& registry,
                                   const TaskSpec& task,
                                   bool use_template = true);

struct StepEvent {
  std::size_t step = 0;
  double loss = 0.0;
  double lr = 0.0;
};

struct EvalEvent {
  std::size_t step = 0;
  double score = 0.0;  // mean accuracy over tasks
  std::map<std::string, double> per_task;
  bool improved = false;
};

struct TrainingLog {
  std::vector<StepEvent> steps;
  std::vector<EvalEvent> evals;
  std::string stop_reason;  // early_stop | max_steps | exhausted
  std::size_t best_step = 0;
  double best_score = 0.0;
};

struct CheckpointMeta {
  std::string backend_kind;
  std::size_t step = 0;
  double best_score = 0.0;
  std::string config_hash;

  void save(const std::filesystem::path& path) const;
  static CheckpointMeta load(const std::filesystem::path& path);
};

struct TrainResult {
  std::filesystem::path payload_path;
  CheckpointMeta meta;
  TrainingLog log;
};

// Runs the training loop: batches from the mixture, lr from the schedule,
// validation every eval_interval steps, early stopping after `patience`
// consecutive non-improving evaluations. The backend is left loaded with
// the best checkpoint, never the last. The event stream is appended to
// run_dir/training_log.jsonl as training progresses.
TrainResult train(Backend& backend, const Mixture& mixture,
                  const std::vector<ValidationSet>& valid_sets,
                  const TrainConfig& config,
                  const std::filesystem::path& run_dir,
                  const std::string& config_hash = "");

// Mean accuracy of the backend on one validation set (one generate call).
double validation_accuracy(Backend& backend, const ValidationSet& set);

}  // namespace figdet
