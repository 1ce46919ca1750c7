#include "figdet/trainer.hpp"

#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

namespace figdet {

using json = nlohmann::ordered_json;

std::optional<std::string> TrainConfig::validate() const {
  if (batch_size == 0) return "batch_size must be positive";
  if (min_lr <= 0.0 || min_lr > max_lr) {
    return "require 0 < min_lr <= max_lr";
  }
  if (patience < 1) return "patience must be >= 1";
  if (eval_interval == 0) return "eval_interval must be positive";
  if (decay_power <= 0.0) return "decay_power must be positive";
  if (max_steps && *max_steps == 0) return "max_steps must be positive";
  return std::nullopt;
}

double lr_schedule(std::size_t step, const TrainConfig& config) {
  if (step <= config.warmup_steps) {
    if (config.warmup_steps == 0) return config.max_lr;
    return config.max_lr * static_cast<double>(step) /
           static_cast<double>(config.warmup_steps);
  }
  const std::size_t into_decay = step - config.warmup_steps;
  if (into_decay >= config.decay_steps) return config.min_lr;
  const double frac = 1.0 - static_cast<double>(into_decay) /
                                static_cast<double>(config.decay_steps);
  return config.min_lr +
         (config.max_lr - config.min_lr) * std::pow(frac, config.decay_power);
}

ValidationSet build_validation_set(const std::vector<LabeledExample>& examples,
                                   const TemplateRegistry& registry,
                                   const TaskSpec& task, bool use_template) {
  ValidationSet set;
  set.task = task;
  set.tmpl = &resolve_template(registry, task);
  set.instances =
      build_instances(examples, *set.tmpl, task.figure, use_template);
  set.gold.reserve(examples.size());
  for (const LabeledExample& ex : examples) set.gold.push_back(ex.label);
  return set;
}

double validation_accuracy(Backend& backend, const ValidationSet& set) {
  if (set.instances.empty()) {
    throw std::invalid_argument("empty validation set for " + set.task.key());
  }
  std::vector<std::string> inputs;
  inputs.reserve(set.instances.size());
  for (const auto& inst : set.instances) inputs.push_back(inst.input_text);
  std::vector<std::string> raw = backend.generate(inputs);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    ParseResult parsed = parse_prediction(raw[i], set.task.figure, *set.tmpl);
    if (parsed.label && *parsed.label == set.gold[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(raw.size());
}

void CheckpointMeta::save(const std::filesystem::path& path) const {
  json j;
  j["backend_kind"] = backend_kind;
  j["step"] = step;
  j["best_score"] = best_score;
  j["config_hash"] = config_hash;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

CheckpointMeta CheckpointMeta::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  json j = json::parse(in);
  CheckpointMeta meta;
  meta.backend_kind = j.at("backend_kind").get<std::string>();
  meta.step = j.at("step").get<std::size_t>();
  meta.best_score = j.at("best_score").get<double>();
  meta.config_hash = j.value("config_hash", "");
  return meta;
}

TrainResult train(Backend& backend, const Mixture& mixture,
                  const std::vector<ValidationSet>& valid_sets,
                  const TrainConfig& config,
                  const std::filesystem::path& run_dir,
                  const std::string& config_hash) {
  if (auto reason = config.validate()) {
    throw std::invalid_argument("invalid TrainConfig: " + *reason);
  }
  if (valid_sets.empty() && !config.max_steps) {
    throw std::invalid_argument(
        "training without validation sets requires max_steps");
  }

  std::filesystem::create_directories(run_dir);
  std::ofstream events(run_dir / "training_log.jsonl");
  const auto payload_path = run_dir / "checkpoint.best";

  TrainResult result;
  result.payload_path = payload_path;
  TrainingLog& log = result.log;

  auto iter = mixture.iterate();
  double best = -1.0;
  std::size_t best_step = 0;
  std::size_t since_best = 0;
  std::size_t step = 0;

  log.stop_reason = "max_steps";
  while (!config.max_steps || step < *config.max_steps) {
    ++step;
    const double lr = lr_schedule(step, config);
    std::vector<PromptInstance> batch = iter.next_batch(config.batch_size);
    double loss;
    try {
      loss = backend.fit_step(batch, lr);
    } catch (const BackendError& e) {
      throw BackendError("training aborted at step " + std::to_string(step) +
                         ": " + e.what());
    }
    log.steps.push_back({step, loss, lr});
    events << json{{"event", "step"}, {"step", step}, {"loss", loss},
                   {"lr", lr}}
                  .dump()
           << '\n';

    if (!valid_sets.empty() && step % config.eval_interval == 0) {
      EvalEvent ev;
      ev.step = step;
      double sum = 0.0;
      for (const ValidationSet& set : valid_sets) {
        double acc = validation_accuracy(backend, set);
        ev.per_task[set.task.key()] = acc;
        sum += acc;
      }
      ev.score = sum / static_cast<double>(valid_sets.size());
      ev.improved = ev.score > best;
      if (ev.improved) {
        best = ev.score;
        best_step = step;
        since_best = 0;
        backend.save(payload_path);
      } else {
        ++since_best;
      }
      log.evals.push_back(ev);
      events << json{{"event", "eval"},
                     {"step", ev.step},
                     {"score", ev.score},
                     {"per_task", ev.per_task},
                     {"improved", ev.improved}}
                    .dump()
             << '\n';
      if (since_best >= config.patience) {
        log.stop_reason = "early_stop";
        break;
      }
    }
  }
  if (mixture.epoch_size() == 0) log.stop_reason = "exhausted";

  if (best_step == 0) {
    // No evaluation ever ran (or none improved): the final state is the
    // best known state.
    backend.save(payload_path);
    best_step = step;
    best = valid_sets.empty() ? 0.0 : best;
  } else {
    backend.load(payload_path);
  }

  log.best_step = best_step;
  log.best_score = best < 0.0 ? 0.0 : best;
  result.meta = {backend.kind(), best_step, log.best_score, config_hash};
  result.meta.save(run_dir / "checkpoint.meta.json");
  events << json{{"event", "stop"},
                 {"reason", log.stop_reason},
                 {"best_step", log.best_step},
                 {"best_score", log.best_score}}
                .dump()
         << '\n';
  return result;
}

}  // namespace figdet
