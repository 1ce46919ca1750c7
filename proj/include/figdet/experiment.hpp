#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "figdet/corpus.hpp"
#include "figdet/evaluation.hpp"
#include "figdet/trainer.hpp"

namespace figdet {

// Exit codes shared by the CLI commands.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfigError = 2;
inline constexpr int kExitDataError = 3;
inline constexpr int kExitBackendAbort = 4;

enum class Setting {
  baseline_import,
  vanilla,
  vanilla_multitask,
  prompt,
  prompt_multitask,
};

std::string to_string(Setting s);
std::optional<Setting> setting_from_string(std::string_view s);

struct ExperimentConfig {
  Setting setting = Setting::prompt;
  bool en_only = false;  // restrict training tasks to language=en
  std::vector<TaskSpec> tasks;
  std::string template_id = "A";
  TrainConfig train;
  std::string backend_kind = "toy";  // toy|oracle|anti-oracle|constant|subprocess
  std::vector<std::string> backend_argv;  // subprocess only
  std::string constant_output = "Literal";
  MixPolicy mix_policy = MixPolicy::concat_shuffle;
  std::filesystem::path corpus_dir;
  std::filesystem::path out_dir;

  bool uses_template() const {
    return setting == Setting::prompt || setting == Setting::prompt_multitask;
  }
  bool multitask() const {
    return setting == Setting::vanilla_multitask ||
           setting == Setting::prompt_multitask;
  }

  std::optional<std::string> validate(const TemplateRegistry& registry) const;
  std::string to_json() const;
  static ExperimentConfig from_json(const std::string& text);
  static ExperimentConfig from_file(const std::filesystem::path& path);

  // FNV-1a over the canonical JSON form.
  std::string hash() const;
};

// The five model settings as ready-to-run presets. en_only_* variants
// restrict training to the English tasks.
std::optional<ExperimentConfig> preset(const std::string& name);
std::vector<std::string> preset_names();

struct RunManifest {
  std::string config_hash;
  std::string config_json;
  std::map<std::string, std::string> input_digests;  // path -> digest
  std::vector<std::string> artifacts;
  std::string timestamp;
  std::string framework_version;

  void save(const std::filesystem::path& path) const;
};

std::string fnv1a_hex(const std::string& data);
std::string digest_file(const std::filesystem::path& path);

// Holds <dir>/.lock for the lifetime of the object; throws if another
// process holds it.
class DirectoryLock {
 public:
  explicit DirectoryLock(const std::filesystem::path& dir);
  ~DirectoryLock();
  DirectoryLock(const DirectoryLock&) = delete;
  DirectoryLock& operator=(const DirectoryLock&) = delete;

 private:
  std::filesystem::path lock_path_;
};

// ---- corpus preparation ----

struct PrepareOptions {
  std::filesystem::path sources_json;  // dataset guide manifest
  std::filesystem::path out_dir;
  std::size_t hyperbole_upsample_target = 10000;
  std::uint64_t seed = 13;
  BinarizationPolicy metaphor_policy;
};

struct PrepareResult {
  CorpusStats stats;
  std::size_t rejected = 0;
  std::vector<std::string> errors;  // per-dataset failures, non-fatal
};

// Ingests every dataset listed in sources.json, writes canonical
// per-(figure,language,split) record files, upsampled hyperbole train
// sets, stats and rejection reports.
PrepareResult prepare_corpora(const PrepareOptions& options);

// Loads one prepared cell. With prefer_upsampled, the upsampled train
// file is used when present.
std::vector<LabeledExample> load_task_data(
    const std::filesystem::path& corpus_dir, Figure figure,
    const std::string& language, Split split, bool prefer_upsampled = false);

std::filesystem::path cell_path(const std::filesystem::path& corpus_dir,
                                Figure figure, const std::string& language,
                                Split split, bool upsampled = false);

// ---- backend construction ----

// Training-time backend. Mock kinds build their gold maps from the full
// mixture + validation data.
std::unique_ptr<Backend> make_backend(
    const ExperimentConfig& config, const TemplateRegistry& registry,
    const std::vector<MixtureEntry>& entries,
    const std::vector<ValidationSet>& valid_sets);

// Evaluation-time backend. Mock kinds derive their behaviour from the
// evaluation data itself; stateful kinds load the checkpoint payload.
std::unique_ptr<Backend> make_eval_backend(
    const std::string& kind, const std::vector<std::string>& backend_argv,
    const std::string& constant_output,
    const std::optional<std::filesystem::path>& payload,
    const TemplateRegistry& registry, const TaskSpec& task,
    const std::vector<LabeledExample>& data, bool use_template = true);

// ---- train command ----

struct TrainCommandResult {
  std::filesystem::path run_dir;
  TrainResult train;
  RunManifest manifest;
};

// Validates the config, builds the mixture and validation sets from the
// prepared corpora, trains, and writes checkpoint + log + manifest into
// <out_dir>/<config_hash>/.
TrainCommandResult run_training(const ExperimentConfig& config,
                                const TemplateRegistry& registry);

std::string framework_version();

}  // namespace figdet
