#include "figdet/experiment.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <chrono>
#include <fstream>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "figdet/subprocess_backend.hpp"
#include "figdet/toy_backend.hpp"

namespace figdet {

using json = nlohmann::ordered_json;

std::string to_string(Setting s) {
  switch (s) {
    case Setting::baseline_import: return "baseline_import";
    case Setting::vanilla: return "vanilla";
    case Setting::vanilla_multitask: return "vanilla_multitask";
    case Setting::prompt: return "prompt";
    case Setting::prompt_multitask: return "prompt_multitask";
  }
  throw std::logic_error("bad Setting");
}

std::optional<Setting> setting_from_string(std::string_view s) {
  if (s == "baseline_import") return Setting::baseline_import;
  if (s == "vanilla") return Setting::vanilla;
  if (s == "vanilla_multitask") return Setting::vanilla_multitask;
  if (s == "prompt") return Setting::prompt;
  if (s == "prompt_multitask") return Setting::prompt_multitask;
  return std::nullopt;
}

std::optional<std::string> ExperimentConfig::validate(
    const TemplateRegistry& registry) const {
  if (tasks.empty()) return "no tasks configured";
  if (multitask() && tasks.size() < 2) {
    return "multitask settings require at least 2 tasks";
  }
  for (const TaskSpec& task : tasks) {
    if (!is_known_task(task.figure, task.language)) {
      return "unknown task " + task.key();
    }
    if (en_only && task.language != "en") {
      return "en_only config lists non-English task " + task.key();
    }
    try {
      resolve_template(registry, {task.figure, task.language, template_id});
    } catch (const std::exception&) {
      return "template " + template_id + " not in registry for " + task.key();
    }
  }
  if (auto reason = train.validate()) return "train config: " + *reason;
  if (backend_kind != "toy" && backend_kind != "oracle" &&
      backend_kind != "anti-oracle" && backend_kind != "constant" &&
      backend_kind != "subprocess") {
    return "unknown backend kind " + backend_kind;
  }
  if (backend_kind == "subprocess" && backend_argv.empty()) {
    return "subprocess backend requires backend_argv";
  }
  if (corpus_dir.empty()) return "corpus_dir not set";
  if (out_dir.empty()) return "out_dir not set";
  return std::nullopt;
}

std::string ExperimentConfig::to_json() const {
  json j;
  j["setting"] = to_string(setting);
  j["en_only"] = en_only;
  json tasks_j = json::array();
  for (const TaskSpec& t : tasks) {
    tasks_j.push_back({{"figure", to_string(t.figure)},
                       {"language", t.language},
                       {"template_id", t.template_id}});
  }
  j["tasks"] = tasks_j;
  j["template_id"] = template_id;
  j["train"] = {{"batch_size", train.batch_size},
                {"warmup_steps", train.warmup_steps},
                {"max_lr", train.max_lr},
                {"decay_steps", train.decay_steps},
                {"min_lr", train.min_lr},
                {"decay_power", train.decay_power},
                {"eval_interval", train.eval_interval},
                {"patience", train.patience},
                {"seed", train.seed}};
  if (train.max_steps) j["train"]["max_steps"] = *train.max_steps;
  j["backend_kind"] = backend_kind;
  if (!backend_argv.empty()) j["backend_argv"] = backend_argv;
  j["constant_output"] = constant_output;
  j["mix_policy"] = mix_policy == MixPolicy::concat_shuffle
                        ? "concat_shuffle"
                        : "proportional";
  j["corpus_dir"] = corpus_dir.string();
  j["out_dir"] = out_dir.string();
  return j.dump(2);
}

ExperimentConfig ExperimentConfig::from_json(const std::string& text) {
  json j = json::parse(text);
  ExperimentConfig c;
  if (j.contains("setting")) {
    auto s = setting_from_string(j["setting"].get<std::string>());
    if (!s) throw std::runtime_error("unknown setting in config");
    c.setting = *s;
  }
  c.en_only = j.value("en_only", false);
  if (j.contains("tasks")) {
    for (const auto& t : j["tasks"]) {
      auto figure = figure_from_string(t.at("figure").get<std::string>());
      if (!figure) throw std::runtime_error("unknown figure in config");
      TaskSpec spec;
      spec.figure = *figure;
      spec.language = t.at("language").get<std::string>();
      spec.template_id = t.value("template_id", std::string("A"));
      c.tasks.push_back(std::move(spec));
    }
  }
  c.template_id = j.value("template_id", std::string("A"));
  if (j.contains("train")) {
    const json& t = j["train"];
    c.train.batch_size = t.value("batch_size", c.train.batch_size);
    c.train.warmup_steps = t.value("warmup_steps", c.train.warmup_steps);
    c.train.max_lr = t.value("max_lr", c.train.max_lr);
    c.train.decay_steps = t.value("decay_steps", c.train.decay_steps);
    c.train.min_lr = t.value("min_lr", c.train.min_lr);
    c.train.decay_power = t.value("decay_power", c.train.decay_power);
    c.train.eval_interval = t.value("eval_interval", c.train.eval_interval);
    c.train.patience = t.value("patience", c.train.patience);
    c.train.seed = t.value("seed", c.train.seed);
    if (t.contains("max_steps")) {
      c.train.max_steps = t["max_steps"].get<std::size_t>();
    }
  }
  c.backend_kind = j.value("backend_kind", c.backend_kind);
  if (j.contains("backend_argv")) {
    c.backend_argv = j["backend_argv"].get<std::vector<std::string>>();
  }
  c.constant_output = j.value("constant_output", c.constant_output);
  if (j.value("mix_policy", "concat_shuffle") == std::string("proportional")) {
    c.mix_policy = MixPolicy::proportional;
  }
  c.corpus_dir = j.value("corpus_dir", std::string());
  c.out_dir = j.value("out_dir", std::string());
  return c;
}

ExperimentConfig ExperimentConfig::from_file(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_json(buf.str());
}

std::string fnv1a_hex(const std::string& data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

std::string ExperimentConfig::hash() const { return fnv1a_hex(to_json()); }

std::string digest_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return fnv1a_hex(buf.str());
}

namespace {

std::vector<TaskSpec> all_tasks(const std::string& template_id,
                                bool en_only) {
  std::vector<TaskSpec> tasks;
  for (const TaskKey& key : known_tasks()) {
    if (en_only && key.language != "en") continue;
    tasks.push_back({key.figure, key.language, template_id});
  }
  return tasks;
}

}  // namespace

std::optional<ExperimentConfig> preset(const std::string& name) {
  ExperimentConfig c;
  bool en_only = false;
  std::string base = name;
  if (base.starts_with("en_only_")) {
    en_only = true;
    base = base.substr(8);
  }
  auto setting = setting_from_string(base);
  if (!setting) return std::nullopt;
  c.setting = *setting;
  c.en_only = en_only;
  const bool single = !c.multitask() && c.setting != Setting::baseline_import;
  if (single) {
    // Single-task settings default to EN idiom; override with --tasks.
    c.tasks = {{Figure::idiom, "en", "A"}};
  } else {
    c.tasks = all_tasks("A", en_only);
  }
  return c;
}

std::vector<std::string> preset_names() {
  std::vector<std::string> names;
  for (const char* base : {"baseline_import", "vanilla", "vanilla_multitask",
                           "prompt", "prompt_multitask"}) {
    names.emplace_back(base);
    names.emplace_back(std::string("en_only_") + base);
  }
  return names;
}

void RunManifest::save(const std::filesystem::path& path) const {
  json j;
  j["config_hash"] = config_hash;
  j["config"] = json::parse(config_json);
  j["input_digests"] = input_digests;
  j["artifacts"] = artifacts;
  j["timestamp"] = timestamp;
  j["framework_version"] = framework_version;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

std::string framework_version() { return "0.1.0"; }

namespace {

std::string now_iso8601() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%FT%TZ", std::gmtime(&t));
  return buf;
}

}  // namespace

DirectoryLock::DirectoryLock(const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  lock_path_ = dir / ".lock";
  int fd = ::open(lock_path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
  if (fd < 0) {
    throw std::runtime_error("run directory locked: " + dir.string());
  }
  ::close(fd);
}

DirectoryLock::~DirectoryLock() {
  std::error_code ec;
  std::filesystem::remove(lock_path_, ec);
}

// ---- corpus preparation ----

std::filesystem::path cell_path(const std::filesystem::path& corpus_dir,
                                Figure figure, const std::string& language,
                                Split split, bool upsampled) {
  std::string name = to_string(figure) + "_" + language + "_" +
                     to_string(split) + (upsampled ? ".up" : "") + ".jsonl";
  return corpus_dir / name;
}

PrepareResult prepare_corpora(const PrepareOptions& options) {
  std::ifstream in(options.sources_json);
  if (!in) {
    throw std::runtime_error("cannot open " + options.sources_json.string());
  }
  json doc = json::parse(in);
  const auto base = options.sources_json.parent_path();
  std::filesystem::create_directories(options.out_dir);

  PrepareResult result;
  std::map<std::tuple<Figure, std::string, Split>, std::vector<LabeledExample>>
      cells;
  std::vector<RejectedRecord> rejected;

  for (const auto& src : doc.at("sources")) {
    const std::string name = src.at("name").get<std::string>();
    try {
      const std::string kind = src.at("kind").get<std::string>();
      const std::string language = src.at("language").get<std::string>();
      for (const auto& [split_name, rel] : src.at("splits").items()) {
        auto split = split_from_string(split_name);
        if (!split) throw std::runtime_error("bad split " + split_name);
        const auto path = base / rel.get<std::string>();
        IngestResult ingested;
        if (kind == "hyperbole") {
          ingested = ingest_hyperbole(read_hyperbole_tsv(path), language,
                                      *split, name);
        } else if (kind == "idiom") {
          ingested = ingest_idiom_word_level(read_token_tag_file(path),
                                             language, *split, name);
        } else if (kind == "metaphor") {
          BinarizationPolicy policy = options.metaphor_policy;
          if (src.contains("threshold")) {
            policy.threshold = src["threshold"].get<int>();
          }
          ingested = ingest_metaphor_lcc(read_metaphor_tsv(path), language,
                                         *split, name, policy);
        } else {
          throw std::runtime_error("unknown dataset kind " + kind);
        }
        for (auto& ex : ingested.examples) {
          ex.id = name + "/" + to_string(*split) + "/" + ex.id;
          auto figure = figure_from_string(
              kind == "hyperbole" ? "hyperbole"
                                  : (kind == "idiom" ? "idiom" : "metaphor"));
          cells[{*figure, language, *split}].push_back(std::move(ex));
        }
        for (auto& r : ingested.rejected) rejected.push_back(std::move(r));
      }
    } catch (const std::exception& e) {
      result.errors.push_back(name + ": " + e.what());
    }
  }

  std::vector<LabeledExample> everything;
  for (auto& [key, examples] : cells) {
    const auto& [figure, language, split] = key;
    write_records(cell_path(options.out_dir, figure, language, split),
                  examples);
    if (figure == Figure::hyperbole && split == Split::train &&
        examples.size() <= options.hyperbole_upsample_target) {
      write_records(
          cell_path(options.out_dir, figure, language, split, true),
          upsample(examples, options.hyperbole_upsample_target, options.seed));
    }
    everything.insert(everything.end(), examples.begin(), examples.end());
  }

  result.stats = compute_stats(everything);
  result.rejected = rejected.size();
  {
    std::ofstream out(options.out_dir / "stats.json");
    out << stats_to_json(result.stats) << '\n';
  }
  {
    std::ofstream out(options.out_dir / "stats.txt");
    out << stats_to_table(result.stats);
  }
  write_rejections(options.out_dir / "rejections.jsonl", rejected);
  return result;
}

std::vector<LabeledExample> load_task_data(
    const std::filesystem::path& corpus_dir, Figure figure,
    const std::string& language, Split split, bool prefer_upsampled) {
  if (prefer_upsampled) {
    auto up = cell_path(corpus_dir, figure, language, split, true);
    if (std::filesystem::exists(up)) return read_records(up);
  }
  auto path = cell_path(corpus_dir, figure, language, split);
  if (!std::filesystem::exists(path)) {
    throw std::runtime_error("no prepared data for " + to_string(figure) +
                             "/" + language + "/" + to_string(split) + " at " +
                             path.string());
  }
  return read_records(path);
}

// ---- backend construction ----

namespace {

GoldMap gold_from_entries(const std::vector<MixtureEntry>& entries,
                          const std::vector<ValidationSet>& valid_sets,
                          const TemplateRegistry& registry) {
  GoldMap gold;
  for (const MixtureEntry& e : entries) {
    const PromptTemplate& tmpl = resolve_template(registry, e.task);
    GoldMap part = build_gold_map(e.instances, tmpl, e.task.figure);
    gold.insert(part.begin(), part.end());
  }
  for (const ValidationSet& set : valid_sets) {
    GoldMap part = build_gold_map(set.instances, *set.tmpl, set.task.figure);
    gold.insert(part.begin(), part.end());
  }
  return gold;
}

}  // namespace

std::unique_ptr<Backend> make_backend(
    const ExperimentConfig& config, const TemplateRegistry& registry,
    const std::vector<MixtureEntry>& entries,
    const std::vector<ValidationSet>& valid_sets) {
  if (config.backend_kind == "toy") return std::make_unique<ToyBackend>();
  if (config.backend_kind == "constant") {
    return std::make_unique<ConstantBackend>(config.constant_output);
  }
  if (config.backend_kind == "subprocess") {
    return std::make_unique<SubprocessBackend>(config.backend_argv);
  }
  GoldMap gold = gold_from_entries(entries, valid_sets, registry);
  if (config.backend_kind == "oracle") {
    return std::make_unique<OracleBackend>(std::move(gold));
  }
  if (config.backend_kind == "anti-oracle") {
    return std::make_unique<AntiOracleBackend>(std::move(gold));
  }
  throw std::invalid_argument("unknown backend kind " + config.backend_kind);
}

std::unique_ptr<Backend> make_eval_backend(
    const std::string& kind, const std::vector<std::string>& backend_argv,
    const std::string& constant_output,
    const std::optional<std::filesystem::path>& payload,
    const TemplateRegistry& registry, const TaskSpec& task,
    const std::vector<LabeledExample>& data, bool use_template) {
  if (kind == "toy") {
    auto backend = std::make_unique<ToyBackend>();
    if (!payload) {
      throw std::runtime_error("toy eval backend requires a checkpoint");
    }
    backend->load(*payload);
    return backend;
  }
  if (kind == "subprocess") {
    auto backend = std::make_unique<SubprocessBackend>(backend_argv);
    if (payload) backend->load(*payload);
    return backend;
  }
  if (kind == "constant") {
    return std::make_unique<ConstantBackend>(constant_output);
  }
  const PromptTemplate& tmpl = resolve_template(registry, task);
  GoldMap gold = build_gold_map(
      build_instances(data, tmpl, task.figure, use_template), tmpl,
      task.figure);
  if (kind == "oracle") return std::make_unique<OracleBackend>(std::move(gold));
  if (kind == "anti-oracle") {
    return std::make_unique<AntiOracleBackend>(std::move(gold));
  }
  throw std::invalid_argument("unknown backend kind " + kind);
}

// ---- train command ----

TrainCommandResult run_training(const ExperimentConfig& config,
                                const TemplateRegistry& registry) {
  if (auto reason = config.validate(registry)) {
    throw std::invalid_argument("invalid experiment config: " + *reason);
  }
  if (config.setting == Setting::baseline_import) {
    throw std::invalid_argument(
        "baseline_import has no training phase; use the report command");
  }

  const std::string config_hash = config.hash();
  const auto run_dir = config.out_dir / config_hash;
  DirectoryLock lock(run_dir);

  RunManifest manifest;
  manifest.config_hash = config_hash;
  manifest.config_json = config.to_json();
  manifest.timestamp = now_iso8601();
  manifest.framework_version = framework_version();

  std::vector<MixtureEntry> entries;
  std::vector<ValidationSet> valid_sets;
  for (const TaskSpec& raw_task : config.tasks) {
    TaskSpec task = raw_task;
    task.template_id = config.template_id;
    const PromptTemplate& tmpl = resolve_template(registry, task);

    const bool upsampled = task.figure == Figure::hyperbole;
    auto train_path =
        cell_path(config.corpus_dir, task.figure, task.language, Split::train,
                  upsampled);
    if (!std::filesystem::exists(train_path)) {
      train_path = cell_path(config.corpus_dir, task.figure, task.language,
                             Split::train);
    }
    std::vector<LabeledExample> train_data;
    std::vector<LabeledExample> valid_data;
    try {
      train_data = read_records(train_path);
      valid_data = load_task_data(config.corpus_dir, task.figure,
                                  task.language, Split::valid);
    } catch (const std::exception& e) {
      throw std::runtime_error("cannot resolve dataset for task " +
                               task.key() + ": " + e.what());
    }
    if (train_data.empty()) {
      throw std::runtime_error("empty train set for task " + task.key());
    }
    manifest.input_digests[train_path.string()] = digest_file(train_path);
    auto valid_path =
        cell_path(config.corpus_dir, task.figure, task.language, Split::valid);
    manifest.input_digests[valid_path.string()] = digest_file(valid_path);

    MixtureEntry entry;
    entry.task = task;
    entry.instances = build_instances(train_data, tmpl, task.figure,
                                      config.uses_template());
    entries.push_back(std::move(entry));
    valid_sets.push_back(build_validation_set(valid_data, registry, task,
                                              config.uses_template()));
  }

  Mixture mixture(std::move(entries), config.mix_policy, config.train.seed);
  auto backend =
      make_backend(config, registry, mixture.entries(), valid_sets);

  TrainCommandResult result;
  result.run_dir = run_dir;
  {
    std::ofstream out(run_dir / "config.json");
    out << manifest.config_json << '\n';
  }
  result.train =
      train(*backend, mixture, valid_sets, config.train, run_dir, config_hash);

  manifest.artifacts = {(run_dir / "checkpoint.best").string(),
                        (run_dir / "checkpoint.meta.json").string(),
                        (run_dir / "training_log.jsonl").string(),
                        (run_dir / "config.json").string()};
  manifest.save(run_dir / "manifest.json");
  result.manifest = std::move(manifest);
  return result;
}

}  // namespace figdet
