// figdet: batch pipeline for sentence-level figurative language detection.
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "figdet/experiment.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace figdet;

namespace {

std::vector<TaskSpec> parse_tasks(const std::vector<std::string>& specs,
                                  const std::string& template_id) {
  std::vector<TaskSpec> tasks;
  for (const std::string& s : specs) {
    auto colon = s.find(':');
    if (colon == std::string::npos) {
      throw std::invalid_argument("task must be figure:language, got " + s);
    }
    auto figure = figure_from_string(s.substr(0, colon));
    if (!figure) {
      throw std::invalid_argument("unknown figure in task " + s);
    }
    tasks.push_back({*figure, s.substr(colon + 1), template_id});
  }
  return tasks;
}

fs::path data_root_default() {
  if (const char* env = std::getenv("FIGDET_DATA_ROOT")) return env;
  return ".";
}

void write_file(const fs::path& path, const std::string& content) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
}

std::vector<EvalReport> load_reports(const fs::path& dir) {
  std::vector<EvalReport> reports;
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.path().extension() == ".json" &&
        entry.path().filename().string().starts_with("eval_")) {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  for (const auto& file : files) {
    std::ifstream in(file);
    json j = json::parse(in);
    EvalReport r;
    auto figure = figure_from_string(j.at("task").at("figure").get<std::string>());
    if (!figure) throw std::runtime_error("bad report " + file.string());
    r.task.figure = *figure;
    r.task.language = j.at("task").at("language").get<std::string>();
    r.template_id = j.at("task").at("template_id").get<std::string>();
    r.task.template_id = r.template_id;
    r.split = *split_from_string(j.at("split").get<std::string>());
    r.n = j.at("n").get<std::size_t>();
    r.accuracy = j.at("accuracy").get<double>();
    r.unparsed_count = j.at("unparsed_count").get<std::size_t>();
    r.zero_shot = j.value("zero_shot", false);
    reports.push_back(std::move(r));
  }
  return reports;
}

struct EvalArgs {
  std::string checkpoint_dir;
  std::vector<std::string> task_specs;
  std::string split = "test";
  std::string template_id = "A";
  std::string backend_kind;
  std::string corpus_dir;
  std::string out_dir;
  bool use_template = true;
};

// Shared by `evaluate` and `zero-shot`.
std::vector<EvalReport> run_evaluation(const EvalArgs& args,
                                       const TemplateRegistry& registry,
                                       bool zero_shot_mode,
                                       const std::vector<std::string>&
                                           trained_languages) {
  CheckpointMeta meta;
  std::optional<fs::path> payload;
  std::string kind = args.backend_kind;
  if (!args.checkpoint_dir.empty()) {
    const fs::path dir = args.checkpoint_dir;
    meta = CheckpointMeta::load(dir / "checkpoint.meta.json");
    payload = dir / "checkpoint.best";
    if (kind.empty()) kind = meta.backend_kind;
  }
  if (kind.empty()) {
    throw std::invalid_argument("no backend kind: give --backend or --checkpoint");
  }

  auto split = split_from_string(args.split);
  if (!split) throw std::invalid_argument("bad split " + args.split);

  std::vector<std::pair<TaskSpec, std::vector<LabeledExample>>> task_data;
  for (TaskSpec task : parse_tasks(args.task_specs, args.template_id)) {
    auto data = load_task_data(args.corpus_dir, task.figure, task.language,
                               *split);
    task_data.emplace_back(std::move(task), std::move(data));
  }

  std::vector<EvalReport> reports;
  std::vector<std::string> warnings;
  for (auto& [task, data] : task_data) {
    auto backend = make_eval_backend(kind, {}, "Literal", payload, registry,
                                     task, data, args.use_template);
    if (zero_shot_mode) {
      auto batch = zero_shot_protocol(*backend, trained_languages,
                                      {{task, data}}, *split, registry, meta,
                                      &warnings);
      reports.push_back(std::move(batch[0]));
    } else {
      reports.push_back(evaluate(*backend, data, task, *split, registry, meta,
                                 args.use_template));
    }
  }
  for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';

  const fs::path out = args.out_dir;
  fs::create_directories(out);
  for (const EvalReport& r : reports) {
    const std::string name = "eval_" + to_string(r.task.figure) + "_" +
                             r.task.language + "_" + to_string(r.split) +
                             ".json";
    write_file(out / name, report_to_json(r));
  }
  write_file(out / "eval_table.txt", report_to_table(reports));

  RunManifest manifest;
  manifest.config_hash = meta.config_hash;
  manifest.config_json = "{}";
  manifest.framework_version = framework_version();
  for (const EvalReport& r : reports) {
    manifest.artifacts.push_back(
        (out / ("eval_" + to_string(r.task.figure) + "_" + r.task.language +
                "_" + to_string(r.split) + ".json"))
            .string());
  }
  manifest.save(out / "manifest.json");
  std::cout << report_to_table(reports);
  return reports;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"figdet: multilingual figurative language detection pipeline"};
  app.require_subcommand(1);

  TemplateRegistry registry = TemplateRegistry::builtin();
  std::string templates_file;
  app.add_option("--templates", templates_file,
                 "template registry JSON (default: built-in registry)");

  // ---- prepare ----
  auto* prepare = app.add_subcommand("prepare", "ingest source datasets");
  std::string sources = (data_root_default() / "sources.json").string();
  std::string prep_out = "corpus";
  std::size_t upsample_target = 10000;
  std::uint64_t prep_seed = 13;
  int threshold = 2;
  prepare->add_option("--sources", sources, "dataset manifest JSON");
  prepare->add_option("--out", prep_out, "output corpus directory");
  prepare->add_option("--upsample-target", upsample_target,
                      "hyperbole train upsample size");
  prepare->add_option("--seed", prep_seed, "upsampling seed");
  prepare->add_option("--threshold", threshold,
                      "metaphor binarization threshold");

  // ---- train ----
  auto* train_cmd = app.add_subcommand("train", "train a model");
  std::string config_file, preset_name;
  std::vector<std::string> task_specs;
  std::string template_id, backend_kind, corpus_dir, out_dir;
  std::int64_t seed = -1, max_steps = -1;
  train_cmd->add_option("--config", config_file, "experiment config JSON");
  train_cmd->add_option("--preset", preset_name,
                        "one of: " + [] {
                          std::string s;
                          for (const auto& n : preset_names()) {
                            s += (s.empty() ? "" : ", ") + n;
                          }
                          return s;
                        }());
  train_cmd->add_option("--tasks", task_specs, "tasks as figure:language");
  train_cmd->add_option("--template", template_id, "template id");
  train_cmd->add_option("--backend", backend_kind, "backend kind");
  train_cmd->add_option("--seed", seed, "training seed");
  train_cmd->add_option("--max-steps", max_steps, "step cap");
  train_cmd->add_option("--corpus", corpus_dir, "prepared corpus directory");
  train_cmd->add_option("--out", out_dir, "output directory");

  // ---- evaluate / zero-shot ----
  EvalArgs eval_args;
  std::vector<std::string> trained_languages;
  auto add_eval_opts = [&](CLI::App* cmd) {
    cmd->add_option("--checkpoint", eval_args.checkpoint_dir,
                    "run directory with checkpoint.best");
    cmd->add_option("--tasks", eval_args.task_specs, "figure:language")
        ->required();
    cmd->add_option("--split", eval_args.split, "train|valid|test");
    cmd->add_option("--template", eval_args.template_id, "template id");
    cmd->add_option("--backend", eval_args.backend_kind,
                    "override backend kind");
    cmd->add_option("--corpus", eval_args.corpus_dir, "corpus directory")
        ->required();
    cmd->add_option("--out", eval_args.out_dir, "output directory")
        ->required();
    cmd->add_flag("!--no-template", eval_args.use_template,
                  "vanilla inputs (no prompt)");
  };
  auto* eval_cmd = app.add_subcommand("evaluate", "score a checkpoint");
  add_eval_opts(eval_cmd);
  auto* zs_cmd = app.add_subcommand("zero-shot",
                                    "evaluate on languages not trained on");
  add_eval_opts(zs_cmd);
  zs_cmd->add_option("--trained-languages", trained_languages,
                     "languages the checkpoint trained on")
      ->required();

  // ---- transfer ----
  auto* transfer_cmd =
      app.add_subcommand("transfer", "train-language x test-language grid");
  std::string tr_figure = "idiom", tr_backend, tr_template = "A";
  std::string tr_corpus, tr_out, tr_overall;
  std::vector<std::string> tr_rows, tr_languages;
  transfer_cmd->add_option("--figure", tr_figure, "figure of speech");
  transfer_cmd->add_option("--languages", tr_languages, "test languages")
      ->required();
  transfer_cmd->add_option("--backend", tr_backend,
                           "mock backend for every row (oracle/...)");
  transfer_cmd->add_option("--row", tr_rows,
                           "lang=run_dir pairs (stateful backends)");
  transfer_cmd->add_option("--overall", tr_overall,
                           "run_dir of the all-languages model");
  transfer_cmd->add_option("--template", tr_template, "template id");
  transfer_cmd->add_option("--corpus", tr_corpus, "corpus directory")
      ->required();
  transfer_cmd->add_option("--out", tr_out, "output directory")->required();

  // ---- prompt-diff ----
  auto* diff_cmd =
      app.add_subcommand("prompt-diff", "accuracy differences per template");
  std::string diff_ref, diff_other, diff_out;
  diff_cmd->add_option("--ref", diff_ref, "directory of reference reports")
      ->required();
  diff_cmd->add_option("--other", diff_other, "directory of other reports")
      ->required();
  diff_cmd->add_option("--out", diff_out, "output directory")->required();

  // ---- overlap ----
  auto* overlap_cmd =
      app.add_subcommand("overlap", "idiom expression overlap ratios");
  std::string ov_train, ov_out;
  std::vector<std::string> ov_probes;
  overlap_cmd->add_option("--train", ov_train, "train records (.jsonl)")
      ->required();
  overlap_cmd->add_option("--probe", ov_probes,
                          "name=records.jsonl probe sets")
      ->required();
  overlap_cmd->add_option("--out", ov_out, "output directory")->required();

  // ---- templates ----
  auto* templates_cmd = app.add_subcommand(
      "templates", "print the active template registry as editable JSON");

  // ---- report ----
  auto* report_cmd =
      app.add_subcommand("report", "render tables from stored reports");
  std::string rep_dir, rep_baseline, rep_valid, rep_test, rep_out;
  report_cmd->add_option("--reports", rep_dir, "directory of eval reports");
  report_cmd->add_option("--baseline", rep_baseline,
                         "externally produced baseline accuracies JSON");
  report_cmd->add_option("--valid", rep_valid, "valid-split report dir");
  report_cmd->add_option("--test", rep_test, "test-split report dir");
  report_cmd->add_option("--out", rep_out, "output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (!templates_file.empty()) {
      registry = TemplateRegistry::load(templates_file);
    }

    if (*templates_cmd) {
      std::cout << registry.to_json() << '\n';
      return kExitOk;
    }

    if (*prepare) {
      PrepareOptions options;
      options.sources_json = sources;
      options.out_dir = prep_out;
      options.hyperbole_upsample_target = upsample_target;
      options.seed = prep_seed;
      options.metaphor_policy.threshold = threshold;
      PrepareResult result = prepare_corpora(options);
      std::cout << stats_to_table(result.stats);
      std::cout << "rejected records: " << result.rejected << '\n';
      for (const auto& e : result.errors) {
        std::cerr << "dataset error: " << e << '\n';
      }
      return result.errors.empty() ? kExitOk : kExitDataError;
    }

    if (*train_cmd) {
      ExperimentConfig config;
      if (!preset_name.empty()) {
        auto p = preset(preset_name);
        if (!p) {
          std::cerr << "unknown preset " << preset_name << '\n';
          return kExitConfigError;
        }
        config = *p;
      }
      if (!config_file.empty()) {
        json merged = json::parse(config.to_json());
        std::ifstream in(config_file);
        if (!in) throw std::runtime_error("cannot open " + config_file);
        merged.merge_patch(json::parse(in));
        config = ExperimentConfig::from_json(merged.dump());
      }
      if (!template_id.empty()) config.template_id = template_id;
      if (!task_specs.empty()) {
        config.tasks = parse_tasks(task_specs, config.template_id);
      }
      if (!backend_kind.empty()) config.backend_kind = backend_kind;
      if (seed >= 0) config.train.seed = static_cast<std::uint64_t>(seed);
      if (max_steps >= 0) {
        config.train.max_steps = static_cast<std::size_t>(max_steps);
      }
      if (!corpus_dir.empty()) config.corpus_dir = corpus_dir;
      if (!out_dir.empty()) config.out_dir = out_dir;

      TrainCommandResult result = run_training(config, registry);
      std::cout << "run " << result.manifest.config_hash << " done: best step "
                << result.train.log.best_step << ", best score "
                << result.train.log.best_score << ", stop reason "
                << result.train.log.stop_reason << '\n';
      return kExitOk;
    }

    if (*eval_cmd) {
      run_evaluation(eval_args, registry, false, {});
      return kExitOk;
    }

    if (*zs_cmd) {
      run_evaluation(eval_args, registry, true, trained_languages);
      return kExitOk;
    }

    if (*transfer_cmd) {
      auto figure = figure_from_string(tr_figure);
      if (!figure) throw std::invalid_argument("bad figure " + tr_figure);

      std::map<std::string, std::vector<LabeledExample>> test_data;
      for (const auto& lang : tr_languages) {
        test_data[lang] =
            load_task_data(tr_corpus, *figure, lang, Split::test);
      }

      std::map<std::string, Backend*> rows;
      std::vector<std::unique_ptr<Backend>> owned;
      if (!tr_backend.empty()) {
        // Mock rows: one backend per row, derived from the row's test data;
        // mocks are language-agnostic so "overall" reuses the first.
        for (const auto& lang : tr_languages) {
          GoldMap gold;
          for (const auto& [l, data] : test_data) {
            const PromptTemplate& tmpl =
                resolve_template(registry, {*figure, l, tr_template});
            GoldMap part = build_gold_map(
                build_instances(data, tmpl, *figure), tmpl, *figure);
            gold.insert(part.begin(), part.end());
          }
          if (tr_backend == "oracle") {
            owned.push_back(std::make_unique<OracleBackend>(std::move(gold)));
          } else if (tr_backend == "anti-oracle") {
            owned.push_back(
                std::make_unique<AntiOracleBackend>(std::move(gold)));
          } else if (tr_backend == "constant") {
            owned.push_back(std::make_unique<ConstantBackend>("Literal"));
          } else {
            throw std::invalid_argument(
                "transfer --backend supports oracle/anti-oracle/constant");
          }
          rows[lang] = owned.back().get();
        }
        GoldMap gold;
        for (const auto& [l, data] : test_data) {
          const PromptTemplate& tmpl =
              resolve_template(registry, {*figure, l, tr_template});
          GoldMap part = build_gold_map(build_instances(data, tmpl, *figure),
                                        tmpl, *figure);
          gold.insert(part.begin(), part.end());
        }
        if (tr_backend == "oracle") {
          owned.push_back(std::make_unique<OracleBackend>(std::move(gold)));
        } else if (tr_backend == "anti-oracle") {
          owned.push_back(
              std::make_unique<AntiOracleBackend>(std::move(gold)));
        } else {
          owned.push_back(std::make_unique<ConstantBackend>("Literal"));
        }
        rows["overall"] = owned.back().get();
      } else {
        for (const auto& pair : tr_rows) {
          auto eq = pair.find('=');
          if (eq == std::string::npos) {
            throw std::invalid_argument("--row must be lang=run_dir");
          }
          const std::string lang = pair.substr(0, eq);
          const fs::path dir = pair.substr(eq + 1);
          auto meta = CheckpointMeta::load(dir / "checkpoint.meta.json");
          auto backend = make_eval_backend(meta.backend_kind, {}, "Literal",
                                           dir / "checkpoint.best", registry,
                                           {*figure, lang, tr_template},
                                           test_data.at(lang));
          owned.push_back(std::move(backend));
          rows[lang] = owned.back().get();
        }
        if (!tr_overall.empty()) {
          const fs::path dir = tr_overall;
          auto meta = CheckpointMeta::load(dir / "checkpoint.meta.json");
          auto backend = make_eval_backend(
              meta.backend_kind, {}, "Literal", dir / "checkpoint.best",
              registry, {*figure, tr_languages[0], tr_template},
              test_data.at(tr_languages[0]));
          owned.push_back(std::move(backend));
          rows["overall"] = owned.back().get();
        }
      }

      TransferMatrix matrix =
          transfer_matrix(rows, *figure, test_data, registry, tr_template);
      fs::create_directories(tr_out);
      write_file(fs::path(tr_out) / "transfer.json", transfer_to_json(matrix));
      write_file(fs::path(tr_out) / "transfer.txt", transfer_to_table(matrix));
      write_file(fs::path(tr_out) / "transfer.svg", transfer_to_svg(matrix));
      std::cout << transfer_to_table(matrix);
      return kExitOk;
    }

    if (*diff_cmd) {
      auto ref = load_reports(diff_ref);
      auto other = load_reports(diff_other);
      PromptDiffReport report = prompt_diff(ref, other);
      fs::create_directories(diff_out);
      write_file(fs::path(diff_out) / "prompt_diff.json",
                 prompt_diff_to_json(report));
      write_file(fs::path(diff_out) / "prompt_diff.svg",
                 prompt_diff_to_svg(report));
      std::cout << prompt_diff_to_json(report) << '\n';
      return kExitOk;
    }

    if (*overlap_cmd) {
      auto train_set = read_records(ov_train);
      std::map<std::string, OverlapReport> by_key;
      for (const auto& pair : ov_probes) {
        auto eq = pair.find('=');
        if (eq == std::string::npos) {
          throw std::invalid_argument("--probe must be name=records.jsonl");
        }
        by_key[pair.substr(0, eq)] =
            expression_overlap(train_set, read_records(pair.substr(eq + 1)));
      }
      fs::create_directories(ov_out);
      write_file(fs::path(ov_out) / "overlap.json", overlap_to_json(by_key));
      write_file(fs::path(ov_out) / "overlap.txt", overlap_to_table(by_key));
      std::cout << overlap_to_table(by_key);
      return kExitOk;
    }

    if (*report_cmd) {
      fs::create_directories(rep_out);
      if (!rep_valid.empty() && !rep_test.empty()) {
        auto gaps = valid_test_gap(load_reports(rep_valid),
                                   load_reports(rep_test));
        write_file(fs::path(rep_out) / "valid_test_gap.json",
                   gap_to_json(gaps));
      }
      if (!rep_dir.empty()) {
        auto reports = load_reports(rep_dir);
        std::string table = report_to_table(reports);
        if (!rep_baseline.empty()) {
          std::ifstream in(rep_baseline);
          if (!in) throw std::runtime_error("cannot open " + rep_baseline);
          json baseline = json::parse(in);
          table += "\nimported baselines\n";
          for (const auto& [task, acc] : baseline.items()) {
            char buf[96];
            std::snprintf(buf, sizeof(buf), "%-26s %.2f\n", task.c_str(),
                          acc.get<double>());
            table += buf;
          }
        }
        write_file(fs::path(rep_out) / "summary.txt", table);
        std::cout << table;
      }
      return kExitOk;
    }
  } catch (const BackendError& e) {
    std::cerr << "backend abort: " << e.what() << '\n';
    return kExitBackendAbort;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const std::exception& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitDataError;
  }
  return kExitOk;
}
