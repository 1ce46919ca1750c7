#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "figdet/backend.hpp"
#include "figdet/trainer.hpp"

namespace figdet {

// Gold x predicted counts over {literal, figurative}. An UNPARSED
// prediction lands in the incorrect cell of its gold row and is tallied
// separately in unparsed_count.
using Confusion = std::array<std::array<std::size_t, 2>, 2>;

struct PerExampleRecord {
  std::string id;
  Label gold = Label::literal;
  std::string predicted_raw;
  std::optional<Label> parsed;
};

struct EvalReport {
  TaskSpec task;
  Split split = Split::test;
  std::size_t n = 0;
  double accuracy = 0.0;
  Confusion confusion = {};
  std::size_t unparsed_count = 0;
  std::vector<PerExampleRecord> per_example;
  bool zero_shot = false;
  std::string template_id;
  CheckpointMeta checkpoint;
};

// Core accuracy/confusion computation. `parsed[i]` of nullopt means
// UNPARSED. Throws on length mismatch or empty input.
EvalReport score(const std::vector<Label>& gold,
                 const std::vector<std::optional<Label>>& parsed);

// Renders prompts, generates, parses, scores. The per-example dump is
// always kept.
EvalReport evaluate(Backend& backend, const std::vector<LabeledExample>& data,
                    const TaskSpec& task, Split split,
                    const TemplateRegistry& registry,
                    const CheckpointMeta& meta = {}, bool use_template = true);

// Reports for tasks in languages the checkpoint did not train on. Tasks
// matching a training language are evaluated anyway but flagged
// in-language (zero_shot=false) with a warning collected in `warnings`.
std::vector<EvalReport> zero_shot_protocol(
    Backend& backend, const std::vector<std::string>& trained_languages,
    const std::vector<std::pair<TaskSpec, std::vector<LabeledExample>>>& tasks,
    Split split, const TemplateRegistry& registry,
    const CheckpointMeta& meta, std::vector<std::string>* warnings = nullptr);

// Train-language x test-language accuracy grid for one figure of speech.
// Row "overall" is the model trained on all languages.
struct TransferMatrix {
  Figure figure = Figure::hyperbole;
  std::vector<std::string> rows;  // training languages (+ "overall")
  std::vector<std::string> cols;  // test languages
  std::vector<std::vector<double>> cells;
};

TransferMatrix transfer_matrix(
    const std::map<std::string, Backend*>& checkpoints_by_row, Figure figure,
    const std::map<std::string, std::vector<LabeledExample>>& test_by_language,
    const TemplateRegistry& registry, const std::string& template_id = "A");

// Side-by-side single-figure vs multitask accuracies with deltas.
struct CrossFigurativeRow {
  Figure figure = Figure::hyperbole;
  double single_accuracy = 0.0;
  double multitask_accuracy = 0.0;
  double delta = 0.0;  // multitask - single
};

std::vector<CrossFigurativeRow> cross_figurative_compare(
    const std::vector<EvalReport>& single_reports,
    const std::vector<EvalReport>& multitask_reports,
    const std::string& language);

// Signed per-task accuracy differences, reference minus other.
struct PromptDiffReport {
  std::string reference_template;
  std::string other_template;
  std::map<std::string, double> per_task;  // task key -> diff
};

PromptDiffReport prompt_diff(const std::vector<EvalReport>& reference,
                             const std::vector<EvalReport>& other);

// Per-task (valid accuracy, test accuracy, gap).
struct GapRow {
  std::string task_key;
  double valid_accuracy = 0.0;
  double test_accuracy = 0.0;
  double gap = 0.0;  // valid - test
};

std::vector<GapRow> valid_test_gap(const std::vector<EvalReport>& valid,
                                   const std::vector<EvalReport>& test);

// ---- emitters ----

std::string report_to_json(const EvalReport& report,
                           bool include_per_example = true);
std::string report_to_table(const std::vector<EvalReport>& reports);
// Row-normalized confusion percentages, [gold][pred].
std::array<std::array<double, 2>, 2> confusion_row_percent(
    const Confusion& confusion);

std::string transfer_to_json(const TransferMatrix& matrix);
std::string transfer_to_table(const TransferMatrix& matrix);
std::string transfer_to_svg(const TransferMatrix& matrix);

std::string prompt_diff_to_json(const PromptDiffReport& report);
std::string prompt_diff_to_svg(const PromptDiffReport& report);

std::string cross_figurative_to_json(
    const std::vector<CrossFigurativeRow>& rows);
std::string gap_to_json(const std::vector<GapRow>& rows);

}  // namespace figdet
