#include "figdet/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <nlohmann/json.hpp>

namespace figdet {

using json = nlohmann::ordered_json;

EvalReport score(const std::vector<Label>& gold,
                 const std::vector<std::optional<Label>>& parsed) {
  if (gold.size() != parsed.size()) {
    throw std::invalid_argument("score: gold/parsed length mismatch");
  }
  if (gold.empty()) throw std::invalid_argument("score: empty input");

  EvalReport report;
  report.n = gold.size();
  std::size_t correct = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    const std::size_t g = gold[i] == Label::literal ? 0 : 1;
    if (parsed[i] && *parsed[i] == gold[i]) {
      ++correct;
      report.confusion[g][g] += 1;
    } else {
      // wrong or UNPARSED: the incorrect cell of the gold row
      report.confusion[g][1 - g] += 1;
      if (!parsed[i]) ++report.unparsed_count;
    }
  }
  report.accuracy =
      static_cast<double>(correct) / static_cast<double>(report.n);
  return report;
}

EvalReport evaluate(Backend& backend, const std::vector<LabeledExample>& data,
                    const TaskSpec& task, Split split,
                    const TemplateRegistry& registry,
                    const CheckpointMeta& meta, bool use_template) {
  if (data.empty()) {
    throw std::invalid_argument("evaluate: no data for " + task.key() + " " +
                                to_string(split));
  }
  const PromptTemplate& tmpl = resolve_template(registry, task);
  std::vector<PromptInstance> instances =
      build_instances(data, tmpl, task.figure, use_template);

  std::vector<std::string> inputs;
  inputs.reserve(instances.size());
  for (const auto& inst : instances) inputs.push_back(inst.input_text);
  std::vector<std::string> raw = backend.generate(inputs);

  std::vector<Label> gold;
  std::vector<std::optional<Label>> parsed;
  gold.reserve(data.size());
  parsed.reserve(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    gold.push_back(data[i].label);
    parsed.push_back(parse_prediction(raw[i], task.figure, tmpl).label);
  }

  EvalReport report = score(gold, parsed);
  report.task = task;
  report.split = split;
  report.template_id = tmpl.id;
  report.checkpoint = meta;
  for (std::size_t i = 0; i < data.size(); ++i) {
    report.per_example.push_back({data[i].id, gold[i], raw[i], parsed[i]});
  }
  return report;
}

std::vector<EvalReport> zero_shot_protocol(
    Backend& backend, const std::vector<std::string>& trained_languages,
    const std::vector<std::pair<TaskSpec, std::vector<LabeledExample>>>& tasks,
    Split split, const TemplateRegistry& registry, const CheckpointMeta& meta,
    std::vector<std::string>* warnings) {
  std::vector<EvalReport> reports;
  for (const auto& [task, data] : tasks) {
    EvalReport report = evaluate(backend, data, task, split, registry, meta);
    const bool in_language =
        std::find(trained_languages.begin(), trained_languages.end(),
                  task.language) != trained_languages.end();
    report.zero_shot = !in_language;
    if (in_language && warnings) {
      warnings->push_back("task " + task.key() +
                          " matches a training language; flagged in-language");
    }
    reports.push_back(std::move(report));
  }
  return reports;
}

TransferMatrix transfer_matrix(
    const std::map<std::string, Backend*>& checkpoints_by_row, Figure figure,
    const std::map<std::string, std::vector<LabeledExample>>& test_by_language,
    const TemplateRegistry& registry, const std::string& template_id) {
  std::vector<std::string> missing;
  for (const auto& [row, backend] : checkpoints_by_row) {
    if (backend == nullptr) missing.push_back(row);
  }
  if (!missing.empty()) {
    std::string names;
    for (const auto& m : missing) names += (names.empty() ? "" : ", ") + m;
    throw std::invalid_argument("transfer_matrix: missing checkpoints: " +
                                names);
  }

  TransferMatrix matrix;
  matrix.figure = figure;
  for (const auto& [lang, _] : test_by_language) matrix.cols.push_back(lang);
  // language rows first, "overall" last
  for (const auto& [row, _] : checkpoints_by_row) {
    if (row != "overall") matrix.rows.push_back(row);
  }
  if (checkpoints_by_row.count("overall")) matrix.rows.push_back("overall");

  for (const auto& row : matrix.rows) {
    Backend* backend = checkpoints_by_row.at(row);
    std::vector<double> cells;
    for (const auto& col : matrix.cols) {
      TaskSpec task{figure, col, template_id};
      EvalReport report = evaluate(*backend, test_by_language.at(col), task,
                                   Split::test, registry);
      cells.push_back(report.accuracy);
    }
    matrix.cells.push_back(std::move(cells));
  }
  return matrix;
}

std::vector<CrossFigurativeRow> cross_figurative_compare(
    const std::vector<EvalReport>& single_reports,
    const std::vector<EvalReport>& multitask_reports,
    const std::string& language) {
  auto collect = [&](const std::vector<EvalReport>& reports) {
    std::map<Figure, double> by_figure;
    for (const auto& r : reports) {
      if (r.task.language == language) by_figure[r.task.figure] = r.accuracy;
    }
    return by_figure;
  };
  auto single = collect(single_reports);
  auto multi = collect(multitask_reports);
  if (single.size() != multi.size()) {
    throw std::invalid_argument(
        "cross_figurative_compare: report sets cover different cells");
  }
  std::vector<CrossFigurativeRow> rows;
  for (const auto& [figure, acc] : single) {
    auto it = multi.find(figure);
    if (it == multi.end()) {
      throw std::invalid_argument(
          "cross_figurative_compare: missing multitask cell for " +
          to_string(figure));
    }
    rows.push_back({figure, acc, it->second, it->second - acc});
  }
  return rows;
}

PromptDiffReport prompt_diff(const std::vector<EvalReport>& reference,
                             const std::vector<EvalReport>& other) {
  auto task_of = [](const EvalReport& r) {
    return to_string(r.task.figure) + "/" + r.task.language;
  };
  std::map<std::string, double> ref_acc, other_acc;
  for (const auto& r : reference) ref_acc[task_of(r)] = r.accuracy;
  for (const auto& r : other) other_acc[task_of(r)] = r.accuracy;
  if (ref_acc.size() != other_acc.size()) {
    throw std::invalid_argument("prompt_diff: task coverage mismatch");
  }
  PromptDiffReport report;
  if (!reference.empty()) report.reference_template = reference[0].template_id;
  if (!other.empty()) report.other_template = other[0].template_id;
  for (const auto& [task, acc] : ref_acc) {
    auto it = other_acc.find(task);
    if (it == other_acc.end()) {
      throw std::invalid_argument("prompt_diff: missing task " + task);
    }
    report.per_task[task] = acc - it->second;
  }
  return report;
}

std::vector<GapRow> valid_test_gap(const std::vector<EvalReport>& valid,
                                   const std::vector<EvalReport>& test) {
  auto task_of = [](const EvalReport& r) {
    return to_string(r.task.figure) + "/" + r.task.language;
  };
  std::map<std::string, double> valid_acc, test_acc;
  for (const auto& r : valid) valid_acc[task_of(r)] = r.accuracy;
  for (const auto& r : test) test_acc[task_of(r)] = r.accuracy;
  std::vector<GapRow> rows;
  for (const auto& [task, acc] : valid_acc) {
    auto it = test_acc.find(task);
    if (it == test_acc.end()) {
      throw std::invalid_argument("valid_test_gap: unpaired task " + task);
    }
    rows.push_back({task, acc, it->second, acc - it->second});
  }
  if (test_acc.size() != valid_acc.size()) {
    throw std::invalid_argument("valid_test_gap: unpaired test report");
  }
  return rows;
}

// ---- emitters ----

std::array<std::array<double, 2>, 2> confusion_row_percent(
    const Confusion& confusion) {
  std::array<std::array<double, 2>, 2> out{};
  for (int g = 0; g < 2; ++g) {
    const double total =
        static_cast<double>(confusion[g][0] + confusion[g][1]);
    for (int p = 0; p < 2; ++p) {
      out[g][p] = total > 0.0 ? 100.0 * confusion[g][p] / total : 0.0;
    }
  }
  return out;
}

std::string report_to_json(const EvalReport& report, bool include_per_example) {
  json j;
  j["task"] = {{"figure", to_string(report.task.figure)},
               {"language", report.task.language},
               {"template_id", report.template_id}};
  j["split"] = to_string(report.split);
  j["n"] = report.n;
  j["accuracy"] = report.accuracy;
  j["accuracy_pct"] = std::round(report.accuracy * 10000.0) / 100.0;
  j["confusion"] = {{report.confusion[0][0], report.confusion[0][1]},
                    {report.confusion[1][0], report.confusion[1][1]}};
  auto pct = confusion_row_percent(report.confusion);
  j["confusion_row_pct"] = {{pct[0][0], pct[0][1]}, {pct[1][0], pct[1][1]}};
  j["unparsed_count"] = report.unparsed_count;
  j["zero_shot"] = report.zero_shot;
  j["checkpoint"] = {{"backend_kind", report.checkpoint.backend_kind},
                     {"step", report.checkpoint.step},
                     {"best_score", report.checkpoint.best_score},
                     {"config_hash", report.checkpoint.config_hash}};
  if (include_per_example) {
    json items = json::array();
    for (const auto& e : report.per_example) {
      json item;
      item["id"] = e.id;
      item["gold"] = to_string(e.gold);
      item["predicted_raw"] = e.predicted_raw;
      if (e.parsed) {
        item["parsed"] = to_string(*e.parsed);
      } else {
        item["parsed"] = "UNPARSED";
      }
      items.push_back(std::move(item));
    }
    j["per_example"] = items;
  }
  return j.dump(2);
}

std::string report_to_table(const std::vector<EvalReport>& reports) {
  std::ostringstream out;
  out << "task                       split  n        acc%    unparsed  "
         "zero_shot\n";
  for (const auto& r : reports) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%-26s %-6s %-8zu %-7.2f %-9zu %s\n",
                  r.task.key().c_str(), to_string(r.split).c_str(), r.n,
                  100.0 * r.accuracy, r.unparsed_count,
                  r.zero_shot ? "yes" : "no");
    out << buf;
  }
  return out.str();
}

std::string transfer_to_json(const TransferMatrix& matrix) {
  json j;
  j["figure"] = to_string(matrix.figure);
  j["rows"] = matrix.rows;
  j["cols"] = matrix.cols;
  j["cells"] = matrix.cells;
  return j.dump(2);
}

std::string transfer_to_table(const TransferMatrix& matrix) {
  std::ostringstream out;
  out << "train\\test";
  for (const auto& c : matrix.cols) out << '\t' << c;
  out << '\n';
  for (std::size_t r = 0; r < matrix.rows.size(); ++r) {
    out << matrix.rows[r];
    for (double cell : matrix.cells[r]) {
      char buf[16];
      std::snprintf(buf, sizeof(buf), "%.2f", 100.0 * cell);
      out << '\t' << buf;
    }
    out << '\n';
  }
  return out.str();
}

namespace {

// Blue-to-red ramp over [0, 1].
std::string heat_color(double v) {
  v = std::clamp(v, 0.0, 1.0);
  const int r = static_cast<int>(255 * v);
  const int b = static_cast<int>(255 * (1.0 - v));
  char buf[16];
  std::snprintf(buf, sizeof(buf), "#%02x50%02x", r, b);
  return buf;
}

}  // namespace

std::string transfer_to_svg(const TransferMatrix& matrix) {
  const int cell = 64, left = 90, top = 40;
  const int width = left + cell * static_cast<int>(matrix.cols.size()) + 20;
  const int height = top + cell * static_cast<int>(matrix.rows.size()) + 20;
  std::ostringstream svg;
  svg << "<svg xmlns='http://www.w3.org/2000/svg' width='" << width
      << "' height='" << height << "' font-family='monospace' font-size='12'>\n";
  svg << "<text x='8' y='20'>" << to_string(matrix.figure)
      << " transfer (train rows, test cols)</text>\n";
  for (std::size_t c = 0; c < matrix.cols.size(); ++c) {
    svg << "<text x='" << left + cell * c + cell / 3 << "' y='" << top - 6
        << "'>" << matrix.cols[c] << "</text>\n";
  }
  for (std::size_t r = 0; r < matrix.rows.size(); ++r) {
    svg << "<text x='8' y='" << top + cell * r + cell / 2 << "'>"
        << matrix.rows[r] << "</text>\n";
    for (std::size_t c = 0; c < matrix.cols.size(); ++c) {
      const double v = matrix.cells[r][c];
      svg << "<rect x='" << left + cell * c << "' y='" << top + cell * r
          << "' width='" << cell << "' height='" << cell << "' fill='"
          << heat_color(v) << "'/>\n";
      char buf[16];
      std::snprintf(buf, sizeof(buf), "%.1f", 100.0 * v);
      svg << "<text x='" << left + cell * c + 8 << "' y='"
          << top + cell * r + cell / 2 + 4 << "' fill='white'>" << buf
          << "</text>\n";
    }
  }
  svg << "</svg>\n";
  return svg.str();
}

std::string prompt_diff_to_json(const PromptDiffReport& report) {
  json j;
  j["reference_template"] = report.reference_template;
  j["other_template"] = report.other_template;
  j["per_task"] = report.per_task;
  return j.dump(2);
}

std::string prompt_diff_to_svg(const PromptDiffReport& report) {
  const int bar_h = 22, left = 180, mid = 160;
  const int height = 50 + bar_h * static_cast<int>(report.per_task.size());
  std::ostringstream svg;
  svg << "<svg xmlns='http://www.w3.org/2000/svg' width='" << left + 2 * mid + 40
      << "' height='" << height << "' font-family='monospace' font-size='12'>\n";
  svg << "<text x='8' y='20'>accuracy(" << report.reference_template
      << ") - accuracy(" << report.other_template << ")</text>\n";
  int y = 40;
  for (const auto& [task, diff] : report.per_task) {
    const double w = std::clamp(diff, -1.0, 1.0) * mid;
    svg << "<text x='8' y='" << y + 14 << "'>" << task << "</text>\n";
    const int x0 = left + mid;
    if (w >= 0) {
      svg << "<rect x='" << x0 << "' y='" << y << "' width='" << w
          << "' height='" << bar_h - 6 << "' fill='#c04030'/>\n";
    } else {
      svg << "<rect x='" << x0 + w << "' y='" << y << "' width='" << -w
          << "' height='" << bar_h - 6 << "' fill='#3040c0'/>\n";
    }
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%+.2f", 100.0 * diff);
    svg << "<text x='" << left + 2 * mid + 6 << "' y='" << y + 14 << "'>"
        << buf << "</text>\n";
    y += bar_h;
  }
  svg << "</svg>\n";
  return svg.str();
}

std::string cross_figurative_to_json(
    const std::vector<CrossFigurativeRow>& rows) {
  json items = json::array();
  for (const auto& r : rows) {
    items.push_back({{"figure", to_string(r.figure)},
                     {"single", r.single_accuracy},
                     {"multitask", r.multitask_accuracy},
                     {"delta", r.delta}});
  }
  return json{{"rows", items}}.dump(2);
}

std::string gap_to_json(const std::vector<GapRow>& rows) {
  json items = json::array();
  for (const auto& r : rows) {
    items.push_back({{"task", r.task_key},
                     {"valid", r.valid_accuracy},
                     {"test", r.test_accuracy},
                     {"gap", r.gap}});
  }
  return json{{"rows", items}}.dump(2);
}

}  // namespace figdet
