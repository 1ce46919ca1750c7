#include "figdet/prompt.hpp"

#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace figdet {

using json = nlohmann::ordered_json;

namespace {

std::size_t count_occurrences(const std::string& haystack,
                              const std::string& needle) {
  std::size_t count = 0;
  for (std::size_t pos = haystack.find(needle); pos != std::string::npos;
       pos = haystack.find(needle, pos + needle.size())) {
    ++count;
  }
  return count;
}

std::string replace_once(std::string s, const std::string& placeholder,
                         const std::string& value) {
  auto pos = s.find(placeholder);
  s.replace(pos, placeholder.size(), value);
  return s;
}

// trim + ASCII casefold + strip terminal punctuation
std::string normalize_prediction(const std::string& raw) {
  std::string s = ascii_lower(normalize_whitespace(raw));
  auto is_terminal = [](char c) {
    return c == '.' || c == '!' || c == '?' || c == ',' || c == ';' ||
           c == ':';
  };
  while (!s.empty() && is_terminal(s.back())) s.pop_back();
  // fullwidth stop used in Chinese targets
  while (s.size() >= 3 && s.compare(s.size() - 3, 3, "\xe3\x80\x82") == 0) {
    s.erase(s.size() - 3);
  }
  return s;
}

}  // namespace

std::optional<std::string> PromptTemplate::validate() const {
  if (count_occurrences(pattern, "{TASK}") != 1) {
    return "pattern must contain {TASK} exactly once";
  }
  if (count_occurrences(pattern, "{TEXT}") != 1) {
    return "pattern must contain {TEXT} exactly once";
  }
  if (task_names.empty()) return "no task names";
  for (const auto& [figure, v] : verbalizers) {
    if (v.literal.empty() || v.figurative.empty()) {
      return "empty verbalizer string for " + to_string(figure);
    }
    if (v.literal == v.figurative) {
      return "verbalizer strings not distinct for " + to_string(figure);
    }
    // The option name embedded in the prompt must differ from the target
    // string the model has to emit, otherwise the figurative answer could
    // be copied straight out of the instruction.
    auto it = task_names.find(figure);
    if (it != task_names.end() && it->second == v.figurative) {
      return "task name equals figurative verbalizer for " +
             to_string(figure);
    }
  }
  return std::nullopt;
}

std::string render(const PromptTemplate& tmpl, Figure figure,
                   const std::string& text) {
  auto it = tmpl.task_names.find(figure);
  if (it == tmpl.task_names.end()) {
    throw std::invalid_argument("template " + tmpl.id + " (" +
                                tmpl.template_language +
                                ") has no task name for " + to_string(figure));
  }
  std::string s = replace_once(tmpl.pattern, "{TASK}", it->second);
  return replace_once(std::move(s), "{TEXT}", text);
}

std::string verbalize(Label label, Figure figure, const PromptTemplate& tmpl) {
  auto it = tmpl.verbalizers.find(figure);
  if (it == tmpl.verbalizers.end()) {
    throw std::invalid_argument("template " + tmpl.id +
                                " has no verbalizer for " + to_string(figure));
  }
  return label == Label::literal ? it->second.literal : it->second.figurative;
}

ParseResult parse_prediction(const std::string& raw, Figure figure,
                             const PromptTemplate& tmpl) {
  auto it = tmpl.verbalizers.find(figure);
  if (it == tmpl.verbalizers.end()) return {};

  const std::string norm = normalize_prediction(raw);
  if (norm.empty()) return {};
  const std::string lit = normalize_prediction(it->second.literal);
  const std::string fig = normalize_prediction(it->second.figurative);

  if (norm == lit) return {Label::literal};
  if (norm == fig) return {Label::figurative};

  // unique-prefix fallback
  auto prefix_of = [](const std::string& a, const std::string& b) {
    return a.size() < b.size() && b.compare(0, a.size(), a) == 0;
  };
  bool lit_match = prefix_of(norm, lit);
  bool fig_match = prefix_of(norm, fig);
  if (lit_match != fig_match) {
    return {lit_match ? Label::literal : Label::figurative};
  }
  return {};
}

namespace {

std::map<Figure, Verbalizer> english_verbalizers() {
  return {
      {Figure::hyperbole, {"Literal", "Hyperbolic"}},
      {Figure::idiom, {"Literal", "Idiomatic"}},
      {Figure::metaphor, {"Literal", "Metaphoric"}},
  };
}

PromptTemplate make(std::string id, std::string lang, std::string pattern,
                    std::map<Figure, std::string> tasks,
                    std::map<Figure, Verbalizer> verbs) {
  PromptTemplate t;
  t.id = std::move(id);
  t.template_language = std::move(lang);
  t.pattern = std::move(pattern);
  t.task_names = std::move(tasks);
  t.verbalizers = std::move(verbs);
  return t;
}

}  // namespace

TemplateRegistry TemplateRegistry::builtin() {
  TemplateRegistry reg;

  // Cross-lingual templates, instruction in English.
  reg.add(make("A", "en",
               "Which figure of speech does this text contain? (A) Literal. "
               "(B) {TASK}. | Text: {TEXT}",
               {{Figure::hyperbole, "Hyperbole"},
                {Figure::idiom, "Idiom"},
                {Figure::metaphor, "Metaphor"}},
               english_verbalizers()));
  // Articles are resolved per task name and stored, not computed at
  // render time.
  reg.add(make("B", "en", "Is there {TASK} in this text? | Text: {TEXT}",
               {{Figure::hyperbole, "a hyperbole"},
                {Figure::idiom, "an idiom"},
                {Figure::metaphor, "a metaphor"}},
               english_verbalizers()));
  reg.add(make("C", "en", "Does this text contain {TASK}? | Text: {TEXT}",
               {{Figure::hyperbole, "a hyperbole"},
                {Figure::idiom, "an idiom"},
                {Figure::metaphor, "a metaphor"}},
               english_verbalizers()));

  // D-family: in-lingual translations of A, labels translated with the
  // instruction.
  reg.add(make("D", "it",
               "Quale figura retorica contiene questo testo? (A) Letterale. "
               "(B) {TASK}. | Testo: {TEXT}",
               {{Figure::hyperbole, "Iperbole"},
                {Figure::idiom, "Espressione idiomatica"},
                {Figure::metaphor, "Metafora"}},
               {{Figure::hyperbole, {"Letterale", "Iperbolico"}},
                {Figure::idiom, {"Letterale", "Idiomatico"}},
                {Figure::metaphor, {"Letterale", "Metaforico"}}}));
  reg.add(make("D", "de",
               "Welche Stilfigur enthält dieser Text? (A) Wörtlich. "
               "(B) {TASK}. | Text: {TEXT}",
               {{Figure::hyperbole, "Hyperbel"},
                {Figure::idiom, "Redewendung"},
                {Figure::metaphor, "Metapher"}},
               {{Figure::hyperbole, {"Wörtlich", "Hyperbolisch"}},
                {Figure::idiom, {"Wörtlich", "Idiomatisch"}},
                {Figure::metaphor, {"Wörtlich", "Metaphorisch"}}}));
  reg.add(make("D", "es",
               "¿Qué figura retórica contiene este texto? "
               "(A) Literal. (B) {TASK}. | Texto: {TEXT}",
               {{Figure::hyperbole, "Hipérbole"},
                {Figure::idiom, "Expresión idiomática"},
                {Figure::metaphor, "Metáfora"}},
               {{Figure::hyperbole, {"Literal", "Hiperbólico"}},
                {Figure::idiom, {"Literal", "Idiomático"}},
                {Figure::metaphor, {"Literal", "Metafórico"}}}));
  reg.add(make("D", "zh",
               "这段文本包含哪种修辞"
               "手法？(A) 字面。(B) {TASK}。 | "
               "文本: {TEXT}",
               {{Figure::hyperbole, "夸张"},
                {Figure::idiom, "习语"},
                {Figure::metaphor, "隐喻"}},
               {{Figure::hyperbole, {"字面的", "夸张的"}},
                {Figure::idiom, {"字面的", "习语的"}},
                {Figure::metaphor,
                 {"字面的", "隐喻的"}}}));
  reg.add(make("D", "fa",
               "این متن شامل "
               "کدام آرایه "
               "ادبی است؟ (A) "
               "تحت‌اللفظی. "
               "(B) {TASK}. | متن: {TEXT}",
               {{Figure::hyperbole, "اغراق"},
                {Figure::idiom, "اصطلاح"},
                {Figure::metaphor, "استعاره"}},
               {{Figure::hyperbole,
                 {"تحت‌اللفظی",
                  "اغراق‌آمیز"}},
                {Figure::idiom,
                 {"تحت‌اللفظی",
                  "اصطلاحی"}},
                {Figure::metaphor,
                 {"تحت‌اللفظی",
                  "استعاری"}}}));
  reg.add(make("D", "ru",
               "Какую фигур"
               "у речи содер"
               "жит этот тек"
               "ст? (A) Букваль"
               "ный. (B) {TASK}. | Текс"
               "т: {TEXT}",
               {{Figure::hyperbole,
                 "Гипербола"},
                {Figure::idiom, "Идиома"},
                {Figure::metaphor,
                 "Метафора"}},
               {{Figure::hyperbole,
                 {"Буквальный",
                  "Гиперболич"
                  "еский"}},
                {Figure::idiom,
                 {"Буквальный",
                  "Идиоматиче"
                  "ский"}},
                {Figure::metaphor,
                 {"Буквальный",
                  "Метафориче"
                  "ский"}}}));

  return reg;
}

TemplateRegistry TemplateRegistry::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  json doc = json::parse(in);
  TemplateRegistry reg;
  for (const auto& entry : doc.at("templates")) {
    PromptTemplate t;
    t.id = entry.at("id").get<std::string>();
    t.template_language = entry.at("language").get<std::string>();
    t.pattern = entry.at("pattern").get<std::string>();
    for (const auto& [name, task] : entry.at("tasks").items()) {
      auto figure = figure_from_string(name);
      if (!figure) throw std::runtime_error("unknown figure: " + name);
      t.task_names[*figure] = task.at("name").get<std::string>();
      t.verbalizers[*figure] = {task.at("literal").get<std::string>(),
                                task.at("figurative").get<std::string>()};
    }
    reg.add(std::move(t));
  }
  return reg;
}

std::string TemplateRegistry::to_json() const {
  json entries = json::array();
  for (const auto& t : templates_) {
    json tasks = json::object();
    for (const auto& [figure, name] : t.task_names) {
      const Verbalizer& v = t.verbalizers.at(figure);
      tasks[to_string(figure)] = {{"name", name},
                                  {"literal", v.literal},
                                  {"figurative", v.figurative}};
    }
    entries.push_back({{"id", t.id},
                       {"language", t.template_language},
                       {"pattern", t.pattern},
                       {"tasks", tasks}});
  }
  return json{{"templates", entries}}.dump(2);
}

void TemplateRegistry::add(PromptTemplate tmpl) {
  if (auto reason = tmpl.validate()) {
    throw std::invalid_argument("template " + tmpl.id + " (" +
                                tmpl.template_language + "): " + *reason);
  }
  if (find(tmpl.id, tmpl.template_language)) {
    throw std::invalid_argument("duplicate template " + tmpl.id + " (" +
                                tmpl.template_language + ")");
  }
  templates_.push_back(std::move(tmpl));
}

const PromptTemplate* TemplateRegistry::find(
    const std::string& id, const std::string& language) const {
  for (const auto& t : templates_) {
    if (t.id == id && t.template_language == language) return &t;
  }
  return nullptr;
}

const PromptTemplate& TemplateRegistry::get(const std::string& id,
                                            const std::string& language) const {
  if (const PromptTemplate* t = find(id, language)) return *t;
  // Single-language ids (A, B, C) resolve regardless of the language hint.
  const PromptTemplate* only = nullptr;
  for (const auto& t : templates_) {
    if (t.id != id) continue;
    if (only) {
      throw std::out_of_range("template id " + id +
                              " is ambiguous; language required");
    }
    only = &t;
  }
  if (!only) throw std::out_of_range("no template with id " + id);
  return *only;
}

}  // namespace figdet
