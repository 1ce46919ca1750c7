#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "figdet/types.hpp"

namespace figdet {

// Verbalizer strings for one figure of speech: the target texts the model
// is trained to emit for the two classes.
struct Verbalizer {
  std::string literal;
  std::string figurative;
};

// An instruction pattern with {TASK} and {TEXT} placeholders, plus the
// per-figure task names and verbalizers. Task names are stored fully
// resolved (articles included where the pattern calls for "a(n)").
struct PromptTemplate {
  std::string id;                 // "A", "B", "C", "D", ...
  std::string template_language;  // language the instruction is written in
  std::string pattern;
  std::map<Figure, std::string> task_names;
  std::map<Figure, Verbalizer> verbalizers;

  // Checks placeholder and verbalizer invariants; returns a reason on
  // failure.
  std::optional<std::string> validate() const;
};

// Substitutes the task name and input text into the pattern. The input
// text appears verbatim. Throws if the template has no entry for `figure`.
std::string render(const PromptTemplate& tmpl, Figure figure,
                   const std::string& text);

std::string verbalize(Label label, Figure figure, const PromptTemplate& tmpl);

// Result of mapping generated text back to a label. UNPARSED is a value,
// never an exception; scoring counts it as incorrect.
struct ParseResult {
  std::optional<Label> label;  // nullopt == UNPARSED
  bool unparsed() const { return !label.has_value(); }
};

ParseResult parse_prediction(const std::string& raw, Figure figure,
                             const PromptTemplate& tmpl);

// A rendered training/eval instance.
struct PromptInstance {
  std::string input_text;
  std::string target_text;
  std::string origin_id;
};

class TemplateRegistry {
 public:
  // Registry shipped with the framework: cross-lingual templates A, B, C
  // (English) and the D-family in-lingual translations of A.
  static TemplateRegistry builtin();

  // Loads templates from a JSON file (same schema as data/templates.json).
  static TemplateRegistry load(const std::filesystem::path& path);

  void add(PromptTemplate tmpl);  // throws if invariants fail

  // Lookup by id; when several languages share an id (the D-family), the
  // language must be given.
  const PromptTemplate& get(const std::string& id,
                            const std::string& language = "en") const;
  const PromptTemplate* find(const std::string& id,
                             const std::string& language) const;

  const std::vector<PromptTemplate>& all() const { return templates_; }

  // Same schema load() reads; for exporting an editable registry file.
  std::string to_json() const;

 private:
  std::vector<PromptTemplate> templates_;
};

}  // namespace figdet
