#include "figdet/types.hpp"

#include <algorithm>
#include <cctype>

namespace figdet {

std::string to_string(Figure f) {
  switch (f) {
    case Figure::hyperbole: return "hyperbole";
    case Figure::idiom: return "idiom";
    case Figure::metaphor: return "metaphor";
  }
  throw std::logic_error("bad Figure");
}

std::string to_string(Label l) {
  return l == Label::literal ? "literal" : "figurative";
}

std::string to_string(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::valid: return "valid";
    case Split::test: return "test";
  }
  throw std::logic_error("bad Split");
}

std::optional<Figure> figure_from_string(std::string_view s) {
  if (s == "hyperbole") return Figure::hyperbole;
  if (s == "idiom") return Figure::idiom;
  if (s == "metaphor") return Figure::metaphor;
  return std::nullopt;
}

std::optional<Label> label_from_string(std::string_view s) {
  if (s == "literal") return Label::literal;
  if (s == "figurative") return Label::figurative;
  return std::nullopt;
}

std::optional<Split> split_from_string(std::string_view s) {
  if (s == "train") return Split::train;
  if (s == "valid") return Split::valid;
  if (s == "test") return Split::test;
  return std::nullopt;
}

bool is_known_language(std::string_view code) {
  return std::find(kLanguages.begin(), kLanguages.end(), code) !=
         kLanguages.end();
}

const std::vector<TaskKey>& known_tasks() {
  static const std::vector<TaskKey> tasks = {
      {Figure::hyperbole, "en"}, {Figure::hyperbole, "zh"},
      {Figure::idiom, "en"},     {Figure::idiom, "de"},
      {Figure::idiom, "es"},     {Figure::idiom, "it"},
      {Figure::metaphor, "en"},  {Figure::metaphor, "es"},
      {Figure::metaphor, "fa"},  {Figure::metaphor, "ru"},
  };
  return tasks;
}

bool is_known_task(Figure figure, std::string_view language) {
  const auto& tasks = known_tasks();
  return std::any_of(tasks.begin(), tasks.end(), [&](const TaskKey& t) {
    return t.figure == figure && t.language == language;
  });
}

std::string normalize_whitespace(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool in_space = true;  // leading whitespace is dropped
  for (unsigned char c : text) {
    if (std::isspace(c)) {
      if (!in_space) out.push_back(' ');
      in_space = true;
    } else {
      out.push_back(static_cast<char>(c));
      in_space = false;
    }
  }
  while (!out.empty() && out.back() == ' ') out.pop_back();
  return out;
}

std::string ascii_lower(std::string_view text) {
  std::string out(text);
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

std::optional<std::string> validate_example(const LabeledExample& ex) {
  if (normalize_whitespace(ex.text).empty()) return "empty text";
  if (!is_known_task(ex.figure, ex.language)) {
    return "unknown (figure, language) pair: " + to_string(ex.figure) + "/" +
           ex.language;
  }
  std::size_t prev_end = 0;
  bool first = true;
  for (const Span& sp : ex.spans) {
    if (sp.start >= sp.end) return "empty or inverted span";
    if (sp.end > ex.text.size()) return "span out of bounds";
    if (!first && sp.start < prev_end) return "spans overlap or unsorted";
    prev_end = sp.end;
    first = false;
  }
  return std::nullopt;
}

const StatsCell* CorpusStats::find(Figure f, std::string_view lang,
                                   Split s) const {
  auto it = cells.find({f, std::string(lang), s});
  return it == cells.end() ? nullptr : &it->second;
}

}  // namespace figdet
