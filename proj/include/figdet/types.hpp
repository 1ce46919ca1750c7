#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace figdet {

enum class Figure { hyperbole, idiom, metaphor };
enum class Label { literal, figurative };
enum class Split { train, valid, test };

// Language codes used across the corpus registry.
inline constexpr std::array<std::string_view, 7> kLanguages = {
    "en", "zh", "de", "es", "it", "fa", "ru"};

std::string to_string(Figure f);
std::string to_string(Label l);
std::string to_string(Split s);

std::optional<Figure> figure_from_string(std::string_view s);
std::optional<Label> label_from_string(std::string_view s);
std::optional<Split> split_from_string(std::string_view s);

bool is_known_language(std::string_view code);

// The (figure, language) combinations that carry data.
struct TaskKey {
  Figure figure;
  std::string language;

  auto operator<=>(const TaskKey&) const = default;
};

// Every valid (figure, language) pair in the corpus registry.
const std::vector<TaskKey>& known_tasks();
bool is_known_task(Figure figure, std::string_view language);

// Character span [start, end) into the example text.
struct Span {
  std::size_t start = 0;
  std::size_t end = 0;

  auto operator<=>(const Span&) const = default;
};

// One sentence with its task coordinates and binary label.
struct LabeledExample {
  std::string id;
  std::string text;
  std::string language;
  Figure figure = Figure::hyperbole;
  Label label = Label::literal;
  Split split = Split::train;
  std::vector<Span> spans;  // idiom expression spans, empty otherwise
  std::string source;       // dataset name + original record id

  bool operator==(const LabeledExample&) const = default;
};

// Collapses runs of whitespace to single spaces and strips both ends.
std::string normalize_whitespace(std::string_view text);

// Lowercases ASCII letters only; non-ASCII bytes pass through.
std::string ascii_lower(std::string_view text);

// Validates the LabeledExample invariants, returns a reason on failure.
std::optional<std::string> validate_example(const LabeledExample& ex);

struct StatsCell {
  std::size_t total = 0;
  std::size_t literal = 0;
  std::size_t figurative = 0;
};

// Per (figure, language, split) counts.
struct CorpusStats {
  std::map<std::tuple<Figure, std::string, Split>, StatsCell> cells;

  const StatsCell* find(Figure f, std::string_view lang, Split s) const;
};

}  // namespace figdet
