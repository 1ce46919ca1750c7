#include "figdet/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "figdet/rng.hpp"

namespace figdet {

using json = nlohmann::ordered_json;

namespace {

std::optional<Label> parse_indicator(std::string_view raw) {
  std::string s = ascii_lower(normalize_whitespace(raw));
  if (s == "0" || s == "literal" || s == "non-hyperbolic" || s == "no") {
    return Label::literal;
  }
  if (s == "1" || s == "hyperbolic" || s == "figurative" || s == "hyperbole" ||
      s == "yes") {
    return Label::figurative;
  }
  return std::nullopt;
}

LabeledExample make_example(std::string id, std::string text,
                            const std::string& language, Figure figure,
                            Label label, Split split, std::string source) {
  LabeledExample ex;
  ex.id = std::move(id);
  ex.text = normalize_whitespace(text);
  ex.language = language;
  ex.figure = figure;
  ex.label = label;
  ex.split = split;
  ex.source = std::move(source);
  return ex;
}

void accept_or_reject(IngestResult& out, LabeledExample ex,
                      const std::string& source,
                      const std::string& record_id) {
  if (auto reason = validate_example(ex)) {
    out.rejected.push_back({source, record_id, *reason});
  } else {
    out.examples.push_back(std::move(ex));
  }
}

}  // namespace

IngestResult ingest_hyperbole(const std::vector<HyperboleRow>& rows,
                              const std::string& language, Split split,
                              const std::string& source) {
  IngestResult out;
  for (const HyperboleRow& row : rows) {
    if (normalize_whitespace(row.text).empty()) {
      out.rejected.push_back({source, row.record_id, "missing text"});
      continue;
    }
    if (row.pair_text) {
      // Paired row: one hyperbolic sentence plus its literal paraphrase.
      if (normalize_whitespace(*row.pair_text).empty()) {
        out.rejected.push_back({source, row.record_id, "missing pair text"});
        continue;
      }
      accept_or_reject(out,
                       make_example(row.record_id + ".fig", row.text, language,
                                    Figure::hyperbole, Label::figurative,
                                    split, source + ":" + row.record_id),
                       source, row.record_id);
      accept_or_reject(out,
                       make_example(row.record_id + ".lit", *row.pair_text,
                                    language, Figure::hyperbole,
                                    Label::literal, split,
                                    source + ":" + row.record_id),
                       source, row.record_id);
      continue;
    }
    auto label = parse_indicator(row.indicator);
    if (!label) {
      out.rejected.push_back(
          {source, row.record_id, "unrecognized label indicator '" +
                                      row.indicator + "'"});
      continue;
    }
    accept_or_reject(out,
                     make_example(row.record_id, row.text, language,
                                  Figure::hyperbole, *label, split,
                                  source + ":" + row.record_id),
                     source, row.record_id);
  }
  return out;
}

IngestResult ingest_idiom_word_level(const std::vector<TaggedSentence>& rows,
                                     const std::string& language, Split split,
                                     const std::string& source) {
  IngestResult out;
  for (const TaggedSentence& sent : rows) {
    if (sent.tokens.empty() || sent.tokens.size() != sent.tags.size()) {
      out.rejected.push_back(
          {source, sent.record_id, "token/tag length mismatch"});
      continue;
    }
    // Join tokens with single spaces and track per-token char offsets.
    std::string text;
    std::vector<std::size_t> starts(sent.tokens.size());
    std::vector<std::size_t> ends(sent.tokens.size());
    for (std::size_t i = 0; i < sent.tokens.size(); ++i) {
      if (i > 0) text.push_back(' ');
      starts[i] = text.size();
      text += normalize_whitespace(sent.tokens[i]);
      ends[i] = text.size();
    }

    std::vector<Span> spans;
    bool bad = false;
    std::optional<std::size_t> open;  // index of current span in `spans`
    for (std::size_t i = 0; i < sent.tags.size() && !bad; ++i) {
      const std::string& tag = sent.tags[i];
      if (tag == "O") {
        open.reset();
      } else if (tag.starts_with("B-")) {
        spans.push_back({starts[i], ends[i]});
        open = spans.size() - 1;
      } else if (tag.starts_with("I-")) {
        if (!open) {
          bad = true;  // inside-tag with no span opening
        } else {
          spans[*open].end = ends[i];
        }
      } else {
        bad = true;
      }
    }
    if (bad) {
      out.rejected.push_back(
          {source, sent.record_id, "inconsistent tag sequence"});
      continue;
    }

    LabeledExample ex = make_example(
        sent.record_id, text, language, Figure::idiom,
        spans.empty() ? Label::literal : Label::figurative, split,
        source + ":" + sent.record_id);
    ex.spans = std::move(spans);
    accept_or_reject(out, std::move(ex), source, sent.record_id);
  }
  return out;
}

IngestResult ingest_metaphor_lcc(const std::vector<MetaphorRow>& rows,
                                 const std::string& language, Split split,
                                 const std::string& source,
                                 const BinarizationPolicy& policy) {
  IngestResult out;
  for (const MetaphorRow& row : rows) {
    if (row.score < 0 || row.score > 3) {
      out.rejected.push_back({source, row.record_id,
                              "score outside {0,1,2,3}: " +
                                  std::to_string(row.score)});
      continue;
    }
    std::optional<Label> label;
    if (row.score == 0) {
      label = Label::literal;
    } else if (row.score >= policy.threshold) {
      label = Label::figurative;
    }
    if (!label) continue;  // intermediate score, dropped by policy
    accept_or_reject(out,
                     make_example(row.record_id, row.text, language,
                                  Figure::metaphor, *label, split,
                                  source + ":" + row.record_id),
                     source, row.record_id);
  }
  return out;
}

std::vector<LabeledExample> upsample(const std::vector<LabeledExample>& examples,
                                     std::size_t target, std::uint64_t seed) {
  if (examples.empty()) throw std::invalid_argument("upsample: empty input");
  if (target < examples.size()) {
    throw std::invalid_argument("upsample: target below input size");
  }
  std::vector<LabeledExample> out = examples;
  out.reserve(target);
  SplitMix64 rng(seed);
  while (out.size() < target) {
    out.push_back(examples[rng.next_below(examples.size())]);
  }
  shuffle(out, rng);
  return out;
}

CorpusStats compute_stats(const std::vector<LabeledExample>& examples) {
  CorpusStats stats;
  for (const LabeledExample& ex : examples) {
    StatsCell& cell = stats.cells[{ex.figure, ex.language, ex.split}];
    ++cell.total;
    (ex.label == Label::literal ? cell.literal : cell.figurative)++;
  }
  return stats;
}

OverlapReport expression_overlap(const std::vector<LabeledExample>& train,
                                 const std::vector<LabeledExample>& probe) {
  // Case-insensitive substring match on whitespace-normalized text.
  std::set<std::string> expressions;
  for (const LabeledExample& ex : train) {
    if (ex.label != Label::figurative) continue;
    for (const Span& sp : ex.spans) {
      std::string surface =
          normalize_whitespace(ex.text.substr(sp.start, sp.end - sp.start));
      if (!surface.empty()) expressions.insert(ascii_lower(surface));
    }
  }

  std::size_t n_lit = 0, n_fig = 0, hit_lit = 0, hit_fig = 0;
  for (const LabeledExample& ex : probe) {
    std::string text = ascii_lower(normalize_whitespace(ex.text));
    bool hit = std::any_of(expressions.begin(), expressions.end(),
                           [&](const std::string& e) {
                             return text.find(e) != std::string::npos;
                           });
    if (ex.label == Label::literal) {
      ++n_lit;
      if (hit) ++hit_lit;
    } else {
      ++n_fig;
      if (hit) ++hit_fig;
    }
  }

  OverlapReport report;
  report.train_expressions = expressions.size();
  if (n_lit > 0) report.literal_pct = 100.0 * hit_lit / n_lit;
  if (n_fig > 0) report.figurative_pct = 100.0 * hit_fig / n_fig;
  return report;
}

// ---- readers ----

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> cols;
  std::size_t pos = 0;
  while (true) {
    std::size_t tab = line.find('\t', pos);
    if (tab == std::string::npos) {
      cols.push_back(line.substr(pos));
      break;
    }
    cols.push_back(line.substr(pos, tab - pos));
    pos = tab + 1;
  }
  return cols;
}

std::ifstream open_or_throw(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return in;
}

bool skippable(const std::string& line) {
  return line.empty() || line[0] == '#';
}

}  // namespace

std::vector<HyperboleRow> read_hyperbole_tsv(
    const std::filesystem::path& path) {
  auto in = open_or_throw(path);
  std::vector<HyperboleRow> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (skippable(line)) continue;
    auto cols = split_tabs(line);
    HyperboleRow row;
    row.record_id = std::to_string(lineno);
    row.text = cols[0];
    if (cols.size() >= 2) row.indicator = cols[1];
    if (cols.size() >= 3 && !cols[2].empty()) row.pair_text = cols[2];
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<TaggedSentence> read_token_tag_file(
    const std::filesystem::path& path) {
  auto in = open_or_throw(path);
  std::vector<TaggedSentence> sentences;
  TaggedSentence cur;
  std::size_t sent_no = 1;
  std::string line;
  auto flush = [&] {
    if (!cur.tokens.empty()) {
      cur.record_id = std::to_string(sent_no++);
      sentences.push_back(std::move(cur));
      cur = {};
    }
  };
  while (std::getline(in, line)) {
    if (line.empty()) {
      flush();
      continue;
    }
    auto cols = split_tabs(line);
    cur.tokens.push_back(cols[0]);
    cur.tags.push_back(cols.size() >= 2 ? cols[1] : "");
  }
  flush();
  return sentences;
}

std::vector<MetaphorRow> read_metaphor_tsv(const std::filesystem::path& path) {
  auto in = open_or_throw(path);
  std::vector<MetaphorRow> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (skippable(line)) continue;
    auto cols = split_tabs(line);
    MetaphorRow row;
    row.record_id = std::to_string(lineno);
    row.text = cols[0];
    if (cols.size() >= 2) {
      try {
        row.score = std::stoi(cols[1]);
      } catch (const std::exception&) {
        row.score = -1;
      }
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

// ---- interchange format ----

std::string to_record_line(const LabeledExample& ex) {
  json j;
  j["id"] = ex.id;
  j["text"] = ex.text;
  j["language"] = ex.language;
  j["figure"] = to_string(ex.figure);
  j["label"] = to_string(ex.label);
  j["split"] = to_string(ex.split);
  if (!ex.spans.empty()) {
    json spans = json::array();
    for (const Span& sp : ex.spans) spans.push_back({sp.start, sp.end});
    j["spans"] = spans;
  }
  j["source"] = ex.source;
  return j.dump();
}

LabeledExample from_record_line(const std::string& line) {
  json j = json::parse(line);
  LabeledExample ex;
  ex.id = j.at("id").get<std::string>();
  ex.text = j.at("text").get<std::string>();
  ex.language = j.at("language").get<std::string>();
  auto figure = figure_from_string(j.at("figure").get<std::string>());
  auto label = label_from_string(j.at("label").get<std::string>());
  auto split = split_from_string(j.at("split").get<std::string>());
  if (!figure || !label || !split) {
    throw std::runtime_error("bad enum value in record: " + line);
  }
  ex.figure = *figure;
  ex.label = *label;
  ex.split = *split;
  if (j.contains("spans")) {
    for (const auto& sp : j["spans"]) {
      ex.spans.push_back({sp.at(0).get<std::size_t>(),
                          sp.at(1).get<std::size_t>()});
    }
  }
  ex.source = j.value("source", "");
  if (auto reason = validate_example(ex)) {
    throw std::runtime_error("invalid record (" + *reason + "): " + line);
  }
  return ex;
}

void write_records(const std::filesystem::path& path,
                   const std::vector<LabeledExample>& examples) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  for (const LabeledExample& ex : examples) out << to_record_line(ex) << '\n';
}

std::vector<LabeledExample> read_records(const std::filesystem::path& path) {
  auto in = open_or_throw(path);
  std::vector<LabeledExample> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    out.push_back(from_record_line(line));
  }
  return out;
}

void write_rejections(const std::filesystem::path& path,
                      const std::vector<RejectedRecord>& rejected) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  for (const RejectedRecord& r : rejected) {
    json j;
    j["source"] = r.source;
    j["record_id"] = r.record_id;
    j["reason"] = r.reason;
    out << j.dump() << '\n';
  }
}

// ---- report emitters ----

std::string stats_to_json(const CorpusStats& stats) {
  json rows = json::array();
  for (const auto& [key, cell] : stats.cells) {
    const auto& [figure, language, split] = key;
    json j;
    j["figure"] = to_string(figure);
    j["language"] = language;
    j["split"] = to_string(split);
    j["total"] = cell.total;
    j["literal"] = cell.literal;
    j["figurative"] = cell.figurative;
    rows.push_back(j);
  }
  return json{{"cells", rows}}.dump(2);
}

std::string stats_to_table(const CorpusStats& stats) {
  std::ostringstream out;
  out << "figure     lang  split  total    literal  figurative\n";
  for (const auto& [key, cell] : stats.cells) {
    const auto& [figure, language, split] = key;
    char buf[128];
    std::snprintf(buf, sizeof(buf), "%-10s %-5s %-6s %-8zu %-8zu %zu\n",
                  to_string(figure).c_str(), language.c_str(),
                  to_string(split).c_str(), cell.total, cell.literal,
                  cell.figurative);
    out << buf;
  }
  return out.str();
}

namespace {

json overlap_json(const OverlapReport& r) {
  json j;
  if (r.literal_pct) j["literal_pct"] = *r.literal_pct;
  if (r.figurative_pct) j["figurative_pct"] = *r.figurative_pct;
  j["train_expressions"] = r.train_expressions;
  return j;
}

}  // namespace

std::string overlap_to_json(
    const std::map<std::string, OverlapReport>& by_key) {
  json j;
  for (const auto& [key, report] : by_key) j[key] = overlap_json(report);
  return j.dump(2);
}

std::string overlap_to_table(
    const std::map<std::string, OverlapReport>& by_key) {
  std::ostringstream out;
  out << "probe           literal%   idiomatic%\n";
  for (const auto& [key, r] : by_key) {
    char lit[32], fig[32];
    if (r.literal_pct) {
      std::snprintf(lit, sizeof(lit), "%.2f", *r.literal_pct);
    } else {
      std::snprintf(lit, sizeof(lit), "-");
    }
    if (r.figurative_pct) {
      std::snprintf(fig, sizeof(fig), "%.2f", *r.figurative_pct);
    } else {
      std::snprintf(fig, sizeof(fig), "-");
    }
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%-15s %-10s %s\n", key.c_str(), lit, fig);
    out << buf;
  }
  return out.str();
}

}  // namespace figdet
