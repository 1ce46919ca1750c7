#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "figdet/types.hpp"

namespace figdet {

// Raw hyperbole row as parsed from the source file. A paired row carries
// both sides of one (hyperbolic, literal) pair; a single row carries one
// sentence with an explicit label indicator.
struct HyperboleRow {
  std::string record_id;
  std::string text;
  std::string indicator;                 // "0"/"1"/"literal"/"hyperbolic"/...
  std::optional<std::string> pair_text;  // literal paraphrase, paired rows only
};

// One token-tagged sentence from a word-level idiom source.
struct TaggedSentence {
  std::string record_id;
  std::vector<std::string> tokens;
  std::vector<std::string> tags;  // BIO: B-IDIOM / I-IDIOM / O
};

// One scored metaphor row.
struct MetaphorRow {
  std::string record_id;
  std::string text;
  int score = -1;  // 0=no, 1=weak, 2=conventional, 3=clear
};

struct RejectedRecord {
  std::string source;
  std::string record_id;
  std::string reason;
};

// Ingestion output: accepted examples plus an enumerable rejection list.
// |accepted| + |rejected| counts every input record exactly once.
struct IngestResult {
  std::vector<LabeledExample> examples;
  std::vector<RejectedRecord> rejected;
};

// Maps the four-point metaphoricity scale to the binary label:
// 0 -> literal, score >= threshold -> figurative, in between -> dropped.
struct BinarizationPolicy {
  int threshold = 2;
};

IngestResult ingest_hyperbole(const std::vector<HyperboleRow>& rows,
                              const std::string& language, Split split,
                              const std::string& source);

IngestResult ingest_idiom_word_level(const std::vector<TaggedSentence>& rows,
                                     const std::string& language, Split split,
                                     const std::string& source);

IngestResult ingest_metaphor_lcc(const std::vector<MetaphorRow>& rows,
                                 const std::string& language, Split split,
                                 const std::string& source,
                                 const BinarizationPolicy& policy = {});

// Enlarges a training set to exactly `target` examples by seed-deterministic
// random replication. Every input example appears at least once. Throws on
// empty input or target < |examples|.
std::vector<LabeledExample> upsample(const std::vector<LabeledExample>& examples,
                                     std::size_t target, std::uint64_t seed);

CorpusStats compute_stats(const std::vector<LabeledExample>& examples);

// Percentage of probe sentences per label class whose text contains at
// least one idiomatic expression extracted from the figurative training
// spans. Absent entry means the class had no probe sentences.
struct OverlapReport {
  std::optional<double> literal_pct;
  std::optional<double> figurative_pct;
  std::size_t train_expressions = 0;
};

OverlapReport expression_overlap(const std::vector<LabeledExample>& train,
                                 const std::vector<LabeledExample>& probe);

// ---- file readers for the three source layouts ----

// TSV: text <TAB> indicator [<TAB> pair_text]. Lines starting with '#' and
// blank lines are skipped. Record ids are 1-based line numbers.
std::vector<HyperboleRow> read_hyperbole_tsv(const std::filesystem::path& path);

// One "token <TAB> tag" per line, blank line separates sentences.
std::vector<TaggedSentence> read_token_tag_file(
    const std::filesystem::path& path);

// TSV: text <TAB> score.
std::vector<MetaphorRow> read_metaphor_tsv(const std::filesystem::path& path);

// ---- canonical interchange format (one JSON object per line, UTF-8) ----

std::string to_record_line(const LabeledExample& ex);
LabeledExample from_record_line(const std::string& line);

void write_records(const std::filesystem::path& path,
                   const std::vector<LabeledExample>& examples);
std::vector<LabeledExample> read_records(const std::filesystem::path& path);

void write_rejections(const std::filesystem::path& path,
                      const std::vector<RejectedRecord>& rejected);

// ---- report emitters ----

std::string stats_to_json(const CorpusStats& stats);
std::string stats_to_table(const CorpusStats& stats);
std::string overlap_to_json(const std::map<std::string, OverlapReport>& by_key);
std::string overlap_to_table(const std::map<std::string, OverlapReport>& by_key);

}  // namespace figdet
