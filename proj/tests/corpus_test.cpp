#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <set>

#include "figdet/corpus.hpp"
#include "figdet/rng.hpp"

using namespace figdet;
namespace fs = std::filesystem;

static const fs::path kSources = fs::path(FIGDET_TEST_DATA) / "sources";

TEST_CASE("whitespace normalization") {
  CHECK(normalize_whitespace("  a \t b\n c  ") == "a b c");
  CHECK(normalize_whitespace("\n\t ") == "");
  CHECK(normalize_whitespace("plain") == "plain");
}

TEST_CASE("hyperbole ingestion flattens pairs") {
  HyperboleRow pair{"7", "My heart failed a few times.", "",
                    std::string("I was anxious.")};
  auto result = ingest_hyperbole({pair}, "en", Split::train, "hypo");
  REQUIRE(result.examples.size() == 2);
  CHECK(result.rejected.empty());
  std::multiset<Label> labels{result.examples[0].label,
                              result.examples[1].label};
  CHECK(labels == std::multiset<Label>{Label::literal, Label::figurative});
  for (const auto& ex : result.examples) {
    CHECK(ex.figure == Figure::hyperbole);
    CHECK(ex.source == "hypo:7");
  }
}

TEST_CASE("hyperbole ingestion rejects bad rows with record id") {
  std::vector<HyperboleRow> rows = {
      {"1", "", "1", std::nullopt},
      {"2", "fine text", "maybe", std::nullopt},
      {"3", "ok", "1", std::nullopt},
  };
  auto result = ingest_hyperbole(rows, "en", Split::train, "hypo");
  CHECK(result.examples.size() == 1);
  REQUIRE(result.rejected.size() == 2);
  CHECK(result.rejected[0].record_id == "1");
  CHECK(result.rejected[1].record_id == "2");
  CHECK(result.rejected[1].reason.find("maybe") != std::string::npos);
}

TEST_CASE("empty input yields empty output") {
  auto result = ingest_hyperbole({}, "en", Split::train, "hypo");
  CHECK(result.examples.empty());
  CHECK(result.rejected.empty());
}

TEST_CASE("fixture hyperbole counts: 6 figurative + 4 literal") {
  auto rows = read_hyperbole_tsv(kSources / "hypo_en_train.tsv");
  auto result = ingest_hyperbole(rows, "en", Split::train, "hypo");
  auto stats = compute_stats(result.examples);
  const StatsCell* cell = stats.find(Figure::hyperbole, "en", Split::train);
  REQUIRE(cell != nullptr);
  CHECK(cell->total == 10);
  CHECK(cell->figurative == 6);
  CHECK(cell->literal == 4);
}

TEST_CASE("idiom conversion: span implies figurative") {
  TaggedSentence tagged{"1",
                        {"He", "kicked", "the", "bucket", "yesterday"},
                        {"O", "B-IDIOM", "I-IDIOM", "I-IDIOM", "O"}};
  auto result = ingest_idiom_word_level({tagged}, "en", Split::train, "id10m");
  REQUIRE(result.examples.size() == 1);
  const LabeledExample& ex = result.examples[0];
  CHECK(ex.label == Label::figurative);
  REQUIRE(ex.spans.size() == 1);
  CHECK(ex.text.substr(ex.spans[0].start, ex.spans[0].end - ex.spans[0].start)
        == "kicked the bucket");
}

TEST_CASE("idiom conversion: all-outside is literal with no spans") {
  TaggedSentence plain{"1", {"The", "cat", "slept"}, {"O", "O", "O"}};
  auto result = ingest_idiom_word_level({plain}, "en", Split::train, "id10m");
  REQUIRE(result.examples.size() == 1);
  CHECK(result.examples[0].label == Label::literal);
  CHECK(result.examples[0].spans.empty());
}

TEST_CASE("idiom conversion rejects inside-tag with no opening") {
  TaggedSentence broken{"9", {"a", "b"}, {"O", "I-IDIOM"}};
  auto result = ingest_idiom_word_level({broken}, "en", Split::train, "id10m");
  CHECK(result.examples.empty());
  REQUIRE(result.rejected.size() == 1);
  CHECK(result.rejected[0].record_id == "9");
}

TEST_CASE("idiom fixture: 5 figurative, 5 literal") {
  auto sentences = read_token_tag_file(kSources / "id10m_en_train.tags");
  REQUIRE(sentences.size() == 10);
  auto result =
      ingest_idiom_word_level(sentences, "en", Split::train, "id10m");
  auto stats = compute_stats(result.examples);
  const StatsCell* cell = stats.find(Figure::idiom, "en", Split::train);
  REQUIRE(cell != nullptr);
  CHECK(cell->figurative == 5);
  CHECK(cell->literal == 5);
}

TEST_CASE("converted idiom examples: figurative iff spans non-empty") {
  auto sentences = read_token_tag_file(kSources / "id10m_en_train.tags");
  auto result =
      ingest_idiom_word_level(sentences, "en", Split::train, "id10m");
  for (const auto& ex : result.examples) {
    CHECK((ex.label == Label::figurative) == !ex.spans.empty());
  }
}

TEST_CASE("metaphor binarization with default policy") {
  std::vector<MetaphorRow> rows = {
      {"1", "a plain sentence", 0},
      {"2", "a weak one", 1},
      {"3", "a conventional one", 2},
      {"4", "a clear one", 3},
  };
  auto result = ingest_metaphor_lcc(rows, "en", Split::train, "lcc");
  auto stats = compute_stats(result.examples);
  const StatsCell* cell = stats.find(Figure::metaphor, "en", Split::train);
  REQUIRE(cell != nullptr);
  CHECK(cell->total == 3);  // score 1 dropped
  CHECK(cell->literal == 1);
  CHECK(cell->figurative == 2);
  CHECK(result.rejected.empty());
}

TEST_CASE("metaphor binarization rejects out-of-range scores") {
  auto result = ingest_metaphor_lcc({{"1", "text", 7}}, "en", Split::train,
                                    "lcc");
  CHECK(result.examples.empty());
  REQUIRE(result.rejected.size() == 1);
}

TEST_CASE("metaphor binarization is monotone in score") {
  for (int threshold = 1; threshold <= 3; ++threshold) {
    BinarizationPolicy policy{threshold};
    std::optional<Label> prev;
    for (int s = 0; s <= 3; ++s) {
      auto result = ingest_metaphor_lcc({{"1", "text", s}}, "en",
                                        Split::train, "lcc", policy);
      if (result.examples.empty()) continue;
      Label label = result.examples[0].label;
      if (prev) CHECK(static_cast<int>(*prev) <= static_cast<int>(label));
      prev = label;
    }
  }
}

TEST_CASE("ingestion totality: accepted + rejected = input") {
  auto rows = read_hyperbole_tsv(kSources / "hypo_en_train.tsv");
  rows.push_back({"x", "", "1", std::nullopt});
  auto result = ingest_hyperbole(rows, "en", Split::train, "hypo");
  CHECK(result.examples.size() + result.rejected.size() == rows.size());
}

static LabeledExample example(std::string id, std::string text,
                              Label label = Label::literal) {
  LabeledExample ex;
  ex.id = std::move(id);
  ex.text = std::move(text);
  ex.language = "en";
  ex.figure = Figure::hyperbole;
  ex.label = label;
  ex.split = Split::train;
  return ex;
}

TEST_CASE("upsample reaches target with every original present") {
  std::vector<LabeledExample> input = {example("a", "one"), example("b", "two"),
                                       example("c", "three")};
  auto out = upsample(input, 7, 42);
  CHECK(out.size() == 7);
  std::set<std::string> ids;
  for (const auto& ex : out) ids.insert(ex.id);
  CHECK(ids == std::set<std::string>{"a", "b", "c"});

  auto rerun = upsample(input, 7, 42);
  CHECK(out == rerun);
  auto other_seed = upsample(input, 7, 43);
  CHECK(other_seed.size() == 7);
}

TEST_CASE("upsample exact fit is a permutation") {
  std::vector<LabeledExample> input = {example("a", "one"), example("b", "two"),
                                       example("c", "three")};
  auto out = upsample(input, 3, 5);
  REQUIRE(out.size() == 3);
  std::multiset<std::string> in_ids, out_ids;
  for (const auto& ex : input) in_ids.insert(ex.id);
  for (const auto& ex : out) out_ids.insert(ex.id);
  CHECK(in_ids == out_ids);
}

TEST_CASE("upsample contract errors") {
  std::vector<LabeledExample> input = {example("a", "one")};
  CHECK_THROWS_AS(upsample(input, 0, 1), std::invalid_argument);
  CHECK_THROWS_AS(upsample({}, 5, 1), std::invalid_argument);
}

TEST_CASE("compute_stats row sums and split totals") {
  std::vector<LabeledExample> all;
  for (int i = 0; i < 5; ++i) {
    all.push_back(example("t" + std::to_string(i), "text",
                          i % 2 ? Label::figurative : Label::literal));
  }
  all[3].split = Split::valid;
  all[4].split = Split::test;
  auto stats = compute_stats(all);
  std::size_t total = 0;
  for (const auto& [key, cell] : stats.cells) {
    CHECK(cell.literal + cell.figurative == cell.total);
    total += cell.total;
  }
  CHECK(total == all.size());
  CHECK(compute_stats({}).cells.empty());
}

static LabeledExample idiom_example(std::string id, std::string text,
                                    Label label,
                                    std::vector<Span> spans = {}) {
  LabeledExample ex;
  ex.id = std::move(id);
  ex.text = std::move(text);
  ex.language = "en";
  ex.figure = Figure::idiom;
  ex.label = label;
  ex.split = Split::train;
  ex.spans = std::move(spans);
  return ex;
}

TEST_CASE("expression overlap: hand-computed fixture") {
  // train expression set E = {"kick the bucket"}
  std::vector<LabeledExample> train = {idiom_example(
      "t1", "He will kick the bucket soon", Label::figurative, {{8, 23}})};
  std::vector<LabeledExample> probe = {
      idiom_example("p1", "They kick the bucket daily", Label::figurative),
      idiom_example("p2", "Nothing idiomatic here", Label::figurative),
      idiom_example("p3", "A literal sentence", Label::literal),
      idiom_example("p4", "Another literal one", Label::literal),
  };
  auto report = expression_overlap(train, probe);
  REQUIRE(report.figurative_pct.has_value());
  REQUIRE(report.literal_pct.has_value());
  CHECK(*report.figurative_pct == doctest::Approx(50.0));
  CHECK(*report.literal_pct == doctest::Approx(0.0));
  CHECK(report.train_expressions == 1);
}

TEST_CASE("expression overlap: full reuse gives 100") {
  std::vector<LabeledExample> train = {idiom_example(
      "t1", "spill the beans now", Label::figurative, {{0, 15}})};
  std::vector<LabeledExample> probe = {
      idiom_example("p1", "Do not SPILL the beans", Label::figurative)};
  auto report = expression_overlap(train, probe);
  REQUIRE(report.figurative_pct.has_value());
  CHECK(*report.figurative_pct == doctest::Approx(100.0));
  CHECK_FALSE(report.literal_pct.has_value());  // no literal probes: absent
}

TEST_CASE("expression overlap monotonicity under added match") {
  std::vector<LabeledExample> train = {idiom_example(
      "t1", "spill the beans now", Label::figurative, {{0, 15}})};
  std::vector<LabeledExample> probe = {
      idiom_example("p1", "unrelated text", Label::figurative),
      idiom_example("p2", "more unrelated text", Label::figurative)};
  auto before = expression_overlap(train, probe);
  probe.push_back(
      idiom_example("p3", "they spill the beans", Label::figurative));
  auto after = expression_overlap(train, probe);
  CHECK(*after.figurative_pct >= *before.figurative_pct);
  CHECK(*after.figurative_pct >= 0.0);
  CHECK(*after.figurative_pct <= 100.0);
}

TEST_CASE("record interchange round trip") {
  LabeledExample ex = idiom_example("r1", "kick the bucket", Label::figurative,
                                    {{0, 15}});
  ex.source = "id10m:r1";
  CHECK(from_record_line(to_record_line(ex)) == ex);
}

TEST_CASE("record files round trip") {
  auto dir = fs::temp_directory_path() / "figdet_corpus_test";
  fs::create_directories(dir);
  std::vector<LabeledExample> examples = {
      example("a", "first sentence"),
      idiom_example("b", "kick the bucket", Label::figurative, {{0, 15}})};
  write_records(dir / "cell.jsonl", examples);
  CHECK(read_records(dir / "cell.jsonl") == examples);
  fs::remove_all(dir);
}

TEST_CASE("invalid record line is rejected") {
  CHECK_THROWS(from_record_line(R"({"id":"x"})"));
  CHECK_THROWS(from_record_line(
      R"({"id":"x","text":"t","language":"xx","figure":"idiom","label":"literal","split":"train"})"));
}
