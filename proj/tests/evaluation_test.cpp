#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "figdet/evaluation.hpp"
#include "figdet/rng.hpp"

using namespace figdet;

namespace {

std::vector<LabeledExample> make_examples(std::size_t n,
                                          const std::string& lang,
                                          Figure figure = Figure::idiom) {
  std::vector<LabeledExample> out;
  for (std::size_t i = 0; i < n; ++i) {
    LabeledExample ex;
    ex.id = lang + "-" + std::to_string(i);
    ex.text = "probe sentence " + std::to_string(i) + " " + lang;
    ex.label = i % 2 ? Label::figurative : Label::literal;
    ex.language = lang;
    ex.figure = figure;
    out.push_back(ex);
  }
  return out;
}

GoldMap gold_for(const std::vector<LabeledExample>& data,
                 const TemplateRegistry& reg, const TaskSpec& task) {
  const PromptTemplate& tmpl = resolve_template(reg, task);
  return build_gold_map(build_instances(data, tmpl, task.figure), tmpl,
                        task.figure);
}

}  // namespace

TEST_CASE("hand-counted scoring: two right, one wrong, one unparsed") {
  std::vector<Label> gold = {Label::literal, Label::literal, Label::figurative,
                             Label::figurative};
  std::vector<std::optional<Label>> parsed = {Label::literal,
                                              Label::figurative,
                                              Label::figurative, std::nullopt};
  EvalReport r = score(gold, parsed);
  CHECK(r.n == 4);
  CHECK(r.accuracy == doctest::Approx(0.5));
  CHECK(r.unparsed_count == 1);
  // gold literal row: 1 kept, 1 flipped; gold figurative row: 1 kept,
  // 1 unparsed folded into the incorrect cell
  CHECK(r.confusion[0][0] == 1);
  CHECK(r.confusion[0][1] == 1);
  CHECK(r.confusion[1][0] == 1);
  CHECK(r.confusion[1][1] == 1);
  auto pct = confusion_row_percent(r.confusion);
  CHECK(pct[0][0] == doctest::Approx(50.0));
  CHECK(pct[1][1] == doctest::Approx(50.0));
}

TEST_CASE("score matches a brute-force counter on random inputs") {
  SplitMix64 rng(99);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 1 + rng.next_below(40);
    std::vector<Label> gold;
    std::vector<std::optional<Label>> parsed;
    for (std::size_t i = 0; i < n; ++i) {
      gold.push_back(rng.next_below(2) ? Label::figurative : Label::literal);
      switch (rng.next_below(3)) {
        case 0: parsed.push_back(Label::literal); break;
        case 1: parsed.push_back(Label::figurative); break;
        default: parsed.push_back(std::nullopt); break;
      }
    }
    std::size_t correct = 0, unparsed = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!parsed[i]) ++unparsed;
      else if (*parsed[i] == gold[i]) ++correct;
    }
    EvalReport r = score(gold, parsed);
    CHECK(r.accuracy ==
          doctest::Approx(static_cast<double>(correct) / n).epsilon(1e-12));
    CHECK(r.unparsed_count == unparsed);
    // confusion marginals: rows sum to gold counts, grand total is n
    std::size_t lit_gold = 0;
    for (Label g : gold) lit_gold += g == Label::literal;
    CHECK(r.confusion[0][0] + r.confusion[0][1] == lit_gold);
    CHECK(r.confusion[0][0] + r.confusion[0][1] + r.confusion[1][0] +
              r.confusion[1][1] ==
          n);
  }
}

TEST_CASE("score rejects mismatched or empty inputs") {
  CHECK_THROWS_AS(score({Label::literal}, {}), std::invalid_argument);
  CHECK_THROWS_AS(score({}, {}), std::invalid_argument);
}

TEST_CASE("oracle / constant / anti-oracle accuracy sandwich") {
  auto reg = TemplateRegistry::builtin();
  TaskSpec task{Figure::idiom, "en", "A"};
  auto data = make_examples(10, "en");
  auto gold = gold_for(data, reg, task);

  OracleBackend oracle(gold);
  AntiOracleBackend anti(gold);
  ConstantBackend constant("Idiomatic");

  EvalReport top = evaluate(oracle, data, task, Split::test, reg);
  EvalReport mid = evaluate(constant, data, task, Split::test, reg);
  EvalReport bottom = evaluate(anti, data, task, Split::test, reg);
  CHECK(top.accuracy == doctest::Approx(1.0));
  CHECK(bottom.accuracy == doctest::Approx(0.0));
  CHECK(mid.accuracy == doctest::Approx(0.5));  // balanced labels
  CHECK(top.accuracy >= mid.accuracy);
  CHECK(mid.accuracy >= bottom.accuracy);
  CHECK(top.per_example.size() == data.size());
  CHECK(top.unparsed_count == 0);
}

TEST_CASE("garbage generations are counted as UNPARSED, not dropped") {
  auto reg = TemplateRegistry::builtin();
  TaskSpec task{Figure::idiom, "en", "A"};
  auto data = make_examples(4, "en");
  ConstantBackend gibberish("no idea really");
  EvalReport r = evaluate(gibberish, data, task, Split::test, reg);
  CHECK(r.n == 4);
  CHECK(r.accuracy == 0.0);
  CHECK(r.unparsed_count == 4);
  for (const auto& e : r.per_example) CHECK(!e.parsed.has_value());
}

TEST_CASE("zero-shot protocol flags in-language tasks and warns") {
  auto reg = TemplateRegistry::builtin();
  TaskSpec en_task{Figure::idiom, "en", "A"};
  TaskSpec de_task{Figure::idiom, "de", "A"};
  auto en_data = make_examples(6, "en");
  auto de_data = make_examples(6, "de");

  GoldMap gold = gold_for(en_data, reg, en_task);
  GoldMap de_gold = gold_for(de_data, reg, de_task);
  gold.insert(de_gold.begin(), de_gold.end());
  OracleBackend backend(gold);

  std::vector<std::string> warnings;
  auto reports = zero_shot_protocol(backend, {"en"},
                                    {{en_task, en_data}, {de_task, de_data}},
                                    Split::test, reg, {}, &warnings);
  REQUIRE(reports.size() == 2);
  CHECK(!reports[0].zero_shot);  // en was trained on
  CHECK(reports[1].zero_shot);   // de is genuinely zero-shot
  REQUIRE(warnings.size() == 1);
  CHECK(warnings[0].find("idiom/en") != std::string::npos);
}

TEST_CASE("transfer matrix layout, diagonal, and overall row") {
  auto reg = TemplateRegistry::builtin();
  std::map<std::string, std::vector<LabeledExample>> tests = {
      {"en", make_examples(6, "en")},
      {"de", make_examples(6, "de")},
  };
  GoldMap en_gold = gold_for(tests["en"], reg, {Figure::idiom, "en", "A"});
  GoldMap de_gold = gold_for(tests["de"], reg, {Figure::idiom, "de", "A"});
  GoldMap all = en_gold;
  all.insert(de_gold.begin(), de_gold.end());

  // "trained on en" = oracle on en prompts only: perfect on en, 0 on de
  // (unknown prompts come back as the error marker, which never parses)
  OracleBackend en_model(en_gold);
  OracleBackend de_model(de_gold);
  OracleBackend overall(all);
  TransferMatrix m = transfer_matrix(
      {{"en", &en_model}, {"de", &de_model}, {"overall", &overall}},
      Figure::idiom, tests, reg);

  REQUIRE(m.rows == std::vector<std::string>{"de", "en", "overall"});
  REQUIRE(m.cols == std::vector<std::string>{"de", "en"});
  auto cell = [&](const std::string& row, const std::string& col) {
    std::size_t r = std::find(m.rows.begin(), m.rows.end(), row) -
                    m.rows.begin();
    std::size_t c = std::find(m.cols.begin(), m.cols.end(), col) -
                    m.cols.begin();
    return m.cells[r][c];
  };
  CHECK(cell("en", "en") == doctest::Approx(1.0));
  CHECK(cell("de", "de") == doctest::Approx(1.0));
  CHECK(cell("en", "de") == doctest::Approx(0.0));
  CHECK(cell("de", "en") == doctest::Approx(0.0));
  CHECK(cell("overall", "en") == doctest::Approx(1.0));
  CHECK(cell("overall", "de") == doctest::Approx(1.0));

  CHECK_THROWS_WITH_AS(
      transfer_matrix({{"en", nullptr}}, Figure::idiom, tests, reg),
      "transfer_matrix: missing checkpoints: en", std::invalid_argument);

  // emitters cover every row and column label
  auto svg = transfer_to_svg(m);
  auto table = transfer_to_table(m);
  for (const auto& name : {"de", "en", "overall"}) {
    CHECK(svg.find(name) != std::string::npos);
    CHECK(table.find(name) != std::string::npos);
  }
}

TEST_CASE("prompt diff is antisymmetric and zero against itself") {
  auto reg = TemplateRegistry::builtin();
  TaskSpec task_a{Figure::idiom, "en", "A"};
  TaskSpec task_b{Figure::idiom, "en", "B"};
  auto data = make_examples(10, "en");

  OracleBackend oracle_a(gold_for(data, reg, task_a));
  ConstantBackend constant("Idiomatic");
  std::vector<EvalReport> ref = {evaluate(oracle_a, data, task_a, Split::test,
                                          reg)};
  std::vector<EvalReport> other = {evaluate(constant, data, task_b,
                                            Split::test, reg)};

  PromptDiffReport fwd = prompt_diff(ref, other);
  PromptDiffReport bwd = prompt_diff(other, ref);
  REQUIRE(fwd.per_task.size() == 1);
  CHECK(fwd.per_task.at("idiom/en") == doctest::Approx(0.5));  // 1.0 - 0.5
  CHECK(fwd.per_task.at("idiom/en") ==
        doctest::Approx(-bwd.per_task.at("idiom/en")));

  PromptDiffReport self = prompt_diff(ref, ref);
  CHECK(self.per_task.at("idiom/en") == doctest::Approx(0.0));

  auto svg = prompt_diff_to_svg(fwd);
  CHECK(svg.find("idiom/en") != std::string::npos);
  CHECK_THROWS(prompt_diff(ref, {}));
}

TEST_CASE("valid/test gap pairs reports by task") {
  auto reg = TemplateRegistry::builtin();
  TaskSpec task{Figure::idiom, "en", "A"};
  auto data = make_examples(10, "en");
  OracleBackend oracle(gold_for(data, reg, task));
  ConstantBackend constant("Idiomatic");

  std::vector<EvalReport> valid = {evaluate(oracle, data, task, Split::valid,
                                            reg)};
  std::vector<EvalReport> test = {evaluate(constant, data, task, Split::test,
                                           reg)};
  auto rows = valid_test_gap(valid, test);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].task_key == "idiom/en");
  CHECK(rows[0].valid_accuracy == doctest::Approx(1.0));
  CHECK(rows[0].test_accuracy == doctest::Approx(0.5));
  CHECK(rows[0].gap == doctest::Approx(0.5));
  CHECK_THROWS(valid_test_gap(valid, {}));
}

TEST_CASE("cross-figurative comparison reports signed deltas") {
  auto reg = TemplateRegistry::builtin();
  TaskSpec idiom_task{Figure::idiom, "en", "A"};
  TaskSpec meta_task{Figure::metaphor, "en", "A"};
  auto idiom_data = make_examples(8, "en", Figure::idiom);
  auto meta_data = make_examples(8, "en", Figure::metaphor);

  ConstantBackend lit("Literal");
  OracleBackend idiom_oracle(gold_for(idiom_data, reg, idiom_task));
  OracleBackend meta_oracle(gold_for(meta_data, reg, meta_task));

  std::vector<EvalReport> single = {
      evaluate(lit, idiom_data, idiom_task, Split::test, reg),
      evaluate(lit, meta_data, meta_task, Split::test, reg)};
  std::vector<EvalReport> multi = {
      evaluate(idiom_oracle, idiom_data, idiom_task, Split::test, reg),
      evaluate(meta_oracle, meta_data, meta_task, Split::test, reg)};

  auto rows = cross_figurative_compare(single, multi, "en");
  REQUIRE(rows.size() == 2);
  for (const auto& row : rows) {
    CHECK(row.single_accuracy == doctest::Approx(0.5));
    CHECK(row.multitask_accuracy == doctest::Approx(1.0));
    CHECK(row.delta == doctest::Approx(0.5));
  }
  CHECK_THROWS(cross_figurative_compare(single, {}, "en"));
}

TEST_CASE("report JSON carries accuracy, confusion, and checkpoint fields") {
  auto reg = TemplateRegistry::builtin();
  TaskSpec task{Figure::idiom, "en", "A"};
  auto data = make_examples(4, "en");
  OracleBackend oracle(gold_for(data, reg, task));
  CheckpointMeta meta{"oracle", 2000, 0.7, "cafe1234"};
  EvalReport r = evaluate(oracle, data, task, Split::test, reg, meta);
  auto j = report_to_json(r);
  for (const auto& needle :
       {"\"accuracy\": 1.0", "\"unparsed_count\": 0", "cafe1234",
        "\"figure\": \"idiom\"", "per_example"}) {
    CHECK(j.find(needle) != std::string::npos);
  }
  auto compact = report_to_json(r, false);
  CHECK(compact.find("per_example") == std::string::npos);
}
