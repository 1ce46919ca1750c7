#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "figdet/corpus.hpp"
#include "figdet/experiment.hpp"

using namespace figdet;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

const fs::path kWork = fs::temp_directory_path() / "figdet_cli_test";

int run_cli(const std::string& args, std::string* output = nullptr) {
  const fs::path out_file = kWork / "cmd_output.txt";
  std::string cmd = std::string(FIGDET_CLI) + " " + args + " > " +
                    out_file.string() + " 2>&1";
  int status = std::system(cmd.c_str());
  if (output) {
    std::ifstream in(out_file);
    std::ostringstream ss;
    ss << in.rdbuf();
    *output = ss.str();
  }
  return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const fs::path kSources = fs::path(FIGDET_TEST_DATA) / "sources/sources.json";
const fs::path kCorpus = kWork / "corpus";

void ensure_prepared() {
  static bool done = false;
  if (done) return;
  fs::create_directories(kWork);
  int rc = run_cli("prepare --sources " + kSources.string() + " --out " +
                   kCorpus.string() + " --upsample-target 20 --seed 13");
  REQUIRE(rc == kExitOk);
  done = true;
}

}  // namespace

TEST_CASE("prepare writes canonical cells with the fixture counts") {
  fs::remove_all(kWork);
  ensure_prepared();

  // per-(figure, language, split) record files
  auto count = [&](const std::string& name) {
    return read_records(kCorpus / name).size();
  };
  CHECK(count("hyperbole_en_train.jsonl") == 10);
  CHECK(count("hyperbole_en_valid.jsonl") == 4);
  CHECK(count("hyperbole_en_test.jsonl") == 4);
  CHECK(count("hyperbole_zh_train.jsonl") == 6);
  CHECK(count("idiom_en_train.jsonl") == 10);
  CHECK(count("idiom_en_test.jsonl") == 4);
  CHECK(count("metaphor_en_train.jsonl") == 3);  // borderline score dropped
  CHECK(count("metaphor_en_test.jsonl") == 4);

  // hyperbole train cells get an upsampled companion at the target size
  CHECK(count("hyperbole_en_train.up.jsonl") == 20);
  CHECK(count("hyperbole_zh_train.up.jsonl") == 20);

  CHECK(fs::exists(kCorpus / "stats.json"));
  CHECK(fs::exists(kCorpus / "stats.txt"));
  CHECK(fs::exists(kCorpus / "rejections.jsonl"));

  json stats = json::parse(slurp(kCorpus / "stats.json"));
  auto cell_of = [&](const std::string& figure, const std::string& lang,
                     const std::string& split) {
    for (const auto& cell : stats.at("cells")) {
      if (cell.at("figure") == figure && cell.at("language") == lang &&
          cell.at("split") == split) {
        return cell;
      }
    }
    FAIL("missing stats cell ", figure, "/", lang, "/", split);
    return json{};
  };
  CHECK(cell_of("hyperbole", "en", "train").at("total") == 10);
  CHECK(cell_of("hyperbole", "en", "train").at("literal") == 4);
  CHECK(cell_of("hyperbole", "en", "train").at("figurative") == 6);
  CHECK(cell_of("idiom", "en", "test").at("literal") == 1);
  CHECK(cell_of("idiom", "en", "test").at("figurative") == 3);
}

TEST_CASE("prepare is deterministic: rerun reproduces every byte") {
  ensure_prepared();
  const fs::path again = kWork / "corpus_again";
  int rc = run_cli("prepare --sources " + kSources.string() + " --out " +
                   again.string() + " --upsample-target 20 --seed 13");
  REQUIRE(rc == kExitOk);
  for (const auto& entry : fs::directory_iterator(kCorpus)) {
    if (entry.path().filename() == ".lock") continue;
    CAPTURE(entry.path().filename().string());
    CHECK(slurp(entry.path()) == slurp(again / entry.path().filename()));
  }
}

TEST_CASE("train with the oracle backend produces a usable run directory") {
  ensure_prepared();
  const fs::path runs = kWork / "runs";
  std::string out;
  int rc = run_cli("train --tasks idiom:en --backend oracle --max-steps 20"
                   " --seed 7 --corpus " + kCorpus.string() +
                   " --out " + runs.string(), &out);
  CHECK(rc == kExitOk);
  CHECK(out.find("stop reason max_steps") != std::string::npos);

  // the run lands in <out>/<config_hash>/ with checkpoint + log + manifest
  fs::path run_dir;
  for (const auto& entry : fs::directory_iterator(runs)) {
    if (entry.is_directory()) run_dir = entry.path();
  }
  REQUIRE(!run_dir.empty());
  CHECK(fs::exists(run_dir / "checkpoint.best"));
  CHECK(fs::exists(run_dir / "checkpoint.meta.json"));
  CHECK(fs::exists(run_dir / "training_log.jsonl"));
  json manifest = json::parse(slurp(run_dir / "manifest.json"));
  CHECK(manifest.at("config_hash") == run_dir.filename().string());
  CHECK(!manifest.at("input_digests").empty());

  SUBCASE("evaluate reuses the stored checkpoint") {
    const fs::path eval_dir = kWork / "eval_ckpt";
    int erc = run_cli("evaluate --checkpoint " + run_dir.string() +
                      " --tasks idiom:en --split test --corpus " +
                      kCorpus.string() + " --out " + eval_dir.string());
    CHECK(erc == kExitOk);
    json report = json::parse(slurp(eval_dir / "eval_idiom_en_test.json"));
    CHECK(report.at("accuracy") == 1.0);
    CHECK(report.at("checkpoint").at("backend_kind") == "oracle");
  }
}

TEST_CASE("evaluate with mock backends brackets the accuracy range") {
  ensure_prepared();
  const fs::path top = kWork / "eval_oracle";
  int rc = run_cli("evaluate --backend oracle --tasks idiom:en"
                   " --split test --corpus " + kCorpus.string() +
                   " --out " + top.string());
  REQUIRE(rc == kExitOk);
  json oracle_report = json::parse(slurp(top / "eval_idiom_en_test.json"));
  CHECK(oracle_report.at("accuracy") == 1.0);
  CHECK(oracle_report.at("unparsed_count") == 0);
  CHECK(fs::exists(top / "eval_table.txt"));
  CHECK(fs::exists(top / "manifest.json"));

  const fs::path bottom = kWork / "eval_constant";
  rc = run_cli("evaluate --backend constant --tasks idiom:en"
               " --split test --corpus " + kCorpus.string() +
               " --out " + bottom.string());
  REQUIRE(rc == kExitOk);
  json const_report = json::parse(slurp(bottom / "eval_idiom_en_test.json"));
  // the constant backend answers "Literal"; the idiom test cell is 1/4 literal
  CHECK(const_report.at("accuracy") == 0.25);
}

TEST_CASE("zero-shot flags out-of-training languages and warns on overlap") {
  ensure_prepared();
  const fs::path out = kWork / "zeroshot";
  std::string text;
  int rc = run_cli("zero-shot --backend oracle --trained-languages en"
                   " --tasks hyperbole:zh --tasks hyperbole:en --split test"
                   " --corpus " + kCorpus.string() + " --out " + out.string(),
                   &text);
  REQUIRE(rc == kExitOk);
  json zh = json::parse(slurp(out / "eval_hyperbole_zh_test.json"));
  json en = json::parse(slurp(out / "eval_hyperbole_en_test.json"));
  CHECK(zh.at("zero_shot") == true);
  CHECK(en.at("zero_shot") == false);
  CHECK(text.find("warning") != std::string::npos);
}

TEST_CASE("transfer grid with mock rows covers languages plus overall") {
  ensure_prepared();
  const fs::path out = kWork / "transfer";
  int rc = run_cli("transfer --figure hyperbole --languages en --languages zh"
                   " --backend oracle --corpus " + kCorpus.string() +
                   " --out " + out.string());
  REQUIRE(rc == kExitOk);
  json grid = json::parse(slurp(out / "transfer.json"));
  CHECK(grid.at("rows") == json({"en", "zh", "overall"}));
  CHECK(grid.at("cols") == json({"en", "zh"}));
  for (const auto& row : grid.at("cells")) {
    for (const auto& cell : row) CHECK(cell.get<double>() == 1.0);
  }
  CHECK(fs::exists(out / "transfer.svg"));
  CHECK(slurp(out / "transfer.svg").find("<svg") == 0);
}

TEST_CASE("prompt-diff compares two stored report directories") {
  ensure_prepared();
  // oracle under template A vs constant under template B
  const fs::path ref = kWork / "diff_ref";
  const fs::path other = kWork / "diff_other";
  REQUIRE(run_cli("evaluate --backend oracle --tasks idiom:en --template A"
                  " --split test --corpus " + kCorpus.string() +
                  " --out " + ref.string()) == kExitOk);
  REQUIRE(run_cli("evaluate --backend constant --tasks idiom:en --template B"
                  " --split test --corpus " + kCorpus.string() +
                  " --out " + other.string()) == kExitOk);

  const fs::path out = kWork / "diff_out";
  int rc = run_cli("prompt-diff --ref " + ref.string() + " --other " +
                   other.string() + " --out " + out.string());
  REQUIRE(rc == kExitOk);
  json diff = json::parse(slurp(out / "prompt_diff.json"));
  CHECK(diff.at("reference_template") == "A");
  CHECK(diff.at("other_template") == "B");
  CHECK(diff.at("per_task").at("idiom/en") == 0.75);  // 1.0 - 0.25
  CHECK(fs::exists(out / "prompt_diff.svg"));
}

TEST_CASE("overlap command reports expression reuse ratios") {
  ensure_prepared();
  const fs::path out = kWork / "overlap";
  std::string text;
  int rc = run_cli("overlap --train " +
                   (kCorpus / "idiom_en_train.jsonl").string() +
                   " --probe test=" +
                   (kCorpus / "idiom_en_test.jsonl").string() +
                   " --out " + out.string(), &text);
  REQUIRE(rc == kExitOk);
  json report = json::parse(slurp(out / "overlap.json"));
  CHECK(report.contains("test"));
  CHECK(report.at("test").contains("figurative_pct"));
}

TEST_CASE("report command pairs valid and test runs into a gap table") {
  ensure_prepared();
  const fs::path valid_dir = kWork / "rep_valid";
  const fs::path test_dir = kWork / "rep_test";
  REQUIRE(run_cli("evaluate --backend oracle --tasks idiom:en --split valid"
                  " --corpus " + kCorpus.string() + " --out " +
                  valid_dir.string()) == kExitOk);
  REQUIRE(run_cli("evaluate --backend constant --tasks idiom:en --split test"
                  " --corpus " + kCorpus.string() + " --out " +
                  test_dir.string()) == kExitOk);
  const fs::path out = kWork / "rep_out";
  int rc = run_cli("report --valid " + valid_dir.string() + " --test " +
                   test_dir.string() + " --reports " + test_dir.string() +
                   " --out " + out.string());
  REQUIRE(rc == kExitOk);
  json gap = json::parse(slurp(out / "valid_test_gap.json"));
  REQUIRE(gap.at("rows").size() == 1);
  CHECK(gap.at("rows")[0].at("gap") == 0.75);
  CHECK(fs::exists(out / "summary.txt"));
}

TEST_CASE("templates command prints a loadable registry") {
  ensure_prepared();
  std::string text;
  REQUIRE(run_cli("templates", &text) == kExitOk);
  json doc = json::parse(text);
  CHECK(doc.at("templates").size() == 9);  // A, B, C + six in-lingual
}

TEST_CASE("configuration mistakes exit with code 2") {
  ensure_prepared();
  CHECK(run_cli("train --preset no_such_preset --corpus " + kCorpus.string() +
                " --out " + (kWork / "x").string()) == kExitConfigError);
  CHECK(run_cli("evaluate --backend oracle --tasks idiom --split test"
                " --corpus " + kCorpus.string() + " --out " +
                (kWork / "x").string()) == kExitConfigError);
  CHECK(run_cli("evaluate --backend oracle --tasks idiom:en --split bogus"
                " --corpus " + kCorpus.string() + " --out " +
                (kWork / "x").string()) == kExitConfigError);
}

TEST_CASE("broken or missing data exits with code 3") {
  ensure_prepared();
  CHECK(run_cli("evaluate --backend oracle --tasks metaphor:zh --split test"
                " --corpus " + kCorpus.string() + " --out " +
                (kWork / "x").string()) == kExitDataError);
  CHECK(run_cli("prepare --sources /nonexistent/sources.json --out " +
                (kWork / "x").string()) == kExitDataError);
}
