#include "figdet/backend.hpp"

#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

namespace figdet {

using json = nlohmann::ordered_json;

namespace {

void require_nonempty(const std::vector<PromptInstance>& batch) {
  if (batch.empty()) throw std::invalid_argument("fit_step: empty batch");
}

void save_gold(const std::filesystem::path& path, const std::string& kind,
               const GoldMap& gold) {
  json entries = json::object();
  for (const auto& [prompt, e] : gold) {
    entries[prompt] = {{"target", e.target}, {"opposite", e.opposite}};
  }
  std::ofstream out(path);
  if (!out) throw BackendError("cannot write " + path.string());
  out << json{{"kind", kind}, {"gold", entries}}.dump();
}

GoldMap load_gold(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw BackendError("cannot open " + path.string());
  json doc = json::parse(in);
  GoldMap gold;
  for (const auto& [prompt, e] : doc.at("gold").items()) {
    gold[prompt] = {e.at("target").get<std::string>(),
                    e.at("opposite").get<std::string>()};
  }
  return gold;
}

}  // namespace

GoldMap build_gold_map(const std::vector<PromptInstance>& instances,
                       const PromptTemplate& tmpl, Figure figure) {
  const std::string lit = verbalize(Label::literal, figure, tmpl);
  const std::string fig = verbalize(Label::figurative, figure, tmpl);
  GoldMap gold;
  for (const PromptInstance& inst : instances) {
    gold[inst.input_text] = {inst.target_text,
                             inst.target_text == lit ? fig : lit};
  }
  return gold;
}

// ---- OracleBackend ----

double OracleBackend::fit_step(const std::vector<PromptInstance>& batch,
                               double) {
  require_nonempty(batch);
  return 0.0;
}

std::vector<std::string> OracleBackend::generate(
    const std::vector<std::string>& inputs) {
  std::vector<std::string> out;
  out.reserve(inputs.size());
  for (const auto& input : inputs) {
    auto it = gold_.find(input);
    out.push_back(it == gold_.end() ? kGenerationError : it->second.target);
  }
  return out;
}

void OracleBackend::save(const std::filesystem::path& path) const {
  save_gold(path, kind(), gold_);
}

void OracleBackend::load(const std::filesystem::path& path) {
  gold_ = load_gold(path);
}

// ---- AntiOracleBackend ----

double AntiOracleBackend::fit_step(const std::vector<PromptInstance>& batch,
                                   double) {
  require_nonempty(batch);
  return 0.0;
}

std::vector<std::string> AntiOracleBackend::generate(
    const std::vector<std::string>& inputs) {
  std::vector<std::string> out;
  out.reserve(inputs.size());
  for (const auto& input : inputs) {
    auto it = gold_.find(input);
    out.push_back(it == gold_.end() ? kGenerationError : it->second.opposite);
  }
  return out;
}

void AntiOracleBackend::save(const std::filesystem::path& path) const {
  save_gold(path, kind(), gold_);
}

void AntiOracleBackend::load(const std::filesystem::path& path) {
  gold_ = load_gold(path);
}

// ---- ConstantBackend ----

double ConstantBackend::fit_step(const std::vector<PromptInstance>& batch,
                                 double) {
  require_nonempty(batch);
  return std::log(2.0);  // two-class uniform
}

std::vector<std::string> ConstantBackend::generate(
    const std::vector<std::string>& inputs) {
  return std::vector<std::string>(inputs.size(), output_);
}

void ConstantBackend::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw BackendError("cannot write " + path.string());
  out << json{{"kind", kind()}, {"output", output_}}.dump();
}

void ConstantBackend::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw BackendError("cannot open " + path.string());
  output_ = json::parse(in).at("output").get<std::string>();
}

// ---- ScriptedBackend ----

double ScriptedBackend::fit_step(const std::vector<PromptInstance>& batch,
                                 double) {
  require_nonempty(batch);
  return std::log(2.0);
}

std::vector<std::string> ScriptedBackend::generate(
    const std::vector<std::string>& inputs) {
  double score =
      scores_.empty()
          ? 0.0
          : scores_[std::min(calls_, scores_.size() - 1)];
  ++calls_;
  auto correct = static_cast<std::size_t>(
      std::llround(score * static_cast<double>(inputs.size())));
  std::vector<std::string> out;
  out.reserve(inputs.size());
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    auto it = gold_.find(inputs[i]);
    if (it == gold_.end()) {
      out.push_back(kGenerationError);
    } else {
      out.push_back(i < correct ? it->second.target : it->second.opposite);
    }
  }
  return out;
}

void ScriptedBackend::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw BackendError("cannot write " + path.string());
  out << json{{"kind", kind()}, {"calls", calls_}}.dump();
}

void ScriptedBackend::load(const std::filesystem::path&) {
  // Scripted state is the call counter; restoring it would replay the
  // script, which is never what a test wants. Loading is a no-op.
}

}  // namespace figdet
