#include "figdet/mixture.hpp"

#include <numeric>
#include <stdexcept>

namespace figdet {

const PromptTemplate& resolve_template(const TemplateRegistry& registry,
                                       const TaskSpec& task) {
  if (const PromptTemplate* t =
          registry.find(task.template_id, task.language)) {
    return *t;
  }
  if (const PromptTemplate* t = registry.find(task.template_id, "en")) {
    return *t;
  }
  throw std::out_of_range("no template " + task.template_id + " for task " +
                          task.key());
}

std::vector<PromptInstance> build_instances(
    const std::vector<LabeledExample>& examples, const PromptTemplate& tmpl,
    Figure figure, bool use_template) {
  std::vector<PromptInstance> out;
  out.reserve(examples.size());
  for (const LabeledExample& ex : examples) {
    PromptInstance inst;
    inst.input_text = use_template ? render(tmpl, figure, ex.text) : ex.text;
    inst.target_text = verbalize(ex.label, figure, tmpl);
    inst.origin_id = ex.id;
    out.push_back(std::move(inst));
  }
  return out;
}

Mixture::Mixture(std::vector<MixtureEntry> entries, MixPolicy policy,
                 std::uint64_t seed)
    : entries_(std::move(entries)), policy_(policy), seed_(seed) {
  if (entries_.empty()) throw std::invalid_argument("mixture: no entries");
  total_ = 0;
  weight_sum_ = 0.0;
  for (const MixtureEntry& e : entries_) {
    if (e.instances.empty()) {
      throw std::invalid_argument("mixture: empty dataset for task " +
                                  e.task.key());
    }
    if (e.weight <= 0.0) {
      throw std::invalid_argument("mixture: non-positive weight for task " +
                                  e.task.key());
    }
    total_ += e.instances.size();
    weight_sum_ += e.weight;
  }
}

Mixture::Iterator::Iterator(const Mixture& mixture, std::uint64_t seed)
    : mixture_(mixture), rng_(seed) {}

void Mixture::Iterator::reshuffle() {
  order_.clear();
  order_.reserve(mixture_.epoch_size());
  for (std::size_t e = 0; e < mixture_.entries_.size(); ++e) {
    for (std::size_t i = 0; i < mixture_.entries_[e].instances.size(); ++i) {
      order_.emplace_back(e, i);
    }
  }
  shuffle(order_, rng_);
  pos_ = 0;
}

const PromptInstance& Mixture::Iterator::next_instance() {
  if (mixture_.policy_ == MixPolicy::proportional) {
    double pick = rng_.next_double() * mixture_.weight_sum_;
    std::size_t e = 0;
    for (; e + 1 < mixture_.entries_.size(); ++e) {
      pick -= mixture_.entries_[e].weight;
      if (pick < 0.0) break;
    }
    const auto& items = mixture_.entries_[e].instances;
    return items[rng_.next_below(items.size())];
  }
  if (pos_ >= order_.size()) reshuffle();
  const auto& [e, i] = order_[pos_++];
  return mixture_.entries_[e].instances[i];
}

std::vector<PromptInstance> Mixture::Iterator::next_batch(
    std::size_t batch_size) {
  if (batch_size == 0) throw std::invalid_argument("batch_size must be > 0");
  std::vector<PromptInstance> batch;
  batch.reserve(batch_size);
  for (std::size_t i = 0; i < batch_size; ++i) batch.push_back(next_instance());
  return batch;
}

std::vector<PromptInstance> Mixture::Iterator::next_epoch() {
  if (mixture_.policy_ != MixPolicy::concat_shuffle) {
    throw std::logic_error("next_epoch requires concat_shuffle");
  }
  std::vector<PromptInstance> epoch;
  epoch.reserve(mixture_.epoch_size());
  for (std::size_t i = 0; i < mixture_.epoch_size(); ++i) {
    epoch.push_back(next_instance());
  }
  return epoch;
}

}  // namespace figdet
