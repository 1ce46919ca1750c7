#pragma once

#include <string>
#include <vector>

#include "figdet/prompt.hpp"
#include "figdet/rng.hpp"
#include "figdet/types.hpp"

namespace figdet {

// One (figure, language) detection task and the template that frames it.
struct TaskSpec {
  Figure figure = Figure::hyperbole;
  std::string language;
  std::string template_id = "A";

  std::string key() const {
    return to_string(figure) + "/" + language + "/" + template_id;
  }

  auto operator<=>(const TaskSpec&) const = default;
};

// Picks the template for a task: in-lingual entry for the task language
// when the id ships one, otherwise the English instruction.
const PromptTemplate& resolve_template(const TemplateRegistry& registry,
                                       const TaskSpec& task);

// Renders examples into training instances. With use_template=false the
// input is the raw sentence (vanilla seq2seq); the target is always the
// verbalized label.
std::vector<PromptInstance> build_instances(
    const std::vector<LabeledExample>& examples, const PromptTemplate& tmpl,
    Figure figure, bool use_template = true);

enum class MixPolicy { concat_shuffle, proportional };

struct MixtureEntry {
  TaskSpec task;
  std::vector<PromptInstance> instances;
  double weight = 1.0;
};

// A weighted collection of task datasets for joint training. Under
// concat_shuffle every example is scheduled exactly once per epoch, in a
// seed-deterministic order; under proportional each draw picks an entry
// with probability proportional to its weight.
class Mixture {
 public:
  Mixture(std::vector<MixtureEntry> entries, MixPolicy policy,
          std::uint64_t seed);

  std::size_t epoch_size() const { return total_; }
  std::size_t num_tasks() const { return entries_.size(); }
  const std::vector<MixtureEntry>& entries() const { return entries_; }
  MixPolicy policy() const { return policy_; }

  // Sequential batch stream; crosses epoch boundaries transparently.
  class Iterator {
   public:
    Iterator(const Mixture& mixture, std::uint64_t seed);
    std::vector<PromptInstance> next_batch(std::size_t batch_size);
    // One full concat_shuffle epoch, as scheduled.
    std::vector<PromptInstance> next_epoch();

   private:
    const PromptInstance& next_instance();
    void reshuffle();

    const Mixture& mixture_;
    SplitMix64 rng_;
    std::vector<std::pair<std::size_t, std::size_t>> order_;  // (entry, item)
    std::size_t pos_ = 0;
  };

  Iterator iterate() const { return Iterator(*this, seed_); }

 private:
  std::vector<MixtureEntry> entries_;
  MixPolicy policy_;
  std::uint64_t seed_;
  std::size_t total_;
  double weight_sum_;

  friend class Iterator;
};

}  // namespace figdet
