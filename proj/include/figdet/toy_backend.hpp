#pragma once

#include <Eigen/Dense>

#include "figdet/backend.hpp"

namespace figdet {

// Small deterministic text-to-text model for CPU desk-scale runs: hashed
// bag-of-words features into a softmax over the target strings seen
// during training, optimized with Adam at the learning rate supplied per
// step. Greedy decoding emits the argmax target string. All state is
// double-precision Eigen; two runs with identical inputs produce
// bit-identical parameters.
class ToyBackend : public Backend {
 public:
  struct Options {
    std::size_t feature_buckets = 1024;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
  };

  ToyBackend() : ToyBackend(Options()) {}
  explicit ToyBackend(Options options);

  std::string kind() const override { return "toy"; }
  double fit_step(const std::vector<PromptInstance>& batch,
                  double lr) override;
  std::vector<std::string> generate(
      const std::vector<std::string>& inputs) override;
  void save(const std::filesystem::path& path) const override;
  void load(const std::filesystem::path& path) override;

  std::size_t num_classes() const { return classes_.size(); }

 private:
  Eigen::VectorXd featurize(const std::string& text) const;
  std::size_t class_index(const std::string& target);

  Options options_;
  std::vector<std::string> classes_;  // row i of weights_ scores classes_[i]
  Eigen::MatrixXd weights_;           // classes x (buckets + 1 bias)
  Eigen::MatrixXd adam_m_;
  Eigen::MatrixXd adam_v_;
  std::size_t adam_t_ = 0;
};

}  // namespace figdet
