#include "figdet/toy_backend.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace figdet {

using json = nlohmann::ordered_json;

namespace {

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

ToyBackend::ToyBackend(Options options) : options_(options) {
  const auto cols =
      static_cast<Eigen::Index>(options_.feature_buckets + 1);
  weights_.resize(0, cols);
  adam_m_.resize(0, cols);
  adam_v_.resize(0, cols);
}

Eigen::VectorXd ToyBackend::featurize(const std::string& text) const {
  Eigen::VectorXd x =
      Eigen::VectorXd::Zero(static_cast<Eigen::Index>(options_.feature_buckets) + 1);
  std::istringstream tokens(ascii_lower(normalize_whitespace(text)));
  std::string tok;
  while (tokens >> tok) {
    x[static_cast<Eigen::Index>(fnv1a(tok) % options_.feature_buckets)] += 1.0;
  }
  x[x.size() - 1] = 1.0;  // bias
  return x;
}

std::size_t ToyBackend::class_index(const std::string& target) {
  for (std::size_t i = 0; i < classes_.size(); ++i) {
    if (classes_[i] == target) return i;
  }
  classes_.push_back(target);
  weights_.conservativeResize(weights_.rows() + 1, Eigen::NoChange);
  weights_.row(weights_.rows() - 1).setZero();
  adam_m_.conservativeResize(adam_m_.rows() + 1, Eigen::NoChange);
  adam_m_.row(adam_m_.rows() - 1).setZero();
  adam_v_.conservativeResize(adam_v_.rows() + 1, Eigen::NoChange);
  adam_v_.row(adam_v_.rows() - 1).setZero();
  return classes_.size() - 1;
}

double ToyBackend::fit_step(const std::vector<PromptInstance>& batch,
                            double lr) {
  if (batch.empty()) throw std::invalid_argument("fit_step: empty batch");

  // Register unseen targets first so every item scores the full class set.
  std::vector<std::size_t> gold(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    gold[i] = class_index(batch[i].target_text);
  }

  const auto k = static_cast<Eigen::Index>(classes_.size());
  Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(k, weights_.cols());
  double loss = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    Eigen::VectorXd x = featurize(batch[i].input_text);
    Eigen::VectorXd logits = weights_ * x;
    const double max_logit = logits.maxCoeff();
    Eigen::VectorXd p = (logits.array() - max_logit).exp();
    p /= p.sum();
    loss += -std::log(std::max(p[static_cast<Eigen::Index>(gold[i])], 1e-300));
    p[static_cast<Eigen::Index>(gold[i])] -= 1.0;  // dL/dlogits
    grad.noalias() += p * x.transpose();
  }
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  loss *= inv_n;
  grad *= inv_n;

  ++adam_t_;
  adam_m_ = options_.adam_beta1 * adam_m_ + (1.0 - options_.adam_beta1) * grad;
  adam_v_ = options_.adam_beta2 * adam_v_ +
            (1.0 - options_.adam_beta2) * grad.cwiseProduct(grad);
  const double bc1 = 1.0 - std::pow(options_.adam_beta1, double(adam_t_));
  const double bc2 = 1.0 - std::pow(options_.adam_beta2, double(adam_t_));
  weights_.array() -= lr * (adam_m_.array() / bc1) /
                      ((adam_v_.array() / bc2).sqrt() + options_.adam_eps);
  return loss;
}

std::vector<std::string> ToyBackend::generate(
    const std::vector<std::string>& inputs) {
  std::vector<std::string> out;
  out.reserve(inputs.size());
  for (const auto& input : inputs) {
    if (classes_.empty()) {
      out.push_back(kGenerationError);
      continue;
    }
    Eigen::VectorXd logits = weights_ * featurize(input);
    Eigen::Index best = 0;
    logits.maxCoeff(&best);
    out.push_back(classes_[static_cast<std::size_t>(best)]);
  }
  return out;
}

void ToyBackend::save(const std::filesystem::path& path) const {
  json j;
  j["kind"] = kind();
  j["feature_buckets"] = options_.feature_buckets;
  j["classes"] = classes_;
  j["adam_t"] = adam_t_;
  auto dump_matrix = [](const Eigen::MatrixXd& m) {
    std::vector<double> flat(m.data(), m.data() + m.size());
    return flat;
  };
  j["weights"] = dump_matrix(weights_);
  j["adam_m"] = dump_matrix(adam_m_);
  j["adam_v"] = dump_matrix(adam_v_);
  std::ofstream out(path);
  if (!out) throw BackendError("cannot write " + path.string());
  out << j.dump();
}

void ToyBackend::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw BackendError("cannot open " + path.string());
  json j = json::parse(in);
  options_.feature_buckets = j.at("feature_buckets").get<std::size_t>();
  classes_ = j.at("classes").get<std::vector<std::string>>();
  adam_t_ = j.at("adam_t").get<std::size_t>();
  const auto rows = static_cast<Eigen::Index>(classes_.size());
  const auto cols = static_cast<Eigen::Index>(options_.feature_buckets + 1);
  auto load_matrix = [&](const char* key, Eigen::MatrixXd& m) {
    auto flat = j.at(key).get<std::vector<double>>();
    if (static_cast<Eigen::Index>(flat.size()) != rows * cols) {
      throw BackendError("checkpoint matrix size mismatch");
    }
    m = Eigen::Map<Eigen::MatrixXd>(flat.data(), rows, cols);
  };
  load_matrix("weights", weights_);
  load_matrix("adam_m", adam_m_);
  load_matrix("adam_v", adam_v_);
}

}  // namespace figdet
