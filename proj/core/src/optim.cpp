#include "pvda/optim.hpp"

#include <cmath>

#include "pvda/common.hpp"

namespace pvda {

const char* param_group_name(ParamGroup g) {
  switch (g) {
    case ParamGroup::kBackbone: return "backbone";
    case ParamGroup::kEncoderRest: return "encoder_rest";
    case ParamGroup::kClassifier: return "classifier";
    case ParamGroup::kDiscriminator: return "discriminator";
  }
  return "?";
}

ParamGroup param_group_from_name(const std::string& name) {
  if (name == "backbone") return ParamGroup::kBackbone;
  if (name == "encoder_rest") return ParamGroup::kEncoderRest;
  if (name == "classifier") return ParamGroup::kClassifier;
  if (name == "discriminator") return ParamGroup::kDiscriminator;
  fail<UsageError>("unknown parameter group: " + name);
}

SgdOptimizer::SgdOptimizer(std::vector<GroupedParam> params, double momentum, double weight_decay)
    : params_(std::move(params)), momentum_(momentum), weight_decay_(weight_decay) {
  velocity_.reserve(params_.size());
  for (const auto& p : params_) velocity_.emplace_back(p.ref.value->shape());
}

void SgdOptimizer::step(const std::map<ParamGroup, double>& lr) {
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const auto it = lr.find(params_[i].group);
    require(it != lr.end(), std::string("SgdOptimizer: no learning rate for group ") +
                                param_group_name(params_[i].group));
    const double rate = it->second;
    Tensor& w = *params_[i].ref.value;
    const Tensor& g = *params_[i].ref.grad;
    Tensor& v = velocity_[i];
    for (std::size_t k = 0; k < w.numel(); ++k) {
      const double grad = g[k] + weight_decay_ * w[k];
      v[k] = momentum_ * v[k] + grad;
      w[k] -= rate * v[k];
    }
  }
}

std::vector<nn::BufferRef> SgdOptimizer::state_buffers() {
  std::vector<nn::BufferRef> out;
  out.reserve(params_.size());
  for (std::size_t i = 0; i < params_.size(); ++i)
    out.push_back({"optim.sgd." + params_[i].ref.path + ".velocity", &velocity_[i]});
  return out;
}

AdamOptimizer::AdamOptimizer(std::vector<GroupedParam> params, double beta1, double beta2,
                             double eps)
    : params_(std::move(params)), beta1_(beta1), beta2_(beta2), eps_(eps) {
  m_.reserve(params_.size());
  v_.reserve(params_.size());
  for (const auto& p : params_) {
    m_.emplace_back(p.ref.value->shape());
    v_.emplace_back(p.ref.value->shape());
  }
  step_count_tensor_ = Tensor({1});
}

void AdamOptimizer::step(const std::map<ParamGroup, double>& lr) {
  ++step_count_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(step_count_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(step_count_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const auto it = lr.find(params_[i].group);
    require(it != lr.end(), std::string("AdamOptimizer: no learning rate for group ") +
                                param_group_name(params_[i].group));
    const double rate = it->second;
    Tensor& w = *params_[i].ref.value;
    const Tensor& g = *params_[i].ref.grad;
    Tensor& m = m_[i];
    Tensor& v = v_[i];
    for (std::size_t k = 0; k < w.numel(); ++k) {
      m[k] = beta1_ * m[k] + (1.0 - beta1_) * g[k];
      v[k] = beta2_ * v[k] + (1.0 - beta2_) * g[k] * g[k];
      const double mhat = m[k] / bc1;
      const double vhat = v[k] / bc2;
      w[k] -= rate * mhat / (std::sqrt(vhat) + eps_);
    }
  }
}

std::vector<nn::BufferRef> AdamOptimizer::state_buffers() {
  std::vector<nn::BufferRef> out;
  out.reserve(2 * params_.size() + 1);
  for (std::size_t i = 0; i < params_.size(); ++i) {
    out.push_back({"optim.adam." + params_[i].ref.path + ".m", &m_[i]});
    out.push_back({"optim.adam." + params_[i].ref.path + ".v", &v_[i]});
  }
  step_count_tensor_[0] = static_cast<double>(step_count_);
  out.push_back({"optim.adam.step_count", &step_count_tensor_});
  return out;
}

}  // namespace pvda
