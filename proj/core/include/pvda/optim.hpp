#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "pvda/nn.hpp"
#include "pvda/tensor.hpp"

namespace pvda {

// Optimizer parameter groups; each one carries its own base learning rate
// (backbone 0.001, remaining encoder layers 0.01, classifier 0.01,
// discriminator 0.002).
enum class ParamGroup { kBackbone, kEncoderRest, kClassifier, kDiscriminator };

const char* param_group_name(ParamGroup g);
ParamGroup param_group_from_name(const std::string& name);

struct GroupedParam {
  nn::ParamRef ref;
  ParamGroup group;
};

// SGD with momentum and weight decay (velocity buffers keyed by parameter path).
class SgdOptimizer {
 public:
  SgdOptimizer() = default;
  SgdOptimizer(std::vector<GroupedParam> params, double momentum, double weight_decay);

  // Applies one update using the given per-group learning rates, then leaves
  // gradients untouched (callers zero them explicitly).
  void step(const std::map<ParamGroup, double>& lr);

  std::vector<nn::BufferRef> state_buffers();

 private:
  std::vector<GroupedParam> params_;
  std::vector<Tensor> velocity_;
  double momentum_ = 0.9;
  double weight_decay_ = 5e-4;
};

// Adam with bias correction.
class AdamOptimizer {
 public:
  AdamOptimizer() = default;
  AdamOptimizer(std::vector<GroupedParam> params, double beta1, double beta2, double eps);

  void step(const std::map<ParamGroup, double>& lr);

  std::vector<nn::BufferRef> state_buffers();
  // Pull the step count back out of its serialization mirror after a
  // checkpoint restore.
  void finish_load() { step_count_ = static_cast<std::int64_t>(step_count_tensor_[0]); }
  std::int64_t step_count() const { return step_count_; }

 private:
  std::vector<GroupedParam> params_;
  std::vector<Tensor> m_;
  std::vector<Tensor> v_;
  double beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
  std::int64_t step_count_ = 0;
  Tensor step_count_tensor_;  // serialization mirror
};

}  // namespace pvda
