#pragma once

#include <vector>

#include "pvda/dataset.hpp"
#include "pvda/heads.hpp"
#include "pvda/tensor.hpp"

namespace pvda {

// Probabilities are clamped from below before taking logs.
inline constexpr double kProbEpsilon = 1e-12;

// Losses follow the training objective exactly: sums over the batch (and over
// the four parts for the location term), not means. The training loop divides
// by the batch size before optimizer steps; LossReport carries both.
struct LossReport {
  double location_loss = 0.0;
  double view_loss = 0.0;
  double adversarial_loss = 0.0;
  double combined = 0.0;
  double alpha = 0.0;
  std::size_t batch_size = 0;

  double location_loss_mean = 0.0;
  double view_loss_mean = 0.0;
  double adversarial_loss_mean = 0.0;
  double combined_mean = 0.0;
};

// -sum_i sum_{l=1..4} log p_{i,l}(y_i)
double location_loss(const LocationProbs& probs, const std::vector<int>& labels);

// -sum_{uav} log q_1 - sum_{sat} log q_2 (cross-entropy against true views)
double view_loss(const ViewProbs& probs, const std::vector<View>& views);

// -sum_{uav} log q_2 - sum_{sat} log q_1 (cross-entropy against flipped views)
double adversarial_loss(const ViewProbs& probs, const std::vector<View>& views);

// location + alpha * adversarial
double combined_loss(double location, double adversarial, double alpha);

std::vector<View> flip_views(const std::vector<View>& views);

LossReport make_loss_report(double location, double view, double adversarial, double alpha,
                            std::size_t batch_size);

// Gradient of scale * (-sum_rows log softmax(z)[label]) w.r.t. the logits z,
// evaluated from the softmax output: scale * (probs - onehot).
Tensor softmax_ce_grad_rows(const Tensor& probs, const std::vector<std::size_t>& labels,
                            double scale);

// View-label variants working directly on ViewProbs.
Tensor view_loss_logit_grad(const ViewProbs& probs, const std::vector<View>& views, double scale);
Tensor adversarial_loss_logit_grad(const ViewProbs& probs, const std::vector<View>& views,
                                   double scale);

}  // namespace pvda
