#include "pvda/losses.hpp"

#include <algorithm>
#include <cmath>

#include "pvda/common.hpp"

namespace pvda {

namespace {
double log_clamped(double p) { return std::log(std::max(p, kProbEpsilon)); }
}  // namespace

double location_loss(const LocationProbs& probs, const std::vector<int>& labels) {
  require(probs.per_part.size() == 4, "location_loss: expected 4 part distributions");
  const std::size_t batch = probs.per_part[0].dim(0);
  require(labels.size() == batch, "location_loss: labels/batch size mismatch");
  const std::size_t classes = probs.per_part[0].dim(1);
  double loss = 0.0;
  for (std::size_t i = 0; i < batch; ++i) {
    require(labels[i] >= 0 && static_cast<std::size_t>(labels[i]) < classes,
            "location_loss: label out of range");
    for (std::size_t l = 0; l < 4; ++l)
      loss -= log_clamped(probs.per_part[l](i, static_cast<std::size_t>(labels[i])));
  }
  return loss;
}

double view_loss(const ViewProbs& probs, const std::vector<View>& views) {
  const std::size_t batch = probs.q.dim(0);
  require(views.size() == batch, "view_loss: views/batch size mismatch");
  double loss = 0.0;
  for (std::size_t i = 0; i < batch; ++i) loss -= log_clamped(probs.q(i, view_prob_index(views[i])));
  return loss;
}

double adversarial_loss(const ViewProbs& probs, const std::vector<View>& views) {
  return view_loss(probs, flip_views(views));
}

double combined_loss(double location, double adversarial, double alpha) {
  require<UsageError>(alpha >= 0.0, "combined_loss: alpha must be non-negative");
  return location + alpha * adversarial;
}

std::vector<View> flip_views(const std::vector<View>& views) {
  std::vector<View> flipped(views.size());
  for (std::size_t i = 0; i < views.size(); ++i)
    flipped[i] = views[i] == View::kUav ? View::kSatellite : View::kUav;
  return flipped;
}

LossReport make_loss_report(double location, double view, double adversarial, double alpha,
                            std::size_t batch_size) {
  LossReport r;
  r.location_loss = location;
  r.view_loss = view;
  r.adversarial_loss = adversarial;
  r.alpha = alpha;
  r.combined = combined_loss(location, adversarial, alpha);
  r.batch_size = batch_size;
  const double inv = batch_size > 0 ? 1.0 / static_cast<double>(batch_size) : 0.0;
  r.location_loss_mean = location * inv;
  r.view_loss_mean = view * inv;
  r.adversarial_loss_mean = adversarial * inv;
  r.combined_mean = r.combined * inv;
  return r;
}

Tensor softmax_ce_grad_rows(const Tensor& probs, const std::vector<std::size_t>& labels,
                            double scale) {
  const std::size_t batch = probs.dim(0), classes = probs.dim(1);
  require(labels.size() == batch, "softmax_ce_grad_rows: labels/batch size mismatch");
  Tensor grad(probs.shape());
  for (std::size_t i = 0; i < batch; ++i) {
    for (std::size_t c = 0; c < classes; ++c) grad(i, c) = scale * probs(i, c);
    grad(i, labels[i]) -= scale;
  }
  return grad;
}

namespace {
std::vector<std::size_t> view_label_indices(const std::vector<View>& views) {
  std::vector<std::size_t> ix(views.size());
  for (std::size_t i = 0; i < views.size(); ++i) ix[i] = view_prob_index(views[i]);
  return ix;
}
}  // namespace

Tensor view_loss_logit_grad(const ViewProbs& probs, const std::vector<View>& views, double scale) {
  return softmax_ce_grad_rows(probs.q, view_label_indices(views), scale);
}

Tensor adversarial_loss_logit_grad(const ViewProbs& probs, const std::vector<View>& views,
                                   double scale) {
  return softmax_ce_grad_rows(probs.q, view_label_indices(flip_views(views)), scale);
}

}  // namespace pvda
