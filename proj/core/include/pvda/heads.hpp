#pragma once

#include <string>
#include <vector>

#include "pvda/dataset.hpp"
#include "pvda/encoder.hpp"
#include "pvda/nn.hpp"

namespace pvda {

// Per-part location probabilities, four N x C matrices (innermost ring first).
struct LocationProbs {
  std::vector<Tensor> per_part;
};

// View probabilities, N x 2 with column order [UAV, SATELLITE].
struct ViewProbs {
  Tensor q;
};

std::size_t view_prob_index(View v);

// Four independent dropout + fully-connected branches with softmax, one per
// part embedding.
class LocationClassifier {
 public:
  LocationClassifier() = default;
  LocationClassifier(std::size_t d_embed, std::size_t num_locations, double dropout, Rng& rng);

  std::size_t num_locations() const { return num_locations_; }

  // Dropout draws from `rng` only in train mode.
  LocationProbs forward(const PartEmbeddings& parts, nn::Mode mode, Rng& rng,
                        bool cache_for_backward);

  // Gradient of scale * sum-cross-entropy w.r.t. the part embeddings, using
  // the probabilities cached by the last forward.
  std::vector<Tensor> backward(const std::vector<int>& labels, double scale);

  void collect(const std::string& prefix, std::vector<nn::ParamRef>& params);

  nn::Linear& branch_fc(std::size_t l) { return fcs_[l]; }

 private:
  std::size_t d_embed_ = 0, num_locations_ = 0;
  std::vector<nn::Dropout> dropouts_;
  std::vector<nn::Linear> fcs_;
  std::vector<Tensor> cached_probs_;
};

enum class DiscPooling { kStridedConv, kMaxPool, kAvgPool };

DiscPooling disc_pooling_from_name(const std::string& name);
const char* disc_pooling_name(DiscPooling p);

struct DiscriminatorConfig {
  std::size_t in_channels = 2048;
  int kernel = 3;
  DiscPooling pooling = DiscPooling::kStridedConv;
  // Channel taper across the three conv blocks; defaults to
  // {in/2, in/4, in/8}.
  std::vector<std::size_t> widths;

  std::vector<std::size_t> resolved_widths() const;
};

// Three conv+ReLU blocks (blocks 2 and 3 halve the resolution), global
// average pooling, then a 2-way fully-connected softmax head.
class ViewDiscriminator {
 public:
  ViewDiscriminator() = default;
  ViewDiscriminator(const DiscriminatorConfig& config, Rng& rng);

  const DiscriminatorConfig& config() const { return config_; }

  ViewProbs forward(const FeatureMaps& maps, bool cache_for_backward);

  // Backpropagates a gradient w.r.t. the 2-way logits; accumulates parameter
  // gradients and returns the gradient w.r.t. the input feature maps.
  Tensor backward(const Tensor& logit_grad);

  void collect(const std::string& prefix, std::vector<nn::ParamRef>& params);

  nn::Linear& head() { return head_; }
  const Tensor& cached_probs() const { return cached_probs_; }

 private:
  DiscriminatorConfig config_;
  std::vector<nn::Conv2d> convs_;
  std::vector<nn::ReLU> relus_;
  std::vector<nn::MaxPool2d> max_pools_;
  std::vector<nn::AvgPool2d> avg_pools_;
  nn::GlobalAvgPool gap_;
  nn::Linear head_;
  Tensor cached_probs_;
};

}  // namespace pvda
