#include "pvda/heads.hpp"

#include "pvda/common.hpp"
#include "pvda/losses.hpp"

namespace pvda {

std::size_t view_prob_index(View v) { return v == View::kUav ? 0 : 1; }

// ---------------------------------------------------------------------------
// LocationClassifier

LocationClassifier::LocationClassifier(std::size_t d_embed, std::size_t num_locations,
                                       double dropout, Rng& rng)
    : d_embed_(d_embed), num_locations_(num_locations) {
  require<UsageError>(num_locations >= 2, "LocationClassifier: needs at least 2 locations");
  for (int l = 0; l < 4; ++l) {
    dropouts_.emplace_back(dropout);
    fcs_.emplace_back(d_embed, num_locations, rng);
  }
}

LocationProbs LocationClassifier::forward(const PartEmbeddings& parts, nn::Mode mode, Rng& rng,
                                          bool cache_for_backward) {
  require(parts.parts.size() == 4, "LocationClassifier: expected 4 part embeddings");
  LocationProbs out;
  cached_probs_.clear();
  for (std::size_t l = 0; l < 4; ++l) {
    Tensor h = dropouts_[l].forward(parts.parts[l], mode, rng, cache_for_backward);
    Tensor logits = fcs_[l].forward(h, cache_for_backward);
    Tensor probs = nn::softmax_rows(logits);
    if (cache_for_backward) cached_probs_.push_back(probs);
    out.per_part.push_back(std::move(probs));
  }
  return out;
}

std::vector<Tensor> LocationClassifier::backward(const std::vector<int>& labels, double scale) {
  require(cached_probs_.size() == 4, "LocationClassifier::backward without cached forward");
  std::vector<Tensor> part_grads;
  part_grads.reserve(4);
  std::vector<std::size_t> label_ix(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) label_ix[i] = static_cast<std::size_t>(labels[i]);
  for (std::size_t l = 0; l < 4; ++l) {
    Tensor dlogits = softmax_ce_grad_rows(cached_probs_[l], label_ix, scale);
    Tensor g = fcs_[l].backward(dlogits);
    part_grads.push_back(dropouts_[l].backward(g));
  }
  return part_grads;
}

void LocationClassifier::collect(const std::string& prefix, std::vector<nn::ParamRef>& params) {
  for (std::size_t l = 0; l < 4; ++l)
    fcs_[l].collect(prefix + ".branch" + std::to_string(l + 1) + ".fc", params);
}

// ---------------------------------------------------------------------------
// ViewDiscriminator

DiscPooling disc_pooling_from_name(const std::string& name) {
  if (name == "strided-conv") return DiscPooling::kStridedConv;
  if (name == "max-pool") return DiscPooling::kMaxPool;
  if (name == "avg-pool") return DiscPooling::kAvgPool;
  fail<UsageError>("unknown discriminator pooling: " + name +
                   " (expected strided-conv|max-pool|avg-pool)");
}

const char* disc_pooling_name(DiscPooling p) {
  switch (p) {
    case DiscPooling::kStridedConv: return "strided-conv";
    case DiscPooling::kMaxPool: return "max-pool";
    case DiscPooling::kAvgPool: return "avg-pool";
  }
  return "?";
}

std::vector<std::size_t> DiscriminatorConfig::resolved_widths() const {
  if (!widths.empty()) return widths;
  return {std::max<std::size_t>(1, in_channels / 2), std::max<std::size_t>(1, in_channels / 4),
          std::max<std::size_t>(1, in_channels / 8)};
}

ViewDiscriminator::ViewDiscriminator(const DiscriminatorConfig& config, Rng& rng)
    : config_(config) {
  const auto widths = config_.resolved_widths();
  require<UsageError>(widths.size() == 3, "ViewDiscriminator: expected 3 block widths");
  const auto k = static_cast<std::size_t>(config_.kernel);
  const std::size_t pad = k / 2;
  std::size_t in_ch = config_.in_channels;
  for (std::size_t b = 0; b < 3; ++b) {
    const bool pooled_block = b > 0;  // Conv Block 1 preserves the resolution
    std::size_t conv_stride = 1;
    if (pooled_block && config_.pooling == DiscPooling::kStridedConv) conv_stride = 2;
    convs_.emplace_back(in_ch, widths[b], k, conv_stride, pad, true, rng);
    relus_.emplace_back();
    max_pools_.emplace_back(2, 2);
    avg_pools_.emplace_back(2, 2);
    in_ch = widths[b];
  }
  head_ = nn::Linear(widths.back(), 2, rng);
}

ViewProbs ViewDiscriminator::forward(const FeatureMaps& maps, bool cache_for_backward) {
  require(maps.values.dim(1) == config_.in_channels,
          "ViewDiscriminator: expected " + std::to_string(config_.in_channels) +
              " input channels, got " + maps.values.shape_str());
  Tensor h = maps.values;
  for (std::size_t b = 0; b < 3; ++b) {
    h = convs_[b].forward(h, cache_for_backward);
    if (b > 0 && config_.pooling == DiscPooling::kMaxPool)
      h = max_pools_[b].forward(h, cache_for_backward);
    if (b > 0 && config_.pooling == DiscPooling::kAvgPool)
      h = avg_pools_[b].forward(h, cache_for_backward);
    h = relus_[b].forward(h, cache_for_backward);
  }
  h = gap_.forward(h, cache_for_backward);
  Tensor logits = head_.forward(h, cache_for_backward);
  ViewProbs out{nn::softmax_rows(logits)};
  if (cache_for_backward) cached_probs_ = out.q;
  return out;
}

Tensor ViewDiscriminator::backward(const Tensor& logit_grad) {
  Tensor g = head_.backward(logit_grad);
  g = gap_.backward(g);
  for (std::size_t b = 3; b-- > 0;) {
    g = relus_[b].backward(g);
    if (b > 0 && config_.pooling == DiscPooling::kMaxPool) g = max_pools_[b].backward(g);
    if (b > 0 && config_.pooling == DiscPooling::kAvgPool) g = avg_pools_[b].backward(g);
    g = convs_[b].backward(g);
  }
  return g;
}

void ViewDiscriminator::collect(const std::string& prefix, std::vector<nn::ParamRef>& params) {
  for (std::size_t b = 0; b < 3; ++b)
    convs_[b].collect(prefix + ".block" + std::to_string(b + 1) + ".conv", params);
  head_.collect(prefix + ".head", params);
}

}  // namespace pvda
