#include "pvda/encoder.hpp"

#include <algorithm>
#include <cmath>

#include "pvda/common.hpp"

namespace pvda {

BackboneKind backbone_from_name(const std::string& name) {
  if (name == "resnet50") return BackboneKind::kFullResidual50;
  if (name == "tiny") return BackboneKind::kTinyCnn;
  fail<UsageError>("unknown backbone: " + name + " (expected resnet50|tiny)");
}

const char* backbone_name(BackboneKind k) {
  return k == BackboneKind::kFullResidual50 ? "resnet50" : "tiny";
}

std::size_t EncoderConfig::feature_channels() const {
  return backbone == BackboneKind::kFullResidual50 ? 2048 : tiny_channels.back();
}

std::size_t EncoderConfig::feature_size() const {
  const std::size_t stride =
      backbone == BackboneKind::kFullResidual50 ? (remove_final_downsample ? 16 : 32) : 2;
  return static_cast<std::size_t>(image_size) / stride;
}

void EncoderConfig::validate() const {
  require<UsageError>(num_rings == 4, "EncoderConfig: num_rings is fixed at 4");
  require<UsageError>(d_embed >= 1, "EncoderConfig: d_embed must be positive");
  require<UsageError>(refine_depth == 1 || refine_depth == 2,
                      "EncoderConfig: refine_depth must be 1 or 2");
  require<UsageError>(backbone != BackboneKind::kTinyCnn || tiny_channels.size() == 4,
                      "EncoderConfig: tiny backbone needs 4 channel widths");
  const std::size_t stride =
      backbone == BackboneKind::kFullResidual50 ? (remove_final_downsample ? 16 : 32) : 2;
  require<UsageError>(image_size % static_cast<int>(stride) == 0,
                      "EncoderConfig: image_size not divisible by backbone stride");
  const std::size_t hf = feature_size();
  require<UsageError>(hf % (2 * static_cast<std::size_t>(num_rings)) == 0,
                      "EncoderConfig: feature size " + std::to_string(hf) +
                          " must be divisible by 2*num_rings so rings have integer width");
}

// ---------------------------------------------------------------------------
// Square-ring partition

std::vector<int> square_ring_assignment(std::size_t hf, int num_rings) {
  require(num_rings == 4, "square_ring_assignment: four rings");
  require(hf % (2 * static_cast<std::size_t>(num_rings)) == 0,
          "square_ring_assignment: grid side " + std::to_string(hf) +
              " not divisible by 2*num_rings");
  const std::size_t band = hf / (2 * static_cast<std::size_t>(num_rings));
  std::vector<int> ring(hf * hf);
  for (std::size_t i = 0; i < hf; ++i) {
    for (std::size_t j = 0; j < hf; ++j) {
      // distance to the nearest border; the outermost band is ring 3
      const std::size_t m = std::min({i, j, hf - 1 - i, hf - 1 - j});
      ring[i * hf + j] = num_rings - 1 - static_cast<int>(m / band);
    }
  }
  return ring;
}

std::vector<std::size_t> square_ring_cell_counts(std::size_t hf, int num_rings) {
  const auto ring = square_ring_assignment(hf, num_rings);
  std::vector<std::size_t> counts(static_cast<std::size_t>(num_rings), 0);
  for (int r : ring) ++counts[static_cast<std::size_t>(r)];
  return counts;
}

std::vector<Tensor> SquareRingPool::forward(const Tensor& maps, bool cache_for_backward) {
  require(maps.ndim() == 4 && maps.dim(2) == maps.dim(3),
          "SquareRingPool: expected square N x C x H x H maps, got " + maps.shape_str());
  const std::size_t batch = maps.dim(0), ch = maps.dim(1), hf = maps.dim(2);
  const auto ring = square_ring_assignment(hf, num_rings_);
  const auto counts = square_ring_cell_counts(hf, num_rings_);

  std::vector<Tensor> pooled;
  for (int r = 0; r < num_rings_; ++r) pooled.emplace_back(std::vector<std::size_t>{batch, ch});
  for (std::size_t n = 0; n < batch; ++n) {
    for (std::size_t c = 0; c < ch; ++c) {
      const double* plane = maps.data() + (n * ch + c) * hf * hf;
      double sums[4] = {0, 0, 0, 0};
      for (std::size_t cell = 0; cell < hf * hf; ++cell) sums[ring[cell]] += plane[cell];
      for (int r = 0; r < num_rings_; ++r)
        pooled[static_cast<std::size_t>(r)](n, c) = sums[r] / static_cast<double>(counts[static_cast<std::size_t>(r)]);
    }
  }
  if (cache_for_backward) cached_in_shape_ = maps.shape();
  return pooled;
}

Tensor SquareRingPool::backward(const std::vector<Tensor>& part_grads) const {
  require(!cached_in_shape_.empty(), "SquareRingPool::backward without cached forward");
  const std::size_t batch = cached_in_shape_[0], ch = cached_in_shape_[1], hf = cached_in_shape_[2];
  const auto ring = square_ring_assignment(hf, num_rings_);
  const auto counts = square_ring_cell_counts(hf, num_rings_);
  Tensor grad(cached_in_shape_);
  for (std::size_t n = 0; n < batch; ++n) {
    for (std::size_t c = 0; c < ch; ++c) {
      double per_ring[4] = {0.0, 0.0, 0.0, 0.0};
      for (int r = 0; r < num_rings_; ++r)
        per_ring[r] = part_grads[static_cast<std::size_t>(r)](n, c) /
                      static_cast<double>(counts[static_cast<std::size_t>(r)]);
      double* plane = grad.data() + (n * ch + c) * hf * hf;
      for (std::size_t cell = 0; cell < hf * hf; ++cell) plane[cell] = per_ring[ring[cell]];
    }
  }
  return grad;
}

std::vector<Tensor> square_ring_partition(const Tensor& maps, int num_rings) {
  SquareRingPool pool(num_rings);
  return pool.forward(maps, false);
}

// ---------------------------------------------------------------------------
// Tiny backbone

TinyCnnBackbone::TinyCnnBackbone(const std::vector<std::size_t>& channels, Rng& rng)
    : channels_(channels) {
  require<UsageError>(channels.size() == 4, "TinyCnnBackbone: expected 4 channel widths");
  std::size_t in_ch = 3;
  for (std::size_t s = 0; s < 4; ++s) {
    const std::size_t stride = s == 1 ? 2 : 1;  // total stride 2
    convs_.emplace_back(in_ch, channels[s], 3, stride, 1, false, rng);
    bns_.emplace_back(channels[s]);
    relus_.emplace_back();
    in_ch = channels[s];
  }
}

Tensor TinyCnnBackbone::forward(const Tensor& x, nn::Mode mode, bool cache_for_backward) {
  Tensor h = x;
  for (std::size_t s = 0; s < convs_.size(); ++s) {
    h = convs_[s].forward(h, cache_for_backward);
    h = bns_[s].forward(h, mode, cache_for_backward);
    h = relus_[s].forward(h, cache_for_backward);
  }
  return h;
}

Tensor TinyCnnBackbone::backward(const Tensor& grad_out) {
  Tensor g = grad_out;
  for (std::size_t s = convs_.size(); s-- > 0;) {
    g = relus_[s].backward(g);
    g = bns_[s].backward(g);
    g = convs_[s].backward(g);
  }
  return g;
}

void TinyCnnBackbone::collect(const std::string& prefix, std::vector<nn::ParamRef>& params) {
  for (std::size_t s = 0; s < convs_.size(); ++s) {
    convs_[s].collect(prefix + ".conv" + std::to_string(s), params);
    bns_[s].collect(prefix + ".bn" + std::to_string(s), params);
  }
}

void TinyCnnBackbone::collect_buffers(const std::string& prefix,
                                      std::vector<nn::BufferRef>& buffers) {
  for (std::size_t s = 0; s < bns_.size(); ++s)
    bns_[s].collect_buffers(prefix + ".bn" + std::to_string(s), buffers);
}

// ---------------------------------------------------------------------------
// Refinement branches

RefineBranch::RefineBranch(std::size_t in_features, std::size_t d_embed, int depth, Rng& rng)
    : depth_(depth) {
  fc1_ = nn::Linear(in_features, d_embed, rng);
  bn1_ = nn::BatchNorm1d(d_embed);
  if (depth_ == 2) {
    fc2_ = nn::Linear(d_embed, d_embed, rng);
    bn2_ = nn::BatchNorm1d(d_embed);
  }
}

Tensor RefineBranch::forward(const Tensor& pooled, nn::Mode mode, bool cache_for_backward) {
  Tensor h = fc1_.forward(pooled, cache_for_backward);
  h = bn1_.forward(h, mode, cache_for_backward);
  if (depth_ == 2) {
    h = relu_.forward(h, cache_for_backward);
    h = fc2_.forward(h, cache_for_backward);
    h = bn2_.forward(h, mode, cache_for_backward);
  }
  return h;
}

Tensor RefineBranch::backward(const Tensor& grad_out) {
  Tensor g = grad_out;
  if (depth_ == 2) {
    g = bn2_.backward(g);
    g = fc2_.backward(g);
    g = relu_.backward(g);
  }
  g = bn1_.backward(g);
  g = fc1_.backward(g);
  return g;
}

void RefineBranch::collect(const std::string& prefix, std::vector<nn::ParamRef>& params) {
  fc1_.collect(prefix + ".fc1", params);
  bn1_.collect(prefix + ".bn1", params);
  if (depth_ == 2) {
    fc2_.collect(prefix + ".fc2", params);
    bn2_.collect(prefix + ".bn2", params);
  }
}

void RefineBranch::collect_buffers(const std::string& prefix,
                                   std::vector<nn::BufferRef>& buffers) {
  bn1_.collect_buffers(prefix + ".bn1", buffers);
  if (depth_ == 2) bn2_.collect_buffers(prefix + ".bn2", buffers);
}

// ---------------------------------------------------------------------------
// Encoder

Encoder::Encoder(const EncoderConfig& config, Rng& rng) : config_(config) {
  config_.validate();
  if (config_.backbone == BackboneKind::kTinyCnn) {
    tiny_ = std::make_unique<TinyCnnBackbone>(config_.tiny_channels, rng);
  } else {
    residual_ = std::make_unique<ResNet50Backbone>(config_.remove_final_downsample, rng);
  }
  const std::size_t cf = config_.feature_channels();
  for (int l = 0; l < config_.num_rings; ++l)
    branches_.emplace_back(cf, static_cast<std::size_t>(config_.d_embed), config_.refine_depth, rng);
}

void Encoder::check_input(const Tensor& x) const {
  require(x.ndim() == 4 && x.dim(1) == 3, "Encoder: expected N x 3 x S x S input, got " + x.shape_str());
  require(x.dim(2) == x.dim(3), "Encoder: inputs must be square, got " + x.shape_str());
  require(x.dim(2) == static_cast<std::size_t>(config_.image_size),
          "Encoder: input size " + std::to_string(x.dim(2)) + " does not match configured " +
              std::to_string(config_.image_size));
}

FeatureMaps Encoder::forward_maps(const Tensor& x, nn::Mode mode, bool cache_for_backward) {
  check_input(x);
  Tensor maps = tiny_ ? tiny_->forward(x, mode, cache_for_backward)
                      : residual_->forward(x, mode, cache_for_backward);
  return FeatureMaps{std::move(maps)};
}

EncodeResult Encoder::forward(const Tensor& x, nn::Mode mode, bool cache_for_backward) {
  EncodeResult result;
  result.maps = forward_maps(x, mode, cache_for_backward);
  const auto pooled = pool_.forward(result.maps.values, cache_for_backward);
  result.parts.parts.reserve(branches_.size());
  for (std::size_t l = 0; l < branches_.size(); ++l)
    result.parts.parts.push_back(branches_[l].forward(pooled[l], mode, cache_for_backward));
  return result;
}

Tensor Encoder::backward(const std::vector<Tensor>& part_grads, const Tensor* maps_grad) {
  require(part_grads.size() == branches_.size(), "Encoder::backward: need one gradient per part");
  std::vector<Tensor> pooled_grads;
  pooled_grads.reserve(branches_.size());
  for (std::size_t l = 0; l < branches_.size(); ++l)
    pooled_grads.push_back(branches_[l].backward(part_grads[l]));
  Tensor maps_total = pool_.backward(pooled_grads);
  if (maps_grad) {
    require(maps_grad->same_shape(maps_total), "Encoder::backward: maps gradient shape mismatch");
    for (std::size_t i = 0; i < maps_total.numel(); ++i) maps_total[i] += (*maps_grad)[i];
  }
  return tiny_ ? tiny_->backward(maps_total) : residual_->backward(maps_total);
}

void Encoder::collect_backbone(std::vector<nn::ParamRef>& params) {
  if (tiny_)
    tiny_->collect("encoder.backbone", params);
  else
    residual_->collect("encoder.backbone", params);
}

void Encoder::collect_refine(std::vector<nn::ParamRef>& params) {
  for (std::size_t l = 0; l < branches_.size(); ++l)
    branches_[l].collect("encoder.branch" + std::to_string(l + 1), params);
}

void Encoder::collect_buffers(std::vector<nn::BufferRef>& buffers) {
  if (tiny_)
    tiny_->collect_buffers("encoder.backbone", buffers);
  else
    residual_->collect_buffers("encoder.backbone", buffers);
  for (std::size_t l = 0; l < branches_.size(); ++l)
    branches_[l].collect_buffers("encoder.branch" + std::to_string(l + 1), buffers);
}

std::size_t Encoder::load_backbone_weights(const std::map<std::string, Tensor>& tensors) {
  std::vector<nn::ParamRef> params;
  collect_backbone(params);
  std::vector<nn::BufferRef> buffers;
  collect_buffers(buffers);

  std::size_t applied = 0;
  for (auto& p : params) {
    const auto it = tensors.find(p.path);
    if (it == tensors.end()) continue;
    require<DataError>(it->second.same_shape(*p.value),
                       "pretrained tensor shape mismatch for " + p.path);
    *p.value = it->second;
    ++applied;
  }
  for (auto& b : buffers) {
    const auto it = tensors.find(b.path);
    if (it == tensors.end()) continue;
    require<DataError>(it->second.same_shape(*b.value),
                       "pretrained tensor shape mismatch for " + b.path);
    *b.value = it->second;
    ++applied;
  }
  return applied;
}

}  // namespace pvda
