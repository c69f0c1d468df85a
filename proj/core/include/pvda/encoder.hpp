#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "pvda/nn.hpp"
#include "pvda/rng.hpp"
#include "pvda/tensor.hpp"

namespace pvda {

enum class BackboneKind { kFullResidual50, kTinyCnn };

BackboneKind backbone_from_name(const std::string& name);
const char* backbone_name(BackboneKind k);

struct EncoderConfig {
  BackboneKind backbone = BackboneKind::kFullResidual50;
  int image_size = 256;
  int d_embed = 512;
  int num_rings = 4;  // the partition is fixed to four square rings
  bool remove_final_downsample = true;
  std::vector<std::size_t> tiny_channels = {8, 16, 32, 64};
  int refine_depth = 1;

  std::size_t feature_channels() const;
  std::size_t feature_size() const;  // Hf (= Wf)
  void validate() const;
};

// Spatial backbone output, N x Cf x Hf x Wf.
struct FeatureMaps {
  Tensor values;

  std::size_t batch() const { return values.dim(0); }
  std::size_t channels() const { return values.dim(1); }
  std::size_t height() const { return values.dim(2); }
  std::size_t width() const { return values.dim(3); }
};

// Four per-ring embedding vectors, innermost first; each entry is N x d_embed.
struct PartEmbeddings {
  std::vector<Tensor> parts;
};

// --- square-ring partition ---------------------------------------------------

// Ring id (0 = innermost .. num_rings-1 = outermost) per cell, row-major Hf x Hf.
std::vector<int> square_ring_assignment(std::size_t hf, int num_rings = 4);
std::vector<std::size_t> square_ring_cell_counts(std::size_t hf, int num_rings = 4);

// Average-pools each ring of an N x C x Hf x Hf tensor to an N x C vector.
class SquareRingPool {
 public:
  explicit SquareRingPool(int num_rings = 4) : num_rings_(num_rings) {}

  std::vector<Tensor> forward(const Tensor& maps, bool cache_for_backward);
  Tensor backward(const std::vector<Tensor>& part_grads) const;

 private:
  int num_rings_ = 4;
  std::vector<std::size_t> cached_in_shape_;
};

std::vector<Tensor> square_ring_partition(const Tensor& maps, int num_rings = 4);

// --- backbones ---------------------------------------------------------------

// Four 3x3 conv stages (stride 2 in the second), BN + ReLU each; total stride 2.
// The desk-scale stand-in for the full residual backbone.
class TinyCnnBackbone {
 public:
  TinyCnnBackbone() = default;
  TinyCnnBackbone(const std::vector<std::size_t>& channels, Rng& rng);

  Tensor forward(const Tensor& x, nn::Mode mode, bool cache_for_backward);
  Tensor backward(const Tensor& grad_out);
  void collect(const std::string& prefix, std::vector<nn::ParamRef>& params);
  void collect_buffers(const std::string& prefix, std::vector<nn::BufferRef>& buffers);
  std::size_t out_channels() const { return channels_.back(); }

 private:
  std::vector<std::size_t> channels_;
  std::vector<nn::Conv2d> convs_;
  std::vector<nn::BatchNorm2d> bns_;
  std::vector<nn::ReLU> relus_;
};

// Standard 50-layer bottleneck residual network up to the fifth block's output;
// the final stage's stride is dropped when remove_final_downsample is set so a
// 256 input yields 16 x 16 x 2048 maps.
class ResNet50Backbone {
 public:
  ResNet50Backbone() = default;
  ResNet50Backbone(bool remove_final_downsample, Rng& rng);

  Tensor forward(const Tensor& x, nn::Mode mode, bool cache_for_backward);
  Tensor backward(const Tensor& grad_out);
  void collect(const std::string& prefix, std::vector<nn::ParamRef>& params);
  void collect_buffers(const std::string& prefix, std::vector<nn::BufferRef>& buffers);
  std::size_t out_channels() const { return 2048; }

  struct Bottleneck {
    Bottleneck(std::size_t in_ch, std::size_t mid_ch, std::size_t out_ch, std::size_t stride,
               Rng& rng);
    Tensor forward(const Tensor& x, nn::Mode mode, bool cache_for_backward);
    Tensor backward(const Tensor& grad_out);
    void collect(const std::string& prefix, std::vector<nn::ParamRef>& params);
    void collect_buffers(const std::string& prefix, std::vector<nn::BufferRef>& buffers);

    nn::Conv2d reduce, spatial, expand;
    nn::BatchNorm2d bn1, bn2, bn3;
    nn::ReLU relu1, relu2, relu_out;
    bool has_projection = false;
    nn::Conv2d project;
    nn::BatchNorm2d bn_project;
    Tensor cached_shortcut_in_;
  };

 private:
  nn::Conv2d stem_conv_;
  nn::BatchNorm2d stem_bn_;
  nn::ReLU stem_relu_;
  nn::MaxPool2d stem_pool_{3, 2, 1};
  std::vector<std::unique_ptr<Bottleneck>> blocks_;
};

// --- per-part refinement -----------------------------------------------------

// Fully connected + batch-norm refinement; one branch per ring with disjoint
// parameters.
class RefineBranch {
 public:
  RefineBranch() = default;
  RefineBranch(std::size_t in_features, std::size_t d_embed, int depth, Rng& rng);

  Tensor forward(const Tensor& pooled, nn::Mode mode, bool cache_for_backward);
  Tensor backward(const Tensor& grad_out);
  void collect(const std::string& prefix, std::vector<nn::ParamRef>& params);
  void collect_buffers(const std::string& prefix, std::vector<nn::BufferRef>& buffers);

 private:
  int depth_ = 1;
  nn::Linear fc1_, fc2_;
  nn::BatchNorm1d bn1_, bn2_;
  nn::ReLU relu_;
};

// --- encoder -----------------------------------------------------------------

struct EncodeResult {
  FeatureMaps maps;
  PartEmbeddings parts;
};

// Backbone + square-ring partition + four refinement branches. The feature
// maps are part of the result because the view discriminator consumes them.
class Encoder {
 public:
  Encoder() = default;
  Encoder(const EncoderConfig& config, Rng& rng);

  const EncoderConfig& config() const { return config_; }

  // x is an N x 3 x S x S batch; S must equal config.image_size.
  EncodeResult forward(const Tensor& x, nn::Mode mode, bool cache_for_backward);
  // Feature maps only (the discriminator's step-1 input).
  FeatureMaps forward_maps(const Tensor& x, nn::Mode mode, bool cache_for_backward);

  // Backpropagates the per-part gradients plus an optional extra gradient on
  // the feature maps (the adversarial path). Returns the input gradient.
  Tensor backward(const std::vector<Tensor>& part_grads, const Tensor* maps_grad);

  void collect_backbone(std::vector<nn::ParamRef>& params);
  void collect_refine(std::vector<nn::ParamRef>& params);
  void collect_buffers(std::vector<nn::BufferRef>& buffers);

  // Applies pretrained tensors by parameter/buffer path; returns the number
  // of tensors applied, fails on shape mismatch.
  std::size_t load_backbone_weights(const std::map<std::string, Tensor>& tensors);

 private:
  void check_input(const Tensor& x) const;

  EncoderConfig config_;
  std::unique_ptr<TinyCnnBackbone> tiny_;
  std::unique_ptr<ResNet50Backbone> residual_;
  SquareRingPool pool_{4};
  std::vector<RefineBranch> branches_;
};

}  // namespace pvda
