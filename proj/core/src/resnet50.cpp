#include "pvda/common.hpp"
#include "pvda/encoder.hpp"

namespace pvda {

using Bottleneck = ResNet50Backbone::Bottleneck;

Bottleneck::Bottleneck(std::size_t in_ch, std::size_t mid_ch, std::size_t out_ch,
                       std::size_t stride, Rng& rng)
    : reduce(in_ch, mid_ch, 1, 1, 0, false, rng),
      spatial(mid_ch, mid_ch, 3, stride, 1, false, rng),
      expand(mid_ch, out_ch, 1, 1, 0, false, rng),
      bn1(mid_ch),
      bn2(mid_ch),
      bn3(out_ch) {
  if (in_ch != out_ch || stride != 1) {
    has_projection = true;
    project = nn::Conv2d(in_ch, out_ch, 1, stride, 0, false, rng);
    bn_project = nn::BatchNorm2d(out_ch);
  }
}

Tensor Bottleneck::forward(const Tensor& x, nn::Mode mode, bool cache_for_backward) {
  Tensor h = reduce.forward(x, cache_for_backward);
  h = bn1.forward(h, mode, cache_for_backward);
  h = relu1.forward(h, cache_for_backward);
  h = spatial.forward(h, cache_for_backward);
  h = bn2.forward(h, mode, cache_for_backward);
  h = relu2.forward(h, cache_for_backward);
  h = expand.forward(h, cache_for_backward);
  h = bn3.forward(h, mode, cache_for_backward);

  Tensor shortcut;
  if (has_projection) {
    shortcut = project.forward(x, cache_for_backward);
    shortcut = bn_project.forward(shortcut, mode, cache_for_backward);
  } else {
    shortcut = x;
  }
  require(h.same_shape(shortcut), "Bottleneck: residual shape mismatch");
  for (std::size_t i = 0; i < h.numel(); ++i) h[i] += shortcut[i];
  cached_shortcut_in_ = Tensor();  // identity shortcut needs no cache
  return relu_out.forward(h, cache_for_backward);
}

Tensor Bottleneck::backward(const Tensor& grad_out) {
  Tensor g = relu_out.backward(grad_out);

  // main path
  Tensor gm = bn3.backward(g);
  gm = expand.backward(gm);
  gm = relu2.backward(gm);
  gm = bn2.backward(gm);
  gm = spatial.backward(gm);
  gm = relu1.backward(gm);
  gm = bn1.backward(gm);
  gm = reduce.backward(gm);

  // shortcut path
  if (has_projection) {
    Tensor gs = bn_project.backward(g);
    gs = project.backward(gs);
    for (std::size_t i = 0; i < gm.numel(); ++i) gm[i] += gs[i];
  } else {
    for (std::size_t i = 0; i < gm.numel(); ++i) gm[i] += g[i];
  }
  return gm;
}

void Bottleneck::collect(const std::string& prefix, std::vector<nn::ParamRef>& params) {
  reduce.collect(prefix + ".reduce", params);
  bn1.collect(prefix + ".bn1", params);
  spatial.collect(prefix + ".spatial", params);
  bn2.collect(prefix + ".bn2", params);
  expand.collect(prefix + ".expand", params);
  bn3.collect(prefix + ".bn3", params);
  if (has_projection) {
    project.collect(prefix + ".project", params);
    bn_project.collect(prefix + ".bn_project", params);
  }
}

void Bottleneck::collect_buffers(const std::string& prefix, std::vector<nn::BufferRef>& buffers) {
  bn1.collect_buffers(prefix + ".bn1", buffers);
  bn2.collect_buffers(prefix + ".bn2", buffers);
  bn3.collect_buffers(prefix + ".bn3", buffers);
  if (has_projection) bn_project.collect_buffers(prefix + ".bn_project", buffers);
}

ResNet50Backbone::ResNet50Backbone(bool remove_final_downsample, Rng& rng)
    : stem_conv_(3, 64, 7, 2, 3, false, rng), stem_bn_(64) {
  struct StageSpec {
    std::size_t mid, out, blocks, stride;
  };
  const StageSpec stages[4] = {
      {64, 256, 3, 1},
      {128, 512, 4, 2},
      {256, 1024, 6, 2},
      {512, 2048, 3, remove_final_downsample ? std::size_t{1} : std::size_t{2}},
  };
  std::size_t in_ch = 64;
  for (const auto& st : stages) {
    for (std::size_t b = 0; b < st.blocks; ++b) {
      const std::size_t stride = b == 0 ? st.stride : 1;
      blocks_.push_back(std::make_unique<Bottleneck>(in_ch, st.mid, st.out, stride, rng));
      in_ch = st.out;
    }
  }
}

Tensor ResNet50Backbone::forward(const Tensor& x, nn::Mode mode, bool cache_for_backward) {
  Tensor h = stem_conv_.forward(x, cache_for_backward);
  h = stem_bn_.forward(h, mode, cache_for_backward);
  h = stem_relu_.forward(h, cache_for_backward);
  h = stem_pool_.forward(h, cache_for_backward);
  for (auto& block : blocks_) h = block->forward(h, mode, cache_for_backward);
  return h;
}

Tensor ResNet50Backbone::backward(const Tensor& grad_out) {
  Tensor g = grad_out;
  for (std::size_t b = blocks_.size(); b-- > 0;) g = blocks_[b]->backward(g);
  g = stem_pool_.backward(g);
  g = stem_relu_.backward(g);
  g = stem_bn_.backward(g);
  g = stem_conv_.backward(g);
  return g;
}

void ResNet50Backbone::collect(const std::string& prefix, std::vector<nn::ParamRef>& params) {
  stem_conv_.collect(prefix + ".stem.conv", params);
  stem_bn_.collect(prefix + ".stem.bn", params);
  for (std::size_t b = 0; b < blocks_.size(); ++b)
    blocks_[b]->collect(prefix + ".block" + std::to_string(b), params);
}

void ResNet50Backbone::collect_buffers(const std::string& prefix,
                                       std::vector<nn::BufferRef>& buffers) {
  stem_bn_.collect_buffers(prefix + ".stem.bn", buffers);
  for (std::size_t b = 0; b < blocks_.size(); ++b)
    blocks_[b]->collect_buffers(prefix + ".block" + std::to_string(b), buffers);
}

}  // namespace pvda
