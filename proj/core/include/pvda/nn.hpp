#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "pvda/rng.hpp"
#include "pvda/tensor.hpp"

namespace pvda::nn {

enum class Mode { kTrain, kEval };

// Named handles into a module's learnable state, used by optimizers and the
// checkpoint container. Paths are stable ("encoder.backbone.conv1.weight").
struct ParamRef {
  std::string path;
  Tensor* value = nullptr;
  Tensor* grad = nullptr;
};

// Non-learnable persistent state (batch-norm running statistics).
struct BufferRef {
  std::string path;
  Tensor* value = nullptr;
};

void zero_grads(const std::vector<ParamRef>& params);

// 2D convolution over N x C x H x W batches, im2col + GEMM.
class Conv2d {
 public:
  Conv2d() = default;
  Conv2d(std::size_t in_ch, std::size_t out_ch, std::size_t kernel, std::size_t stride,
         std::size_t pad, bool with_bias, Rng& rng);

  Tensor forward(const Tensor& x, bool cache_for_backward);
  // Accumulates weight/bias gradients, returns gradient w.r.t. the input.
  Tensor backward(const Tensor& grad_out);

  void collect(const std::string& prefix, std::vector<ParamRef>& out);
  std::size_t out_size(std::size_t in_size) const;
  std::size_t in_channels() const { return in_ch_; }
  std::size_t out_channels() const { return out_ch_; }

  Tensor& weight() { return weight_; }
  Tensor& bias() { return bias_; }

 private:
  void im2col(const Tensor& x, std::size_t n, std::size_t h_out, std::size_t w_out,
              std::vector<double>& col) const;

  std::size_t in_ch_ = 0, out_ch_ = 0, kernel_ = 0, stride_ = 1, pad_ = 0;
  bool with_bias_ = true;
  Tensor weight_, weight_grad_;  // O x I x k x k
  Tensor bias_, bias_grad_;      // O
  Tensor cached_x_;
};

// Batch norm over the channel axis of N x C x H x W.
class BatchNorm2d {
 public:
  BatchNorm2d() = default;
  explicit BatchNorm2d(std::size_t channels, double eps = 1e-5, double momentum = 0.1);

  Tensor forward(const Tensor& x, Mode mode, bool cache_for_backward);
  Tensor backward(const Tensor& grad_out);

  void collect(const std::string& prefix, std::vector<ParamRef>& out);
  void collect_buffers(const std::string& prefix, std::vector<BufferRef>& out);

  Tensor& gamma() { return gamma_; }
  Tensor& beta() { return beta_; }

 private:
  std::size_t channels_ = 0;
  double eps_ = 1e-5, momentum_ = 0.1;
  Tensor gamma_, gamma_grad_, beta_, beta_grad_;
  Tensor running_mean_, running_var_;
  // backward cache
  Tensor cached_xhat_;
  std::vector<double> cached_inv_std_;
  Mode cached_mode_ = Mode::kTrain;
};

// Batch norm over N x C feature matrices (the part-refinement branches).
class BatchNorm1d {
 public:
  BatchNorm1d() = default;
  explicit BatchNorm1d(std::size_t features, double eps = 1e-5, double momentum = 0.1);

  Tensor forward(const Tensor& x, Mode mode, bool cache_for_backward);
  Tensor backward(const Tensor& grad_out);

  void collect(const std::string& prefix, std::vector<ParamRef>& out);
  void collect_buffers(const std::string& prefix, std::vector<BufferRef>& out);

 private:
  std::size_t features_ = 0;
  double eps_ = 1e-5, momentum_ = 0.1;
  Tensor gamma_, gamma_grad_, beta_, beta_grad_;
  Tensor running_mean_, running_var_;
  Tensor cached_xhat_;
  std::vector<double> cached_inv_std_;
  Mode cached_mode_ = Mode::kTrain;
};

class ReLU {
 public:
  Tensor forward(const Tensor& x, bool cache_for_backward);
  Tensor backward(const Tensor& grad_out) const;

 private:
  std::vector<unsigned char> mask_;
};

class MaxPool2d {
 public:
  MaxPool2d() = default;
  MaxPool2d(std::size_t kernel, std::size_t stride, std::size_t pad = 0)
      : kernel_(kernel), stride_(stride), pad_(pad) {}

  Tensor forward(const Tensor& x, bool cache_for_backward);
  Tensor backward(const Tensor& grad_out) const;
  std::size_t out_size(std::size_t in_size) const;

 private:
  std::size_t kernel_ = 2, stride_ = 2, pad_ = 0;
  std::vector<std::size_t> argmax_;
  std::vector<std::size_t> cached_in_shape_;
};

class AvgPool2d {
 public:
  AvgPool2d() = default;
  AvgPool2d(std::size_t kernel, std::size_t stride) : kernel_(kernel), stride_(stride) {}

  Tensor forward(const Tensor& x, bool cache_for_backward);
  Tensor backward(const Tensor& grad_out) const;
  std::size_t out_size(std::size_t in_size) const;

 private:
  std::size_t kernel_ = 2, stride_ = 2;
  std::vector<std::size_t> cached_in_shape_;
};

// N x C x H x W -> N x C spatial mean.
class GlobalAvgPool {
 public:
  Tensor forward(const Tensor& x, bool cache_for_backward);
  Tensor backward(const Tensor& grad_out) const;

 private:
  std::vector<std::size_t> cached_in_shape_;
};

class Linear {
 public:
  Linear() = default;
  Linear(std::size_t in_features, std::size_t out_features, Rng& rng);

  Tensor forward(const Tensor& x, bool cache_for_backward);
  Tensor backward(const Tensor& grad_out);

  void collect(const std::string& prefix, std::vector<ParamRef>& out);
  Tensor& weight() { return weight_; }
  Tensor& bias() { return bias_; }

 private:
  std::size_t in_ = 0, out_ = 0;
  Tensor weight_, weight_grad_;  // out x in
  Tensor bias_, bias_grad_;      // out
  Tensor cached_x_;
};

// Inverted dropout; identity in eval mode.
class Dropout {
 public:
  Dropout() = default;
  explicit Dropout(double p) : p_(p) {}

  Tensor forward(const Tensor& x, Mode mode, Rng& rng, bool cache_for_backward);
  Tensor backward(const Tensor& grad_out) const;

 private:
  double p_ = 0.5;
  std::vector<double> scale_mask_;
  bool identity_ = true;
};

// Row-wise numerically stable softmax over an N x C matrix.
Tensor softmax_rows(const Tensor& logits);

}  // namespace pvda::nn
