#include "pvda/nn.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>

#include "pvda/common.hpp"

namespace pvda::nn {

namespace {

using MatMap = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using ConstMatMap =
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

std::size_t conv_out(std::size_t in, std::size_t k, std::size_t s, std::size_t p) {
  require(in + 2 * p >= k, "conv/pool kernel larger than padded input");
  return (in + 2 * p - k) / s + 1;
}

}  // namespace

void zero_grads(const std::vector<ParamRef>& params) {
  for (const auto& p : params) p.grad->zero();
}

// ---------------------------------------------------------------------------
// Conv2d

Conv2d::Conv2d(std::size_t in_ch, std::size_t out_ch, std::size_t kernel, std::size_t stride,
               std::size_t pad, bool with_bias, Rng& rng)
    : in_ch_(in_ch), out_ch_(out_ch), kernel_(kernel), stride_(stride), pad_(pad),
      with_bias_(with_bias) {
  weight_ = Tensor({out_ch, in_ch, kernel, kernel});
  weight_grad_ = Tensor({out_ch, in_ch, kernel, kernel});
  const double std = std::sqrt(2.0 / static_cast<double>(in_ch * kernel * kernel));
  for (std::size_t i = 0; i < weight_.numel(); ++i) weight_[i] = rng.normal(0.0, std);
  if (with_bias_) {
    bias_ = Tensor({out_ch});
    bias_grad_ = Tensor({out_ch});
  }
}

std::size_t Conv2d::out_size(std::size_t in_size) const {
  return conv_out(in_size, kernel_, stride_, pad_);
}

void Conv2d::im2col(const Tensor& x, std::size_t n, std::size_t h_out, std::size_t w_out,
                    std::vector<double>& col) const {
  const std::size_t h_in = x.dim(2), w_in = x.dim(3);
  const std::size_t patch = in_ch_ * kernel_ * kernel_;
  col.assign(patch * h_out * w_out, 0.0);
  const double* xn = x.data() + n * in_ch_ * h_in * w_in;
  std::size_t row = 0;
  for (std::size_t c = 0; c < in_ch_; ++c) {
    const double* xc = xn + c * h_in * w_in;
    for (std::size_t ki = 0; ki < kernel_; ++ki) {
      for (std::size_t kj = 0; kj < kernel_; ++kj, ++row) {
        double* dst = col.data() + row * h_out * w_out;
        for (std::size_t oi = 0; oi < h_out; ++oi) {
          const std::ptrdiff_t ii = static_cast<std::ptrdiff_t>(oi * stride_ + ki) -
                                    static_cast<std::ptrdiff_t>(pad_);
          if (ii < 0 || ii >= static_cast<std::ptrdiff_t>(h_in)) {
            dst += w_out;
            continue;
          }
          const double* src_row = xc + static_cast<std::size_t>(ii) * w_in;
          for (std::size_t oj = 0; oj < w_out; ++oj, ++dst) {
            const std::ptrdiff_t jj = static_cast<std::ptrdiff_t>(oj * stride_ + kj) -
                                      static_cast<std::ptrdiff_t>(pad_);
            if (jj >= 0 && jj < static_cast<std::ptrdiff_t>(w_in)) *dst = src_row[jj];
          }
        }
      }
    }
  }
}

Tensor Conv2d::forward(const Tensor& x, bool cache_for_backward) {
  require(x.ndim() == 4 && x.dim(1) == in_ch_,
          "Conv2d: expected N x " + std::to_string(in_ch_) + " x H x W input, got " + x.shape_str());
  const std::size_t batch = x.dim(0);
  const std::size_t h_out = out_size(x.dim(2));
  const std::size_t w_out = out_size(x.dim(3));
  const std::size_t patch = in_ch_ * kernel_ * kernel_;

  Tensor y({batch, out_ch_, h_out, w_out});
  std::vector<double> col;
  ConstMatMap w_mat(weight_.data(), static_cast<Eigen::Index>(out_ch_),
                    static_cast<Eigen::Index>(patch));
  for (std::size_t n = 0; n < batch; ++n) {
    im2col(x, n, h_out, w_out, col);
    ConstMatMap col_mat(col.data(), static_cast<Eigen::Index>(patch),
                        static_cast<Eigen::Index>(h_out * w_out));
    MatMap y_mat(y.data() + n * out_ch_ * h_out * w_out, static_cast<Eigen::Index>(out_ch_),
                 static_cast<Eigen::Index>(h_out * w_out));
    y_mat.noalias() = w_mat * col_mat;
    if (with_bias_) {
      for (std::size_t o = 0; o < out_ch_; ++o) y_mat.row(static_cast<Eigen::Index>(o)).array() += bias_[o];
    }
  }
  if (cache_for_backward) {
    cached_x_ = x;
  } else {
    cached_x_ = Tensor();
  }
  return y;
}

Tensor Conv2d::backward(const Tensor& grad_out) {
  require(!cached_x_.empty(), "Conv2d::backward called without cached forward");
  const Tensor& x = cached_x_;
  const std::size_t batch = x.dim(0);
  const std::size_t h_in = x.dim(2), w_in = x.dim(3);
  const std::size_t h_out = grad_out.dim(2), w_out = grad_out.dim(3);
  const std::size_t patch = in_ch_ * kernel_ * kernel_;

  Tensor grad_in({batch, in_ch_, h_in, w_in});
  std::vector<double> col, dcol(patch * h_out * w_out);
  ConstMatMap w_mat(weight_.data(), static_cast<Eigen::Index>(out_ch_),
                    static_cast<Eigen::Index>(patch));
  MatMap wg_mat(weight_grad_.data(), static_cast<Eigen::Index>(out_ch_),
                static_cast<Eigen::Index>(patch));

  for (std::size_t n = 0; n < batch; ++n) {
    ConstMatMap go_mat(grad_out.data() + n * out_ch_ * h_out * w_out,
                       static_cast<Eigen::Index>(out_ch_),
                       static_cast<Eigen::Index>(h_out * w_out));
    // dW += dY * col^T
    im2col(x, n, h_out, w_out, col);
    ConstMatMap col_mat(col.data(), static_cast<Eigen::Index>(patch),
                        static_cast<Eigen::Index>(h_out * w_out));
    wg_mat.noalias() += go_mat * col_mat.transpose();
    if (with_bias_) {
      for (std::size_t o = 0; o < out_ch_; ++o)
        bias_grad_[o] += go_mat.row(static_cast<Eigen::Index>(o)).sum();
    }
    // dcol = W^T * dY, then scatter back (col2im).
    MatMap dcol_mat(dcol.data(), static_cast<Eigen::Index>(patch),
                    static_cast<Eigen::Index>(h_out * w_out));
    dcol_mat.noalias() = w_mat.transpose() * go_mat;

    double* gn = grad_in.data() + n * in_ch_ * h_in * w_in;
    std::size_t row = 0;
    for (std::size_t c = 0; c < in_ch_; ++c) {
      double* gc = gn + c * h_in * w_in;
      for (std::size_t ki = 0; ki < kernel_; ++ki) {
        for (std::size_t kj = 0; kj < kernel_; ++kj, ++row) {
          const double* src = dcol.data() + row * h_out * w_out;
          for (std::size_t oi = 0; oi < h_out; ++oi) {
            const std::ptrdiff_t ii = static_cast<std::ptrdiff_t>(oi * stride_ + ki) -
                                      static_cast<std::ptrdiff_t>(pad_);
            if (ii < 0 || ii >= static_cast<std::ptrdiff_t>(h_in)) {
              src += w_out;
              continue;
            }
            double* dst_row = gc + static_cast<std::size_t>(ii) * w_in;
            for (std::size_t oj = 0; oj < w_out; ++oj, ++src) {
              const std::ptrdiff_t jj = static_cast<std::ptrdiff_t>(oj * stride_ + kj) -
                                        static_cast<std::ptrdiff_t>(pad_);
              if (jj >= 0 && jj < static_cast<std::ptrdiff_t>(w_in))
                dst_row[jj] += *src;
            }
          }
        }
      }
    }
  }
  return grad_in;
}

void Conv2d::collect(const std::string& prefix, std::vector<ParamRef>& out) {
  out.push_back({prefix + ".weight", &weight_, &weight_grad_});
  if (with_bias_) out.push_back({prefix + ".bias", &bias_, &bias_grad_});
}

// ---------------------------------------------------------------------------
// BatchNorm2d

BatchNorm2d::BatchNorm2d(std::size_t channels, double eps, double momentum)
    : channels_(channels), eps_(eps), momentum_(momentum) {
  gamma_ = Tensor({channels}, 1.0);
  gamma_grad_ = Tensor({channels});
  beta_ = Tensor({channels});
  beta_grad_ = Tensor({channels});
  running_mean_ = Tensor({channels});
  running_var_ = Tensor({channels}, 1.0);
}

Tensor BatchNorm2d::forward(const Tensor& x, Mode mode, bool cache_for_backward) {
  require(x.ndim() == 4 && x.dim(1) == channels_, "BatchNorm2d: bad input " + x.shape_str());
  const std::size_t batch = x.dim(0), h = x.dim(2), w = x.dim(3);
  const std::size_t plane = h * w;
  const double m = static_cast<double>(batch * plane);

  Tensor y(x.shape());
  Tensor xhat;
  if (cache_for_backward) xhat = Tensor(x.shape());
  cached_inv_std_.assign(channels_, 0.0);
  cached_mode_ = mode;

  for (std::size_t c = 0; c < channels_; ++c) {
    double mean, var;
    if (mode == Mode::kTrain) {
      double sum = 0.0, sq = 0.0;
      for (std::size_t n = 0; n < batch; ++n) {
        const double* p = x.data() + (n * channels_ + c) * plane;
        for (std::size_t i = 0; i < plane; ++i) {
          sum += p[i];
          sq += p[i] * p[i];
        }
      }
      mean = sum / m;
      var = sq / m - mean * mean;
      if (var < 0.0) var = 0.0;
      const double unbiased = m > 1.0 ? var * m / (m - 1.0) : var;
      running_mean_[c] = (1.0 - momentum_) * running_mean_[c] + momentum_ * mean;
      running_var_[c] = (1.0 - momentum_) * running_var_[c] + momentum_ * unbiased;
    } else {
      mean = running_mean_[c];
      var = running_var_[c];
    }
    const double inv_std = 1.0 / std::sqrt(var + eps_);
    cached_inv_std_[c] = inv_std;
    const double g = gamma_[c], b = beta_[c];
    for (std::size_t n = 0; n < batch; ++n) {
      const double* p = x.data() + (n * channels_ + c) * plane;
      double* q = y.data() + (n * channels_ + c) * plane;
      double* xh = cache_for_backward ? xhat.data() + (n * channels_ + c) * plane : nullptr;
      for (std::size_t i = 0; i < plane; ++i) {
        const double h_val = (p[i] - mean) * inv_std;
        if (xh) xh[i] = h_val;
        q[i] = g * h_val + b;
      }
    }
  }
  cached_xhat_ = std::move(xhat);
  return y;
}

Tensor BatchNorm2d::backward(const Tensor& grad_out) {
  require(!cached_xhat_.empty(), "BatchNorm2d::backward called without cached forward");
  const std::size_t batch = grad_out.dim(0), h = grad_out.dim(2), w = grad_out.dim(3);
  const std::size_t plane = h * w;
  const double m = static_cast<double>(batch * plane);

  Tensor grad_in(grad_out.shape());
  for (std::size_t c = 0; c < channels_; ++c) {
    double sum_dy = 0.0, sum_dy_xhat = 0.0;
    for (std::size_t n = 0; n < batch; ++n) {
      const double* dy = grad_out.data() + (n * channels_ + c) * plane;
      const double* xh = cached_xhat_.data() + (n * channels_ + c) * plane;
      for (std::size_t i = 0; i < plane; ++i) {
        sum_dy += dy[i];
        sum_dy_xhat += dy[i] * xh[i];
      }
    }
    gamma_grad_[c] += sum_dy_xhat;
    beta_grad_[c] += sum_dy;
    const double g_inv = gamma_[c] * cached_inv_std_[c];
    if (cached_mode_ == Mode::kTrain) {
      const double mean_dy = sum_dy / m;
      const double mean_dy_xhat = sum_dy_xhat / m;
      for (std::size_t n = 0; n < batch; ++n) {
        const double* dy = grad_out.data() + (n * channels_ + c) * plane;
        const double* xh = cached_xhat_.data() + (n * channels_ + c) * plane;
        double* dx = grad_in.data() + (n * channels_ + c) * plane;
        for (std::size_t i = 0; i < plane; ++i)
          dx[i] = g_inv * (dy[i] - mean_dy - xh[i] * mean_dy_xhat);
      }
    } else {
      for (std::size_t n = 0; n < batch; ++n) {
        const double* dy = grad_out.data() + (n * channels_ + c) * plane;
        double* dx = grad_in.data() + (n * channels_ + c) * plane;
        for (std::size_t i = 0; i < plane; ++i) dx[i] = g_inv * dy[i];
      }
    }
  }
  return grad_in;
}

void BatchNorm2d::collect(const std::string& prefix, std::vector<ParamRef>& out) {
  out.push_back({prefix + ".gamma", &gamma_, &gamma_grad_});
  out.push_back({prefix + ".beta", &beta_, &beta_grad_});
}

void BatchNorm2d::collect_buffers(const std::string& prefix, std::vector<BufferRef>& out) {
  out.push_back({prefix + ".running_mean", &running_mean_});
  out.push_back({prefix + ".running_var", &running_var_});
}

// ---------------------------------------------------------------------------
// BatchNorm1d

BatchNorm1d::BatchNorm1d(std::size_t features, double eps, double momentum)
    : features_(features), eps_(eps), momentum_(momentum) {
  gamma_ = Tensor({features}, 1.0);
  gamma_grad_ = Tensor({features});
  beta_ = Tensor({features});
  beta_grad_ = Tensor({features});
  running_mean_ = Tensor({features});
  running_var_ = Tensor({features}, 1.0);
}

Tensor BatchNorm1d::forward(const Tensor& x, Mode mode, bool cache_for_backward) {
  require(x.ndim() == 2 && x.dim(1) == features_, "BatchNorm1d: bad input " + x.shape_str());
  const std::size_t batch = x.dim(0);
  const double m = static_cast<double>(batch);

  Tensor y(x.shape());
  Tensor xhat;
  if (cache_for_backward) xhat = Tensor(x.shape());
  cached_inv_std_.assign(features_, 0.0);
  cached_mode_ = mode;

  for (std::size_t c = 0; c < features_; ++c) {
    double mean, var;
    if (mode == Mode::kTrain) {
      require(batch > 1, "BatchNorm1d: train mode needs batch > 1");
      double sum = 0.0, sq = 0.0;
      for (std::size_t n = 0; n < batch; ++n) {
        const double v = x(n, c);
        sum += v;
        sq += v * v;
      }
      mean = sum / m;
      var = sq / m - mean * mean;
      if (var < 0.0) var = 0.0;
      const double unbiased = var * m / (m - 1.0);
      running_mean_[c] = (1.0 - momentum_) * running_mean_[c] + momentum_ * mean;
      running_var_[c] = (1.0 - momentum_) * running_var_[c] + momentum_ * unbiased;
    } else {
      mean = running_mean_[c];
      var = running_var_[c];
    }
    const double inv_std = 1.0 / std::sqrt(var + eps_);
    cached_inv_std_[c] = inv_std;
    for (std::size_t n = 0; n < batch; ++n) {
      const double h_val = (x(n, c) - mean) * inv_std;
      if (cache_for_backward) xhat(n, c) = h_val;
      y(n, c) = gamma_[c] * h_val + beta_[c];
    }
  }
  cached_xhat_ = std::move(xhat);
  return y;
}

Tensor BatchNorm1d::backward(const Tensor& grad_out) {
  require(!cached_xhat_.empty(), "BatchNorm1d::backward called without cached forward");
  const std::size_t batch = grad_out.dim(0);
  const double m = static_cast<double>(batch);

  Tensor grad_in(grad_out.shape());
  for (std::size_t c = 0; c < features_; ++c) {
    double sum_dy = 0.0, sum_dy_xhat = 0.0;
    for (std::size_t n = 0; n < batch; ++n) {
      sum_dy += grad_out(n, c);
      sum_dy_xhat += grad_out(n, c) * cached_xhat_(n, c);
    }
    gamma_grad_[c] += sum_dy_xhat;
    beta_grad_[c] += sum_dy;
    const double g_inv = gamma_[c] * cached_inv_std_[c];
    if (cached_mode_ == Mode::kTrain) {
      const double mean_dy = sum_dy / m;
      const double mean_dy_xhat = sum_dy_xhat / m;
      for (std::size_t n = 0; n < batch; ++n)
        grad_in(n, c) =
            g_inv * (grad_out(n, c) - mean_dy - cached_xhat_(n, c) * mean_dy_xhat);
    } else {
      for (std::size_t n = 0; n < batch; ++n) grad_in(n, c) = g_inv * grad_out(n, c);
    }
  }
  return grad_in;
}

void BatchNorm1d::collect(const std::string& prefix, std::vector<ParamRef>& out) {
  out.push_back({prefix + ".gamma", &gamma_, &gamma_grad_});
  out.push_back({prefix + ".beta", &beta_, &beta_grad_});
}

void BatchNorm1d::collect_buffers(const std::string& prefix, std::vector<BufferRef>& out) {
  out.push_back({prefix + ".running_mean", &running_mean_});
  out.push_back({prefix + ".running_var", &running_var_});
}

// ---------------------------------------------------------------------------
// ReLU

Tensor ReLU::forward(const Tensor& x, bool cache_for_backward) {
  Tensor y(x.shape());
  if (cache_for_backward) mask_.assign(x.numel(), 0);
  for (std::size_t i = 0; i < x.numel(); ++i) {
    const bool pos = x[i] > 0.0;
    y[i] = pos ? x[i] : 0.0;
    if (cache_for_backward) mask_[i] = pos ? 1 : 0;
  }
  return y;
}

Tensor ReLU::backward(const Tensor& grad_out) const {
  require(mask_.size() == grad_out.numel(), "ReLU::backward without cached forward");
  Tensor grad_in(grad_out.shape());
  for (std::size_t i = 0; i < grad_out.numel(); ++i)
    grad_in[i] = mask_[i] ? grad_out[i] : 0.0;
  return grad_in;
}

// ---------------------------------------------------------------------------
// MaxPool2d

std::size_t MaxPool2d::out_size(std::size_t in_size) const {
  return conv_out(in_size, kernel_, stride_, pad_);
}

Tensor MaxPool2d::forward(const Tensor& x, bool cache_for_backward) {
  const std::size_t batch = x.dim(0), ch = x.dim(1), h_in = x.dim(2), w_in = x.dim(3);
  const std::size_t h_out = out_size(h_in), w_out = out_size(w_in);
  Tensor y({batch, ch, h_out, w_out});
  if (cache_for_backward) {
    argmax_.assign(y.numel(), 0);
    cached_in_shape_ = x.shape();
  }
  std::size_t out_idx = 0;
  for (std::size_t n = 0; n < batch; ++n) {
    for (std::size_t c = 0; c < ch; ++c) {
      const double* plane = x.data() + (n * ch + c) * h_in * w_in;
      for (std::size_t oi = 0; oi < h_out; ++oi) {
        for (std::size_t oj = 0; oj < w_out; ++oj, ++out_idx) {
          double best = -std::numeric_limits<double>::infinity();
          std::size_t best_idx = 0;
          for (std::size_t ki = 0; ki < kernel_; ++ki) {
            const std::ptrdiff_t ii = static_cast<std::ptrdiff_t>(oi * stride_ + ki) -
                                      static_cast<std::ptrdiff_t>(pad_);
            if (ii < 0 || ii >= static_cast<std::ptrdiff_t>(h_in)) continue;
            for (std::size_t kj = 0; kj < kernel_; ++kj) {
              const std::ptrdiff_t jj = static_cast<std::ptrdiff_t>(oj * stride_ + kj) -
                                        static_cast<std::ptrdiff_t>(pad_);
              if (jj < 0 || jj >= static_cast<std::ptrdiff_t>(w_in)) continue;
              const std::size_t idx =
                  static_cast<std::size_t>(ii) * w_in + static_cast<std::size_t>(jj);
              if (plane[idx] > best) {
                best = plane[idx];
                best_idx = idx;
              }
            }
          }
          y[out_idx] = best;
          if (cache_for_backward) argmax_[out_idx] = (n * ch + c) * h_in * w_in + best_idx;
        }
      }
    }
  }
  return y;
}

Tensor MaxPool2d::backward(const Tensor& grad_out) const {
  require(argmax_.size() == grad_out.numel(), "MaxPool2d::backward without cached forward");
  Tensor grad_in(cached_in_shape_);
  for (std::size_t i = 0; i < grad_out.numel(); ++i) grad_in[argmax_[i]] += grad_out[i];
  return grad_in;
}

// ---------------------------------------------------------------------------
// AvgPool2d

std::size_t AvgPool2d::out_size(std::size_t in_size) const {
  return conv_out(in_size, kernel_, stride_, 0);
}

Tensor AvgPool2d::forward(const Tensor& x, bool cache_for_backward) {
  const std::size_t batch = x.dim(0), ch = x.dim(1), h_in = x.dim(2), w_in = x.dim(3);
  const std::size_t h_out = out_size(h_in), w_out = out_size(w_in);
  const double inv = 1.0 / static_cast<double>(kernel_ * kernel_);
  Tensor y({batch, ch, h_out, w_out});
  if (cache_for_backward) cached_in_shape_ = x.shape();
  std::size_t out_idx = 0;
  for (std::size_t n = 0; n < batch; ++n) {
    for (std::size_t c = 0; c < ch; ++c) {
      const double* plane = x.data() + (n * ch + c) * h_in * w_in;
      for (std::size_t oi = 0; oi < h_out; ++oi) {
        for (std::size_t oj = 0; oj < w_out; ++oj, ++out_idx) {
          double sum = 0.0;
          for (std::size_t ki = 0; ki < kernel_; ++ki)
            for (std::size_t kj = 0; kj < kernel_; ++kj)
              sum += plane[(oi * stride_ + ki) * w_in + oj * stride_ + kj];
          y[out_idx] = sum * inv;
        }
      }
    }
  }
  return y;
}

Tensor AvgPool2d::backward(const Tensor& grad_out) const {
  require(!cached_in_shape_.empty(), "AvgPool2d::backward without cached forward");
  const std::size_t batch = grad_out.dim(0), ch = grad_out.dim(1);
  const std::size_t h_out = grad_out.dim(2), w_out = grad_out.dim(3);
  const std::size_t h_in = cached_in_shape_[2], w_in = cached_in_shape_[3];
  const double inv = 1.0 / static_cast<double>(kernel_ * kernel_);
  Tensor grad_in(cached_in_shape_);
  std::size_t out_idx = 0;
  for (std::size_t n = 0; n < batch; ++n) {
    for (std::size_t c = 0; c < ch; ++c) {
      double* plane = grad_in.data() + (n * ch + c) * h_in * w_in;
      for (std::size_t oi = 0; oi < h_out; ++oi) {
        for (std::size_t oj = 0; oj < w_out; ++oj, ++out_idx) {
          const double g = grad_out[out_idx] * inv;
          for (std::size_t ki = 0; ki < kernel_; ++ki)
            for (std::size_t kj = 0; kj < kernel_; ++kj)
              plane[(oi * stride_ + ki) * w_in + oj * stride_ + kj] += g;
        }
      }
    }
  }
  return grad_in;
}

// ---------------------------------------------------------------------------
// GlobalAvgPool

Tensor GlobalAvgPool::forward(const Tensor& x, bool cache_for_backward) {
  const std::size_t batch = x.dim(0), ch = x.dim(1), plane = x.dim(2) * x.dim(3);
  if (cache_for_backward) cached_in_shape_ = x.shape();
  Tensor y({batch, ch});
  const double inv = 1.0 / static_cast<double>(plane);
  for (std::size_t n = 0; n < batch; ++n) {
    for (std::size_t c = 0; c < ch; ++c) {
      const double* p = x.data() + (n * ch + c) * plane;
      double sum = 0.0;
      for (std::size_t i = 0; i < plane; ++i) sum += p[i];
      y(n, c) = sum * inv;
    }
  }
  return y;
}

Tensor GlobalAvgPool::backward(const Tensor& grad_out) const {
  require(!cached_in_shape_.empty(), "GlobalAvgPool::backward without cached forward");
  const std::size_t batch = cached_in_shape_[0], ch = cached_in_shape_[1];
  const std::size_t plane = cached_in_shape_[2] * cached_in_shape_[3];
  const double inv = 1.0 / static_cast<double>(plane);
  Tensor grad_in(cached_in_shape_);
  for (std::size_t n = 0; n < batch; ++n) {
    for (std::size_t c = 0; c < ch; ++c) {
      double* p = grad_in.data() + (n * ch + c) * plane;
      const double g = grad_out(n, c) * inv;
      for (std::size_t i = 0; i < plane; ++i) p[i] = g;
    }
  }
  return grad_in;
}

// ---------------------------------------------------------------------------
// Linear

Linear::Linear(std::size_t in_features, std::size_t out_features, Rng& rng)
    : in_(in_features), out_(out_features) {
  weight_ = Tensor({out_, in_});
  weight_grad_ = Tensor({out_, in_});
  bias_ = Tensor({out_});
  bias_grad_ = Tensor({out_});
  const double bound = 1.0 / std::sqrt(static_cast<double>(in_));
  for (std::size_t i = 0; i < weight_.numel(); ++i) weight_[i] = rng.uniform(-bound, bound);
  for (std::size_t i = 0; i < out_; ++i) bias_[i] = rng.uniform(-bound, bound);
}

Tensor Linear::forward(const Tensor& x, bool cache_for_backward) {
  require(x.ndim() == 2 && x.dim(1) == in_, "Linear: bad input " + x.shape_str());
  const std::size_t batch = x.dim(0);
  Tensor y({batch, out_});
  ConstMatMap x_mat(x.data(), static_cast<Eigen::Index>(batch), static_cast<Eigen::Index>(in_));
  ConstMatMap w_mat(weight_.data(), static_cast<Eigen::Index>(out_),
                    static_cast<Eigen::Index>(in_));
  MatMap y_mat(y.data(), static_cast<Eigen::Index>(batch), static_cast<Eigen::Index>(out_));
  y_mat.noalias() = x_mat * w_mat.transpose();
  for (std::size_t n = 0; n < batch; ++n)
    for (std::size_t o = 0; o < out_; ++o) y(n, o) += bias_[o];
  cached_x_ = cache_for_backward ? x : Tensor();
  return y;
}

Tensor Linear::backward(const Tensor& grad_out) {
  require(!cached_x_.empty(), "Linear::backward called without cached forward");
  const std::size_t batch = cached_x_.dim(0);
  Tensor grad_in({batch, in_});
  ConstMatMap go_mat(grad_out.data(), static_cast<Eigen::Index>(batch),
                     static_cast<Eigen::Index>(out_));
  ConstMatMap x_mat(cached_x_.data(), static_cast<Eigen::Index>(batch),
                    static_cast<Eigen::Index>(in_));
  ConstMatMap w_mat(weight_.data(), static_cast<Eigen::Index>(out_),
                    static_cast<Eigen::Index>(in_));
  MatMap wg_mat(weight_grad_.data(), static_cast<Eigen::Index>(out_),
                static_cast<Eigen::Index>(in_));
  MatMap gi_mat(grad_in.data(), static_cast<Eigen::Index>(batch),
                static_cast<Eigen::Index>(in_));
  wg_mat.noalias() += go_mat.transpose() * x_mat;
  gi_mat.noalias() = go_mat * w_mat;
  for (std::size_t n = 0; n < batch; ++n)
    for (std::size_t o = 0; o < out_; ++o) bias_grad_[o] += grad_out(n, o);
  return grad_in;
}

void Linear::collect(const std::string& prefix, std::vector<ParamRef>& out) {
  out.push_back({prefix + ".weight", &weight_, &weight_grad_});
  out.push_back({prefix + ".bias", &bias_, &bias_grad_});
}

// ---------------------------------------------------------------------------
// Dropout

Tensor Dropout::forward(const Tensor& x, Mode mode, Rng& rng, bool cache_for_backward) {
  if (mode == Mode::kEval || p_ <= 0.0) {
    identity_ = true;
    return x;
  }
  identity_ = false;
  const double keep = 1.0 - p_;
  const double scale = 1.0 / keep;
  Tensor y(x.shape());
  if (cache_for_backward) scale_mask_.assign(x.numel(), 0.0);
  for (std::size_t i = 0; i < x.numel(); ++i) {
    const double s = rng.uniform() < keep ? scale : 0.0;
    y[i] = x[i] * s;
    if (cache_for_backward) scale_mask_[i] = s;
  }
  return y;
}

Tensor Dropout::backward(const Tensor& grad_out) const {
  if (identity_) return grad_out;
  require(scale_mask_.size() == grad_out.numel(), "Dropout::backward without cached forward");
  Tensor grad_in(grad_out.shape());
  for (std::size_t i = 0; i < grad_out.numel(); ++i) grad_in[i] = grad_out[i] * scale_mask_[i];
  return grad_in;
}

// ---------------------------------------------------------------------------

Tensor softmax_rows(const Tensor& logits) {
  require(logits.ndim() == 2, "softmax_rows expects N x C");
  const std::size_t batch = logits.dim(0), classes = logits.dim(1);
  Tensor probs(logits.shape());
  for (std::size_t n = 0; n < batch; ++n) {
    const double* z = logits.data() + n * classes;
    double* p = probs.data() + n * classes;
    double zmax = z[0];
    for (std::size_t c = 1; c < classes; ++c) zmax = std::max(zmax, z[c]);
    double sum = 0.0;
    for (std::size_t c = 0; c < classes; ++c) {
      p[c] = std::exp(z[c] - zmax);
      sum += p[c];
    }
    const double inv = 1.0 / sum;
    for (std::size_t c = 0; c < classes; ++c) p[c] *= inv;
  }
  return probs;
}

}  // namespace pvda::nn
