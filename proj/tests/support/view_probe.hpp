#pragma once

// View-invariance diagnostic used by the acceptance suite: global-average-pool
// features of frozen encoder maps, probed by a shrinkage-LDA linear classifier
// with a balanced decision threshold. LDA keeps the probe well-posed with very
// few satellite samples, where an iterative fit would be noise-bound.

#include <Eigen/Dense>

#include <cmath>
#include <vector>

#include "pvda/dataset.hpp"
#include "pvda/encoder.hpp"

namespace pvda::testsupport {

// One GAP feature vector (Cf dims) per sample; appends view labels
// (1 = UAV, 0 = satellite) to `labels` when given.
inline std::vector<std::vector<double>> gap_map_features(Encoder& encoder, const Dataset& ds,
                                                         std::vector<int>* labels) {
  std::vector<std::vector<double>> feats;
  feats.reserve(ds.size());
  for (std::size_t start = 0; start < ds.size(); start += 32) {
    const std::size_t count = std::min<std::size_t>(32, ds.size() - start);
    std::vector<ImageSample> chunk(ds.samples.begin() + static_cast<std::ptrdiff_t>(start),
                                   ds.samples.begin() + static_cast<std::ptrdiff_t>(start + count));
    const Tensor x = batch_to_nchw(chunk, ds.image_size);
    const FeatureMaps maps = encoder.forward_maps(x, nn::Mode::kEval, false);
    const std::size_t ch = maps.channels(), plane = maps.height() * maps.width();
    for (std::size_t i = 0; i < count; ++i) {
      std::vector<double> f(ch);
      for (std::size_t c = 0; c < ch; ++c) {
        const double* p = maps.values.data() + (i * ch + c) * plane;
        double s = 0.0;
        for (std::size_t j = 0; j < plane; ++j) s += p[j];
        f[c] = s / static_cast<double>(plane);
      }
      feats.push_back(std::move(f));
      if (labels) labels->push_back(chunk[i].view == View::kUav ? 1 : 0);
    }
  }
  return feats;
}

struct LinearViewProbe {
  std::vector<double> weights;
  double threshold = 0.0;

  int predict(const std::vector<double>& x) const {
    double z = 0.0;
    for (std::size_t j = 0; j < weights.size(); ++j) z += weights[j] * x[j];
    return z > threshold ? 1 : 0;
  }
};

inline LinearViewProbe fit_view_probe(const std::vector<std::vector<double>>& x,
                                      const std::vector<int>& y) {
  const std::size_t n = x.size(), d = x.front().size();
  Eigen::VectorXd mu0 = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d));
  Eigen::VectorXd mu1 = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d));
  double n0 = 0.0, n1 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    Eigen::Map<const Eigen::VectorXd> xi(x[i].data(), static_cast<Eigen::Index>(d));
    if (y[i]) {
      mu1 += xi;
      n1 += 1.0;
    } else {
      mu0 += xi;
      n0 += 1.0;
    }
  }
  mu0 /= n0;
  mu1 /= n1;

  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(d),
                                              static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < n; ++i) {
    Eigen::Map<const Eigen::VectorXd> xi(x[i].data(), static_cast<Eigen::Index>(d));
    const Eigen::VectorXd c = xi - (y[i] ? mu1 : mu0);
    cov += c * c.transpose();
  }
  cov /= static_cast<double>(n);

  // shrink toward a scaled identity; tiny classes otherwise make cov singular
  const double lambda = 0.5;
  const double scale = cov.trace() / static_cast<double>(d);
  Eigen::MatrixXd shrunk =
      (1.0 - lambda) * cov +
      lambda * scale * Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(d),
                                                 static_cast<Eigen::Index>(d));

  const Eigen::VectorXd w = shrunk.ldlt().solve(mu1 - mu0);
  LinearViewProbe probe;
  probe.weights.assign(w.data(), w.data() + d);
  probe.threshold = 0.5 * (w.dot(mu0) + w.dot(mu1));
  return probe;
}

inline double balanced_accuracy(const LinearViewProbe& probe,
                                const std::vector<std::vector<double>>& x,
                                const std::vector<int>& y) {
  double hit[2] = {0.0, 0.0}, tot[2] = {0.0, 0.0};
  for (std::size_t i = 0; i < x.size(); ++i) {
    tot[y[i]] += 1.0;
    if (probe.predict(x[i]) == y[i]) hit[y[i]] += 1.0;
  }
  return 0.5 * (hit[0] / tot[0] + hit[1] / tot[1]);
}

inline double view_probe_balanced_accuracy(const std::vector<std::vector<double>>& train_x,
                                           const std::vector<int>& train_y,
                                           const std::vector<std::vector<double>>& test_x,
                                           const std::vector<int>& test_y) {
  return balanced_accuracy(fit_view_probe(train_x, train_y), test_x, test_y);
}

}  // namespace pvda::testsupport
