// sercl/losses.cc

// Copyright 2026  The sercl authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "sercl/losses.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "sercl/error.h"

namespace sercl {

ClassWeights ClassWeights::uniform(int n) {
  if (n < 1) throw UsageError("class weights: n must be >= 1");
  ClassWeights cw;
  cw.w.assign(static_cast<size_t>(n), 1.0);
  return cw;
}

ClassWeights ClassWeights::from_counts(const std::vector<int> &counts) {
  if (counts.empty()) throw DataError("class weights: no classes");
  ClassWeights cw;
  cw.w.reserve(counts.size());
  for (size_t j = 0; j < counts.size(); ++j) {
    if (counts[j] < 1) {
      throw DataError("class weights: class " + std::to_string(j) +
                      " has no samples");
    }
    cw.w.push_back(1.0 / static_cast<double>(counts[j]));
  }
  double sum = 0.0;
  for (double x : cw.w) sum += x;
  const double scale = static_cast<double>(cw.w.size()) / sum;
  for (double &x : cw.w) x *= scale;
  return cw;
}

void ClassWeights::validate() const {
  if (w.empty()) throw DataError("class weights: empty");
  double sum = 0.0;
  for (double x : w) {
    if (!(x > 0.0) || !std::isfinite(x)) {
      throw DataError("class weights: weights must be positive and finite");
    }
    sum += x;
  }
  if (std::abs(sum / static_cast<double>(w.size()) - 1.0) > 1e-9) {
    throw DataError("class weights: not normalized to mean 1");
  }
}

CenterBank CenterBank::init(int n_classes, int feature_dim, double alpha) {
  if (n_classes < 1 || feature_dim < 1) {
    throw UsageError("center bank: dimensions must be positive");
  }
  CenterBank b;
  b.centers = Tensor::zeros({n_classes, feature_dim});
  b.alpha = alpha;
  b.iteration = 0;
  b.validate();
  return b;
}

void CenterBank::validate() const {
  if (centers.rank() != 2) throw DataError("center bank: centers must be 2-d");
  if (!centers.all_finite()) {
    throw DataError("center bank: non-finite center");
  }
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw DataError("center bank: alpha outside [0, 1]");
  }
}

void JointLossConfig::validate() const {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw UsageError("joint loss: lambda must be a nonnegative real");
  }
}

namespace {

// sum over samples of their class weight, the Eq.-style normalizer
double weight_normalizer(const std::vector<int> &labels,
                         const ClassWeights &w) {
  double s = 0.0;
  for (int y : labels) s += w.w[static_cast<size_t>(y)];
  return s;
}

void check_labels(const std::vector<int> &labels, int n) {
  for (int y : labels) {
    if (y < 0 || y >= n) {
      throw DataError("labels: class " + std::to_string(y) + " outside 0.." +
                      std::to_string(n - 1));
    }
  }
}

}  // namespace

double weighted_softmax_ce(const Tensor &logits,
                           const std::vector<int> &labels,
                           const ClassWeights &w) {
  if (logits.rank() != 2 || logits.dim(0) < 1) {
    throw DataError("softmax ce: logits must be a nonempty matrix");
  }
  if (static_cast<int>(labels.size()) != logits.dim(0)) {
    throw DataError("softmax ce: label count does not match logits rows");
  }
  if (logits.dim(1) != w.size()) {
    throw DataError("softmax ce: weight count does not match logit columns");
  }
  if (!logits.all_finite()) throw DataError("softmax ce: non-finite logits");
  w.validate();
  check_labels(labels, logits.dim(1));
  const int m = logits.dim(0), n = logits.dim(1);
  double acc = 0.0;
  for (int i = 0; i < m; ++i) {
    double mx = logits.at(i, 0);
    for (int j = 1; j < n; ++j) mx = std::max(mx, logits.at(i, j));
    double se = 0.0;
    for (int j = 0; j < n; ++j) se += std::exp(logits.at(i, j) - mx);
    const double lse = mx + std::log(se);
    const int y = labels[static_cast<size_t>(i)];
    acc += w.w[static_cast<size_t>(y)] * (lse - logits.at(i, y));
  }
  return acc / weight_normalizer(labels, w);
}

double weighted_center_loss(const FeatureBatch &fb, const CenterBank &bank,
                            const ClassWeights &w) {
  bank.validate();
  fb.validate(bank.n_classes());
  if (fb.z.dim(1) != bank.feature_dim()) {
    throw DataError("center loss: feature dimension does not match centers");
  }
  if (w.size() != bank.n_classes()) {
    throw DataError("center loss: weight count does not match classes");
  }
  w.validate();
  const int m = fb.z.dim(0), d = fb.z.dim(1);
  double acc = 0.0;
  for (int i = 0; i < m; ++i) {
    const int y = fb.labels[static_cast<size_t>(i)];
    double sq = 0.0;
    for (int k = 0; k < d; ++k) {
      const double diff = fb.z.at(i, k) - bank.centers.at(y, k);
      sq += diff * diff;
    }
    acc += w.w[static_cast<size_t>(y)] * sq;
  }
  return acc / weight_normalizer(fb.labels, w);
}

BatchCenters batch_class_centers(const FeatureBatch &fb, int n_classes) {
  fb.validate(n_classes);
  const int m = fb.z.dim(0), d = fb.z.dim(1);
  BatchCenters bc;
  bc.centers = Tensor::zeros({n_classes, d});
  bc.counts.assign(static_cast<size_t>(n_classes), 0);
  for (int i = 0; i < m; ++i) {
    const int y = fb.labels[static_cast<size_t>(i)];
    bc.counts[static_cast<size_t>(y)] += 1;
    for (int k = 0; k < d; ++k) bc.centers.at(y, k) += fb.z.at(i, k);
  }
  for (int j = 0; j < n_classes; ++j) {
    const int c = bc.counts[static_cast<size_t>(j)];
    if (c > 0) {
      for (int k = 0; k < d; ++k) bc.centers.at(j, k) /= c;
    }
  }
  return bc;
}

void update_centers(CenterBank &bank, const BatchCenters &bc) {
  bank.validate();
  if (!bc.centers.same_shape(bank.centers) ||
      static_cast<int>(bc.counts.size()) != bank.n_classes()) {
    throw DataError("update centers: batch centers shape mismatch");
  }
  const int n = bank.n_classes(), d = bank.feature_dim();
  for (int j = 0; j < n; ++j) {
    if (bc.counts[static_cast<size_t>(j)] == 0) continue;
    for (int k = 0; k < d; ++k) {
      bank.centers.at(j, k) = (1.0 - bank.alpha) * bank.centers.at(j, k) +
                              bank.alpha * bc.centers.at(j, k);
    }
  }
  bank.iteration += 1;
}

double joint_loss(double l_s, double l_c, const JointLossConfig &cfg) {
  cfg.validate();
  if (!std::isfinite(l_s) || !std::isfinite(l_c)) {
    throw NumericError("joint loss: non-finite component");
  }
  return l_s + cfg.lambda * l_c;
}

LossGrads loss_gradients(const Tensor &logits, const FeatureBatch &fb,
                         const CenterBank &bank, const ClassWeights &w,
                         double lambda, const Tensor &fc2_weight) {
  bank.validate();
  fb.validate(bank.n_classes());
  const int m = fb.z.dim(0), d = fb.z.dim(1), n = bank.n_classes();
  if (logits.rank() != 2 || logits.dim(0) != m || logits.dim(1) != n) {
    throw DataError("loss gradients: logits shape mismatch");
  }
  if (fc2_weight.rank() != 2 || fc2_weight.dim(0) != d ||
      fc2_weight.dim(1) != n) {
    throw DataError("loss gradients: fc2 weight shape mismatch");
  }
  if (d != bank.feature_dim()) {
    throw DataError("loss gradients: feature dimension mismatch");
  }
  w.validate();
  if (w.size() != n) {
    throw DataError("loss gradients: weight count mismatch");
  }
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw UsageError("loss gradients: bad lambda");
  }
  const double norm = weight_normalizer(fb.labels, w);

  LossGrads g;
  g.dlogits = Tensor::zeros({m, n});
  g.dz = Tensor::zeros({m, d});
  for (int i = 0; i < m; ++i) {
    const int y = fb.labels[static_cast<size_t>(i)];
    const double wi = w.w[static_cast<size_t>(y)] / norm;
    double mx = logits.at(i, 0);
    for (int j = 1; j < n; ++j) mx = std::max(mx, logits.at(i, j));
    double se = 0.0;
    for (int j = 0; j < n; ++j) se += std::exp(logits.at(i, j) - mx);
    for (int j = 0; j < n; ++j) {
      const double p = std::exp(logits.at(i, j) - mx) / se;
      g.dlogits.at(i, j) = wi * (p - (j == y ? 1.0 : 0.0));
    }
    // CE path through FC2 plus the center pull
    for (int k = 0; k < d; ++k) {
      double ce = 0.0;
      for (int j = 0; j < n; ++j) ce += fc2_weight.at(k, j) * g.dlogits.at(i, j);
      const double center =
          2.0 * lambda * wi * (fb.z.at(i, k) - bank.centers.at(y, k));
      g.dz.at(i, k) = ce + center;
    }
  }
  return g;
}

JointGraph build_joint_loss(Tape &t, const EncoderConfig &cfg,
                            const ParamVars &pv,
                            const std::vector<Tensor> &specs,
                            const std::vector<int> &labels,
                            const CenterBank &bank, const ClassWeights &w,
                            double lambda) {
  if (specs.empty()) throw DataError("joint loss: empty batch");
  if (specs.size() != labels.size()) {
    throw DataError("joint loss: label count does not match batch size");
  }
  bank.validate();
  w.validate();
  if (w.size() != cfg.n_classes || bank.n_classes() != cfg.n_classes ||
      bank.feature_dim() != cfg.feature_dim) {
    throw DataError("joint loss: class or feature dimensions disagree");
  }
  check_labels(labels, cfg.n_classes);
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw UsageError("joint loss: bad lambda");
  }
  const double norm = weight_normalizer(labels, w);

  JointGraph jg;
  Var ce_sum, center_sum;
  for (size_t i = 0; i < specs.size(); ++i) {
    const int y = labels[i];
    const double wi = w.w[static_cast<size_t>(y)];
    Var z = build_feature(t, cfg, pv, specs[i]);
    Var logits = build_logits(t, cfg, pv, z);
    jg.z.push_back(z);
    jg.logits.push_back(logits);

    Var ce = t.sub(t.logsumexp(logits), t.element(logits, y));
    Var ce_w = t.scale_shift(ce, wi, 0.0);
    ce_sum = ce_sum.valid() ? t.add(ce_sum, ce_w) : ce_w;

    if (lambda > 0.0) {
      Tensor c_row = Tensor::zeros({cfg.feature_dim});
      for (int k = 0; k < cfg.feature_dim; ++k) {
        c_row.at(k) = bank.centers.at(y, k);
      }
      Var diff = t.sub(z, t.constant(std::move(c_row)));
      Var sq = t.sum(t.mul(diff, diff));
      Var sq_w = t.scale_shift(sq, wi, 0.0);
      center_sum = center_sum.valid() ? t.add(center_sum, sq_w) : sq_w;
    }
  }
  Var loss = t.scale_shift(ce_sum, 1.0 / norm, 0.0);
  if (lambda > 0.0) {
    loss = t.add(loss, t.scale_shift(center_sum, lambda / norm, 0.0));
  }
  jg.loss = loss;
  return jg;
}

}  // namespace sercl
