// sercl/trainer.cc

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

#include "sercl/trainer.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "sercl/error.h"
#include "sercl/evaluation.h"
#include "sercl/rng.h"

namespace sercl {

void Dataset::validate(int n_classes) const {
  if (specs.size() != labels.size()) {
    throw DataError("dataset: spec and label counts differ");
  }
  if (labels.empty()) throw DataError("dataset: empty");
  for (size_t i = 0; i < specs.size(); ++i) {
    if (specs[i].rank() != 2 || specs[i].dim(0) < 1) {
      throw DataError("dataset: spectrogram " + std::to_string(i) +
                      " is not a (frames, bins) matrix");
    }
    const int y = labels[i];
    if (y < 0 || y >= n_classes) {
      throw DataError("dataset: label " + std::to_string(y) + " outside 0.." +
                      std::to_string(n_classes - 1));
    }
  }
}

std::vector<int> Dataset::class_counts(int n) const {
  std::vector<int> counts(static_cast<size_t>(n), 0);
  for (int y : labels) counts[static_cast<size_t>(y)] += 1;
  return counts;
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw UsageError("train: learning_rate must be > 0");
  if (batch_size < 1) throw UsageError("train: batch_size must be >= 1");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw UsageError("train: lambda must be a nonnegative real");
  }
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw UsageError("train: alpha must lie in [0, 1]");
  }
  if (max_epochs < 0) throw UsageError("train: max_epochs must be >= 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw UsageError("train: betas must lie in [0, 1)");
  }
  if (!(eps > 0.0)) throw UsageError("train: eps must be > 0");
  if (clip_norm < 0.0) throw UsageError("train: clip_norm must be >= 0");
}

AdamState AdamState::init(const ModelParams &p) {
  AdamState st;
  for (const auto &[name, tensor] : p.named()) {
    (void)name;
    st.m.push_back(Tensor::zeros(tensor->shape));
    st.v.push_back(Tensor::zeros(tensor->shape));
  }
  st.step = 0;
  return st;
}

ClassWeights class_weights_from_counts(const std::vector<int> &counts) {
  return ClassWeights::from_counts(counts);
}

std::vector<TrainBatch> make_batches(const Dataset &ds, int batch_size,
                                     std::uint64_t seed) {
  if (ds.size() < 1) throw DataError("make_batches: empty dataset");
  if (batch_size < 1) throw UsageError("make_batches: batch_size must be >= 1");
  std::vector<int> order(static_cast<size_t>(ds.size()));
  for (int i = 0; i < ds.size(); ++i) order[static_cast<size_t>(i)] = i;
  Rng rng(seed);
  for (size_t i = order.size(); i > 1; --i) {
    std::swap(order[i - 1], order[static_cast<size_t>(rng.below(i))]);
  }
  std::vector<TrainBatch> out;
  for (size_t pos = 0; pos < order.size(); pos += static_cast<size_t>(batch_size)) {
    const size_t end = std::min(order.size(), pos + static_cast<size_t>(batch_size));
    TrainBatch b;
    std::vector<Tensor> specs;
    for (size_t k = pos; k < end; ++k) {
      const int idx = order[k];
      b.indices.push_back(idx);
      b.labels.push_back(ds.labels[static_cast<size_t>(idx)]);
      specs.push_back(ds.specs[static_cast<size_t>(idx)]);
    }
    b.padded = pad_batch(specs);
    out.push_back(std::move(b));
  }
  return out;
}

void adam_step(ModelParams &params, const std::vector<Tensor> &grads,
               AdamState &st, const TrainConfig &cfg) {
  auto named = params.named();
  if (grads.size() != named.size() || st.m.size() != named.size()) {
    throw DataError("adam: gradient list does not match parameter list");
  }
  for (size_t i = 0; i < named.size(); ++i) {
    if (!grads[i].same_shape(*named[i].second)) {
      throw DataError("adam: gradient shape mismatch at " + named[i].first);
    }
  }

  double scale = 1.0;
  if (cfg.clip_norm > 0.0) {
    double sq = 0.0;
    for (const Tensor &g : grads) {
      for (double x : g.v) sq += x * x;
    }
    const double norm = std::sqrt(sq);
    if (norm > cfg.clip_norm) scale = cfg.clip_norm / norm;
  }

  st.step += 1;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(st.step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(st.step));
  for (size_t i = 0; i < named.size(); ++i) {
    Tensor &p = *named[i].second;
    Tensor &m = st.m[i];
    Tensor &v = st.v[i];
    const Tensor &g = grads[i];
    for (std::int64_t k = 0; k < p.numel(); ++k) {
      const double gk = scale * g.v[static_cast<size_t>(k)];
      m.v[static_cast<size_t>(k)] =
          cfg.beta1 * m.v[static_cast<size_t>(k)] + (1.0 - cfg.beta1) * gk;
      v.v[static_cast<size_t>(k)] =
          cfg.beta2 * v.v[static_cast<size_t>(k)] + (1.0 - cfg.beta2) * gk * gk;
      const double mhat = m.v[static_cast<size_t>(k)] / bc1;
      const double vhat = v.v[static_cast<size_t>(k)] / bc2;
      p.v[static_cast<size_t>(k)] -=
          cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.eps);
    }
  }
}

namespace {

std::vector<Tensor> batch_specs(const TrainBatch &b) {
  std::vector<Tensor> specs;
  specs.reserve(static_cast<size_t>(b.padded.size()));
  for (int i = 0; i < b.padded.size(); ++i) {
    const int vf = b.padded.valid_frames[static_cast<size_t>(i)];
    const int bins = b.padded.specs.dim(2);
    Tensor s = Tensor::zeros({vf, bins});
    for (int t = 0; t < vf; ++t)
      for (int f = 0; f < bins; ++f) s.at(t, f) = b.padded.specs.at(i, t, f);
    specs.push_back(std::move(s));
  }
  return specs;
}

}  // namespace

FitResult fit(const Dataset &train, const Dataset &dev,
              const EncoderConfig &ecfg, const TrainConfig &tcfg,
              const EpochObserver &observer) {
  ecfg.validate();
  tcfg.validate();
  train.validate(ecfg.n_classes);
  dev.validate(ecfg.n_classes);

  const ClassWeights w =
      tcfg.weighted ? class_weights_from_counts(train.class_counts(ecfg.n_classes))
                    : ClassWeights::uniform(ecfg.n_classes);

  FitResult res;
  ModelParams params = init_params(ecfg, tcfg.seed);
  CenterBank bank = CenterBank::init(ecfg.n_classes, ecfg.feature_dim, tcfg.alpha);
  AdamState adam = AdamState::init(params);
  res.best_params = params;
  res.best_centers = bank;

  for (int epoch = 1; epoch <= tcfg.max_epochs; ++epoch) {
    const std::vector<TrainBatch> batches = make_batches(
        train, tcfg.batch_size, tcfg.seed + static_cast<std::uint64_t>(epoch));
    double ls_sum = 0.0, lc_sum = 0.0;
    for (const TrainBatch &batch : batches) {
      const std::vector<Tensor> specs = batch_specs(batch);
      Tape t;
      ParamVars pv = declare_params(t, params, true);
      JointGraph jg = build_joint_loss(t, ecfg, pv, specs, batch.labels, bank,
                                       w, tcfg.lambda);
      const double loss = t.value(jg.loss).at(0);
      if (!std::isfinite(loss)) {
        throw NumericError("fit: non-finite loss at iteration " +
                           std::to_string(bank.iteration + 1));
      }
      t.backward(jg.loss);

      const int m = static_cast<int>(specs.size());
      FeatureBatch fb;
      fb.z = Tensor::zeros({m, ecfg.feature_dim});
      fb.labels = batch.labels;
      Tensor logits = Tensor::zeros({m, ecfg.n_classes});
      for (int i = 0; i < m; ++i) {
        const Tensor &zi = t.value(jg.z[static_cast<size_t>(i)]);
        for (int k = 0; k < ecfg.feature_dim; ++k) fb.z.at(i, k) = zi.at(k);
        const Tensor &li = t.value(jg.logits[static_cast<size_t>(i)]);
        for (int k = 0; k < ecfg.n_classes; ++k) logits.at(i, k) = li.at(k);
      }
      ls_sum += weighted_softmax_ce(logits, batch.labels, w);
      lc_sum += weighted_center_loss(fb, bank, w);

      std::vector<Tensor> grads;
      for (Var v : pv.flat()) grads.push_back(t.grad(v));
      adam_step(params, grads, adam, tcfg);
      update_centers(bank, batch_class_centers(fb, ecfg.n_classes));
    }

    const std::vector<int> dev_preds =
        predict(ecfg, params, dev, tcfg.batch_size);
    const ConfusionMatrix cm =
        confusion_matrix(dev_preds, dev.labels, ecfg.n_classes);
    EpochRecord rec;
    rec.epoch = epoch;
    rec.l_s = ls_sum / static_cast<double>(batches.size());
    rec.l_c = lc_sum / static_cast<double>(batches.size());
    rec.dev_ua = ua(cm);
    rec.dev_wa = wa(dev_preds, dev.labels);
    res.history.push_back(rec);

    if (rec.dev_ua > res.best_dev_ua || res.best_epoch < 0) {
      res.best_dev_ua = rec.dev_ua;
      res.best_epoch = epoch;
      res.best_params = params;
      res.best_centers = bank;
    }
    if (observer) observer(rec, params, bank);
  }
  return res;
}

std::vector<int> predict(const EncoderConfig &cfg, const ModelParams &p,
                         const Dataset &ds, int batch_size) {
  const FeatureBatch fb = encode_dataset(cfg, p, ds, batch_size);
  const Tensor logits = classify(cfg, p, fb.z);
  return argmax_rows(logits);
}

FeatureBatch encode_dataset(const EncoderConfig &cfg, const ModelParams &p,
                            const Dataset &ds, int batch_size) {
  cfg.validate();
  ds.validate(cfg.n_classes);
  if (batch_size < 1) throw UsageError("encode_dataset: batch_size must be >= 1");
  FeatureBatch fb;
  fb.z = Tensor::zeros({ds.size(), cfg.feature_dim});
  fb.labels = ds.labels;
  for (int pos = 0; pos < ds.size(); pos += batch_size) {
    const int end = std::min(ds.size(), pos + batch_size);
    std::vector<Tensor> chunk(ds.specs.begin() + pos, ds.specs.begin() + end);
    std::vector<int> labels(ds.labels.begin() + pos, ds.labels.begin() + end);
    const FeatureBatch part = encode(cfg, p, pad_batch(chunk), labels);
    for (int i = pos; i < end; ++i) {
      for (int k = 0; k < cfg.feature_dim; ++k) {
        fb.z.at(i, k) = part.z.at(i - pos, k);
      }
    }
  }
  fb.validate(cfg.n_classes);
  return fb;
}

}  // namespace sercl
