// sercl/test_trainer.cc

// Copyright 2026  The sercl authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <random>
#include <vector>

#include "doctest.h"
#include "sercl/encoder.h"
#include "sercl/error.h"
#include "sercl/losses.h"
#include "sercl/tape.h"
#include "sercl/trainer.h"

namespace {

using sercl::AdamState;
using sercl::batch_class_centers;
using sercl::build_joint_loss;
using sercl::CenterBank;
using sercl::class_weights_from_counts;
using sercl::ClassWeights;
using sercl::DataError;
using sercl::Dataset;
using sercl::declare_params;
using sercl::EncoderConfig;
using sercl::FeatureBatch;
using sercl::fit;
using sercl::FitResult;
using sercl::init_params;
using sercl::make_batches;
using sercl::ModelParams;
using sercl::param_tensors;
using sercl::ParamVars;
using sercl::Tape;
using sercl::Tensor;
using sercl::TrainBatch;
using sercl::TrainConfig;
using sercl::UsageError;
using sercl::Var;

Tensor rand_tensor(std::vector<int> shape, std::mt19937 &gen, double lo = -1.0,
                   double hi = 1.0) {
  Tensor t = Tensor::zeros(std::move(shape));
  std::uniform_real_distribution<double> d(lo, hi);
  for (double &v : t.v) v = d(gen);
  return t;
}

EncoderConfig tiny_config(int bins, int n_classes) {
  EncoderConfig cfg;
  cfg.conv_stack = {{2, 3, 3, 2, 1}};
  cfg.input_bins = bins;
  cfg.rnn_width = 3;
  cfg.feature_dim = 4;
  cfg.n_classes = n_classes;
  cfg.validate();
  return cfg;
}

// Two planted band-energy patterns plus seeded jitter.
Dataset separable_dataset(int per_class, int frames, int bins,
                          std::uint64_t seed) {
  std::mt19937 gen(static_cast<unsigned>(seed));
  std::uniform_real_distribution<double> noise(-0.1, 0.1);
  Dataset ds;
  for (int label = 0; label < 2; ++label) {
    for (int i = 0; i < per_class; ++i) {
      Tensor s = Tensor::zeros({frames, bins});
      for (int t = 0; t < frames; ++t)
        for (int f = 0; f < bins; ++f) {
          double base = (f < bins / 2) == (label == 0) ? 1.0 : -1.0;
          s.at(t, f) = base + noise(gen);
        }
      ds.specs.push_back(std::move(s));
      ds.labels.push_back(label);
    }
  }
  return ds;
}

Dataset random_dataset(int m, int frames, int bins, int n_classes,
                       std::mt19937 &gen) {
  Dataset ds;
  std::uniform_int_distribution<int> lab(0, n_classes - 1);
  for (int i = 0; i < m; ++i) {
    ds.specs.push_back(rand_tensor({frames, bins}, gen));
    ds.labels.push_back(lab(gen));
  }
  return ds;
}

bool same_tensors(const std::vector<Tensor> &a, const std::vector<Tensor> &b) {
  if (a.size() != b.size()) return false;
  for (size_t i = 0; i < a.size(); ++i)
    if (a[i].v != b[i].v || a[i].shape != b[i].shape) return false;
  return true;
}

}  // namespace

TEST_CASE("class weights invert sample counts") {
  ClassWeights eq = class_weights_from_counts({50, 50, 50});
  for (double v : eq.w) CHECK(v == doctest::Approx(1.0).epsilon(1e-15));

  std::vector<int> counts = {309, 199, 296, 196};
  ClassWeights w = class_weights_from_counts(counts);
  double raw_mean = 0.0;
  for (int c : counts) raw_mean += 1.0 / c;
  raw_mean /= 4.0;
  double mean = 0.0;
  for (int j = 0; j < 4; ++j) {
    CHECK(w.w[static_cast<size_t>(j)] ==
          doctest::Approx(1.0 / counts[static_cast<size_t>(j)] / raw_mean)
              .epsilon(1e-12));
    mean += w.w[static_cast<size_t>(j)];
  }
  CHECK(mean / 4.0 == doctest::Approx(1.0).epsilon(1e-12));

  CHECK_THROWS_AS(class_weights_from_counts({3, 0, 1}), DataError);
}

TEST_CASE("batches cover the dataset exactly once") {
  std::mt19937 gen(7);
  Dataset ds = random_dataset(64, 6, 5, 3, gen);
  auto batches = make_batches(ds, 32, 123);
  REQUIRE(batches.size() == 2);
  std::vector<int> seen;
  for (const TrainBatch &b : batches) {
    CHECK(b.padded.size() == 32);
    CHECK(b.labels.size() == b.indices.size());
    for (size_t i = 0; i < b.indices.size(); ++i) {
      int idx = b.indices[i];
      CHECK(b.labels[i] == ds.labels[static_cast<size_t>(idx)]);
      seen.push_back(idx);
    }
  }
  std::sort(seen.begin(), seen.end());
  for (int i = 0; i < 64; ++i) CHECK(seen[static_cast<size_t>(i)] == i);
}

TEST_CASE("final batch may run short") {
  std::mt19937 gen(8);
  Dataset ds = random_dataset(10, 4, 3, 2, gen);
  auto batches = make_batches(ds, 4, 5);
  REQUIRE(batches.size() == 3);
  CHECK(batches[0].padded.size() == 4);
  CHECK(batches[1].padded.size() == 4);
  CHECK(batches[2].padded.size() == 2);
}

TEST_CASE("batch composition is seed deterministic") {
  std::mt19937 gen(9);
  Dataset ds = random_dataset(40, 5, 4, 2, gen);
  auto a = make_batches(ds, 8, 77);
  auto b = make_batches(ds, 8, 77);
  REQUIRE(a.size() == b.size());
  bool all_same = true;
  for (size_t i = 0; i < a.size(); ++i) all_same &= a[i].indices == b[i].indices;
  CHECK(all_same);

  auto c = make_batches(ds, 8, 78);
  bool any_diff = false;
  for (size_t i = 0; i < a.size(); ++i) any_diff |= a[i].indices != c[i].indices;
  CHECK(any_diff);
}

TEST_CASE("batch padding preserves the utterances") {
  std::mt19937 gen(10);
  Dataset ds;
  ds.specs.push_back(rand_tensor({9, 4}, gen));
  ds.specs.push_back(rand_tensor({5, 4}, gen));
  ds.specs.push_back(rand_tensor({7, 4}, gen));
  ds.labels = {0, 1, 0};
  auto batches = make_batches(ds, 3, 3);
  REQUIRE(batches.size() == 1);
  const TrainBatch &b = batches[0];
  CHECK(b.padded.specs.dim(1) == 9);
  for (int i = 0; i < 3; ++i) {
    int idx = b.indices[static_cast<size_t>(i)];
    const Tensor &orig = ds.specs[static_cast<size_t>(idx)];
    CHECK(b.padded.valid_frames[static_cast<size_t>(i)] == orig.dim(0));
    for (int t = 0; t < orig.dim(0); ++t)
      for (int f = 0; f < 4; ++f)
        CHECK(b.padded.specs.at(i, t, f) == orig.at(t, f));
    for (int t = orig.dim(0); t < 9; ++t)
      for (int f = 0; f < 4; ++f) CHECK(b.padded.specs.at(i, t, f) == 0.0);
  }

  Dataset empty;
  CHECK_THROWS_AS(make_batches(empty, 4, 0), DataError);
}

TEST_CASE("adam ignores zero gradients") {
  EncoderConfig cfg = tiny_config(6, 3);
  ModelParams p = init_params(cfg, 3);
  std::vector<Tensor> before = param_tensors(p);
  AdamState st = AdamState::init(p);
  std::vector<Tensor> zeros;
  for (const Tensor &t : before) zeros.push_back(Tensor::zeros(t.shape));
  TrainConfig tc;
  adam_step(p, zeros, st, tc);
  CHECK(same_tensors(param_tensors(p), before));
  CHECK(st.step == 1);
  for (const Tensor &m : st.m)
    for (double v : m.v) CHECK(v == 0.0);
  for (const Tensor &v2 : st.v)
    for (double v : v2.v) CHECK(v == 0.0);
}

TEST_CASE("first adam step moves by the learning rate") {
  EncoderConfig cfg = tiny_config(6, 3);
  ModelParams p = init_params(cfg, 4);
  std::vector<Tensor> before = param_tensors(p);
  AdamState st = AdamState::init(p);
  std::mt19937 gen(44);
  std::vector<Tensor> grads;
  for (const Tensor &t : before) grads.push_back(rand_tensor(t.shape, gen, 0.2, 1.0));
  TrainConfig tc;
  tc.learning_rate = 0.01;
  adam_step(p, grads, st, tc);
  std::vector<Tensor> after = param_tensors(p);
  for (size_t i = 0; i < after.size(); ++i)
    for (size_t k = 0; k < after[i].v.size(); ++k) {
      double g = grads[i].v[k];
      double expect = before[i].v[k] - tc.learning_rate * g /
                                          (std::sqrt(g * g) + tc.eps);
      CHECK(after[i].v[k] == doctest::Approx(expect).epsilon(1e-12));
      CHECK(std::abs(after[i].v[k] - before[i].v[k]) ==
            doctest::Approx(tc.learning_rate).epsilon(1e-6));
    }
}

TEST_CASE("adam trajectories replay bit for bit") {
  EncoderConfig cfg = tiny_config(6, 2);
  TrainConfig tc;
  tc.learning_rate = 0.003;
  auto run = [&](std::vector<Tensor> &out) {
    ModelParams p = init_params(cfg, 5);
    AdamState st = AdamState::init(p);
    std::mt19937 gen(91);
    for (int step = 0; step < 10; ++step) {
      std::vector<Tensor> grads;
      for (const Tensor &t : param_tensors(p))
        grads.push_back(rand_tensor(t.shape, gen));
      adam_step(p, grads, st, tc);
    }
    out = param_tensors(p);
  };
  std::vector<Tensor> a, b;
  run(a);
  run(b);
  bool identical = same_tensors(a, b);
  CHECK(identical);
}

TEST_CASE("adam rejects mismatched gradients") {
  EncoderConfig cfg = tiny_config(6, 2);
  ModelParams p = init_params(cfg, 6);
  AdamState st = AdamState::init(p);
  TrainConfig tc;
  std::vector<Tensor> grads;
  for (const Tensor &t : param_tensors(p)) grads.push_back(Tensor::zeros(t.shape));
  grads.pop_back();
  CHECK_THROWS_AS(adam_step(p, grads, st, tc), DataError);
  grads.push_back(Tensor::zeros({2, 2}));
  CHECK_THROWS_AS(adam_step(p, grads, st, tc), DataError);
}

TEST_CASE("zero epochs return the initial state") {
  EncoderConfig ecfg = tiny_config(6, 2);
  TrainConfig tc;
  tc.max_epochs = 0;
  tc.seed = 17;
  Dataset ds = separable_dataset(4, 8, 6, 1);
  FitResult res = fit(ds, ds, ecfg, tc);
  CHECK(res.history.empty());
  CHECK(res.best_epoch == -1);
  ModelParams fresh = init_params(ecfg, tc.seed);
  CHECK(same_tensors(param_tensors(res.best_params), param_tensors(fresh)));
  for (double v : res.best_centers.centers.v) CHECK(v == 0.0);
}

TEST_CASE("centers move even with the center loss disabled") {
  EncoderConfig ecfg = tiny_config(6, 2);
  TrainConfig tc;
  tc.max_epochs = 2;
  tc.batch_size = 8;
  tc.lambda = 0.0;
  tc.seed = 21;
  Dataset ds = separable_dataset(4, 8, 6, 2);
  FitResult res = fit(ds, ds, ecfg, tc);
  REQUIRE(res.history.size() == 2);
  CHECK(res.best_centers.iteration > 0);
  double norm = 0.0;
  for (double v : res.best_centers.centers.v) norm += v * v;
  CHECK(norm > 0.0);
  for (const auto &rec : res.history) CHECK(rec.l_c > 0.0);
}

TEST_CASE("history reports the pre-step batch losses") {
  EncoderConfig ecfg = tiny_config(6, 2);
  TrainConfig tc;
  tc.max_epochs = 1;
  tc.batch_size = 16;  // single batch holds the whole set
  tc.lambda = 0.25;
  tc.seed = 33;
  Dataset ds = separable_dataset(3, 8, 6, 3);
  FitResult res = fit(ds, ds, ecfg, tc);
  REQUIRE(res.history.size() == 1);

  ModelParams p0 = init_params(ecfg, tc.seed);
  FeatureBatch fb = encode_dataset(ecfg, p0, ds, tc.batch_size);
  Tensor logits = classify(ecfg, p0, fb.z);
  ClassWeights w = class_weights_from_counts(ds.class_counts(2));
  CenterBank bank0 = CenterBank::init(2, ecfg.feature_dim, tc.alpha);
  CHECK(res.history[0].l_s ==
        doctest::Approx(sercl::weighted_softmax_ce(logits, ds.labels, w))
            .epsilon(1e-10));
  CHECK(res.history[0].l_c ==
        doctest::Approx(sercl::weighted_center_loss(fb, bank0, w))
            .epsilon(1e-10));
}

TEST_CASE("best epoch is the earliest dev ua argmax") {
  EncoderConfig ecfg = tiny_config(6, 2);
  TrainConfig tc;
  tc.max_epochs = 6;
  tc.batch_size = 4;
  tc.learning_rate = 0.002;
  tc.seed = 55;
  Dataset train = separable_dataset(6, 8, 6, 4);
  Dataset dev = separable_dataset(3, 8, 6, 5);
  std::vector<int> observed;
  FitResult res = fit(train, dev, ecfg, tc,
                      [&](const sercl::EpochRecord &r, const ModelParams &,
                          const CenterBank &) { observed.push_back(r.epoch); });
  REQUIRE(res.history.size() == 6);
  CHECK(observed == std::vector<int>{1, 2, 3, 4, 5, 6});
  int arg = 0;
  for (int i = 1; i < 6; ++i)
    if (res.history[static_cast<size_t>(i)].dev_ua >
        res.history[static_cast<size_t>(arg)].dev_ua)
      arg = i;
  CHECK(res.best_epoch == res.history[static_cast<size_t>(arg)].epoch);
  CHECK(res.best_dev_ua ==
        res.history[static_cast<size_t>(arg)].dev_ua);
}

TEST_CASE("fit is deterministic end to end") {
  EncoderConfig ecfg = tiny_config(6, 2);
  TrainConfig tc;
  tc.max_epochs = 3;
  tc.batch_size = 4;
  tc.lambda = 0.3;
  tc.seed = 66;
  Dataset train = separable_dataset(4, 8, 6, 6);
  Dataset dev = separable_dataset(2, 8, 6, 7);
  FitResult a = fit(train, dev, ecfg, tc);
  FitResult b = fit(train, dev, ecfg, tc);
  CHECK(same_tensors(param_tensors(a.best_params), param_tensors(b.best_params)));
  CHECK(a.best_centers.centers.v == b.best_centers.centers.v);
  REQUIRE(a.history.size() == b.history.size());
  for (size_t i = 0; i < a.history.size(); ++i) {
    CHECK(a.history[i].l_s == b.history[i].l_s);
    CHECK(a.history[i].l_c == b.history[i].l_c);
    CHECK(a.history[i].dev_ua == b.history[i].dev_ua);
    CHECK(a.history[i].dev_wa == b.history[i].dev_wa);
  }
}

TEST_CASE("separable classes reach full dev accuracy") {
  EncoderConfig ecfg = tiny_config(8, 2);
  TrainConfig tc;
  tc.max_epochs = 50;
  tc.batch_size = 8;
  tc.learning_rate = 0.003;
  tc.lambda = 0.3;
  tc.seed = 11;
  Dataset train = separable_dataset(8, 10, 8, 8);
  Dataset dev = separable_dataset(4, 10, 8, 9);
  FitResult res = fit(train, dev, ecfg, tc);
  CHECK(res.best_dev_ua == doctest::Approx(1.0));
  CHECK(res.best_epoch <= 50);
}

TEST_CASE("single batch loss is non-increasing at a small rate") {
  EncoderConfig ecfg = tiny_config(6, 2);
  TrainConfig tc;
  tc.learning_rate = 1e-4;
  tc.lambda = 0.3;

  int good = 0;
  const int trials = 100, iters = 100;
  for (int trial = 0; trial < trials; ++trial) {
    std::mt19937 gen(1000 + trial);
    std::vector<Tensor> specs = {rand_tensor({8, 6}, gen),
                                 rand_tensor({8, 6}, gen)};
    std::vector<int> labels = {0, 1};
    ClassWeights w = ClassWeights::uniform(2);
    ModelParams params = init_params(ecfg, static_cast<std::uint64_t>(trial));
    CenterBank bank = CenterBank::init(2, ecfg.feature_dim, 0.5);
    AdamState st = AdamState::init(params);

    bool monotone = true;
    double prev = 0.0;
    for (int it = 0; it < iters; ++it) {
      Tape t;
      ParamVars pv = declare_params(t, params, true);
      auto jg = build_joint_loss(t, ecfg, pv, specs, labels, bank, w, tc.lambda);
      double loss = t.value(jg.loss).at(0);
      if (it > 0 && loss > prev + 1e-12) monotone = false;
      prev = loss;
      t.backward(jg.loss);
      std::vector<Tensor> grads;
      for (Var v : pv.flat()) grads.push_back(t.grad(v));
      adam_step(params, grads, st, tc);

      FeatureBatch fb;
      fb.z = Tensor::zeros({2, ecfg.feature_dim});
      fb.labels = labels;
      for (int i = 0; i < 2; ++i) {
        const Tensor &zi = t.value(jg.z[static_cast<size_t>(i)]);
        for (int k = 0; k < ecfg.feature_dim; ++k) fb.z.at(i, k) = zi.at(k);
      }
      update_centers(bank, batch_class_centers(fb, 2));
    }
    if (monotone) ++good;
  }
  CHECK(good >= 95);
}

TEST_CASE("train config validates its ranges") {
  TrainConfig tc;
  tc.validate();
  TrainConfig bad = tc;
  bad.learning_rate = 0.0;
  CHECK_THROWS_AS(bad.validate(), UsageError);
  bad = tc;
  bad.batch_size = 0;
  CHECK_THROWS_AS(bad.validate(), UsageError);
  bad = tc;
  bad.lambda = -1.0;
  CHECK_THROWS_AS(bad.validate(), UsageError);
  bad = tc;
  bad.alpha = 1.5;
  CHECK_THROWS_AS(bad.validate(), UsageError);
  bad = tc;
  bad.max_epochs = -1;
  CHECK_THROWS_AS(bad.validate(), UsageError);
}
