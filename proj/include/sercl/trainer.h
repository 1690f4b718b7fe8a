// sercl/trainer.h

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

#ifndef SERCL_TRAINER_H_
#define SERCL_TRAINER_H_

#include <cstdint>
#include <functional>
#include <vector>

#include "sercl/encoder.h"
#include "sercl/losses.h"
#include "sercl/tensor.h"

namespace sercl {

struct Dataset {
  std::vector<Tensor> specs;  // per utterance (frames, bins)
  std::vector<int> labels;    // 0-based

  int size() const { return static_cast<int>(labels.size()); }
  void validate(int n_classes) const;       // throws DataError
  std::vector<int> class_counts(int n) const;
};

struct TrainConfig {
  double learning_rate = 3e-4;
  int batch_size = 32;
  double lambda = 0.0;
  double alpha = 0.5;
  int max_epochs = 100;
  std::uint64_t seed = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double clip_norm = 0.0;  // global L2 clip; 0 disables
  bool weighted = true;    // inverse-frequency class weights

  void validate() const;  // throws UsageError
};

// Moments aligned with ModelParams::named() order.
struct AdamState {
  std::vector<Tensor> m, v;
  std::int64_t step = 0;

  static AdamState init(const ModelParams &p);
};

ClassWeights class_weights_from_counts(const std::vector<int> &counts);

struct TrainBatch {
  PaddedBatch padded;
  std::vector<int> labels;
  std::vector<int> indices;  // positions in the dataset
};

// Seed-shuffled, padded batches covering the dataset exactly once; the
// final batch may be short.
std::vector<TrainBatch> make_batches(const Dataset &ds, int batch_size,
                                     std::uint64_t seed);

// Bias-corrected Adam over named() order; grads from ParamVars::flat().
void adam_step(ModelParams &params, const std::vector<Tensor> &grads,
               AdamState &st, const TrainConfig &cfg);

struct EpochRecord {
  int epoch = 0;    // 1-based
  double l_s = 0.0;  // epoch mean of per-batch values
  double l_c = 0.0;
  double dev_ua = 0.0;
  double dev_wa = 0.0;
};

struct FitResult {
  ModelParams best_params;
  CenterBank best_centers;
  std::vector<EpochRecord> history;
  int best_epoch = -1;  // -1 when no epoch ran
  double best_dev_ua = 0.0;
};

// Called after each epoch with that epoch's record and the live state.
using EpochObserver = std::function<void(
    const EpochRecord &, const ModelParams &, const CenterBank &)>;

// Per iteration: forward with the current centers, backward, Adam step,
// then center update from that batch's pre-step features. Keeps the params
// of the epoch with the highest dev UA (earliest on ties).
FitResult fit(const Dataset &train, const Dataset &dev,
              const EncoderConfig &ecfg, const TrainConfig &tcfg,
              const EpochObserver &observer = nullptr);

// Argmax class predictions, value route, chunked by batch_size.
std::vector<int> predict(const EncoderConfig &cfg, const ModelParams &p,
                         const Dataset &ds, int batch_size);

// Features for a whole dataset (dataset order), value route.
FeatureBatch encode_dataset(const EncoderConfig &cfg, const ModelParams &p,
                            const Dataset &ds, int batch_size);

}  // namespace sercl

#endif  // SERCL_TRAINER_H_
