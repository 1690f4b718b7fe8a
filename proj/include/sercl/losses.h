// sercl/losses.h

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

#ifndef SERCL_LOSSES_H_
#define SERCL_LOSSES_H_

#include <cstdint>
#include <vector>

#include "sercl/encoder.h"
#include "sercl/tape.h"
#include "sercl/tensor.h"

namespace sercl {

// Per-class weights, positive, normalized to mean 1 so the loss scale (and
// with it a given lambda) transfers between weighting schemes.
struct ClassWeights {
  std::vector<double> w;

  static ClassWeights uniform(int n);
  // Inverse-frequency weights, mean 1. Every class must have a sample.
  static ClassWeights from_counts(const std::vector<int> &counts);

  int size() const { return static_cast<int>(w.size()); }
  void validate() const;  // throws DataError
};

// Global class centers with their EMA update state. Centers start at zero
// and are only ever moved by update_centers; they carry no gradients.
struct CenterBank {
  Tensor centers;  // (n_classes, feature_dim)
  double alpha = 0.5;
  std::int64_t iteration = 0;

  static CenterBank init(int n_classes, int feature_dim, double alpha);

  int n_classes() const { return centers.rank() == 2 ? centers.dim(0) : 0; }
  int feature_dim() const { return centers.rank() == 2 ? centers.dim(1) : 0; }
  void validate() const;  // throws DataError
};

struct JointLossConfig {
  double lambda = 0.0;

  void validate() const;  // throws UsageError
};

// Mini-batch class means. Rows for absent classes stay zero and count 0.
struct BatchCenters {
  Tensor centers;           // (n_classes, feature_dim)
  std::vector<int> counts;  // per class
};

// ----------------------------------------------------------------- losses

// -(1/sum w_{y_i}) * sum_i w_{y_i} * log softmax(logits_i)[y_i]
double weighted_softmax_ce(const Tensor &logits, const std::vector<int> &labels,
                           const ClassWeights &w);

// (1/sum w_{y_i}) * sum_i w_{y_i} * ||z_i - c_{y_i}||^2, centers constant
double weighted_center_loss(const FeatureBatch &fb, const CenterBank &bank,
                            const ClassWeights &w);

BatchCenters batch_class_centers(const FeatureBatch &fb, int n_classes);

// c_j <- (1-alpha) c_j + alpha cdot_j for classes present in the batch;
// absent classes stay bitwise identical. Increments the iteration counter.
void update_centers(CenterBank &bank, const BatchCenters &bc);

double joint_loss(double l_s, double l_c, const JointLossConfig &cfg);

// -------------------------------------------------------------- gradients

struct LossGrads {
  Tensor dlogits;  // (m, n)
  Tensor dz;       // (m, d): FC2-backpropagated CE path + center path
};

LossGrads loss_gradients(const Tensor &logits, const FeatureBatch &fb,
                         const CenterBank &bank, const ClassWeights &w,
                         double lambda, const Tensor &fc2_weight);

// -------------------------------------------------------------- tape route

// Full differentiable joint loss over a batch of unpadded spectrograms.
// Centers enter as constants. z and logits expose the per-utterance nodes
// so a caller can read features after the forward pass.
struct JointGraph {
  Var loss;
  std::vector<Var> z;
  std::vector<Var> logits;
};

JointGraph build_joint_loss(Tape &t, const EncoderConfig &cfg,
                            const ParamVars &pv,
                            const std::vector<Tensor> &specs,
                            const std::vector<int> &labels,
                            const CenterBank &bank, const ClassWeights &w,
                            double lambda);

}  // namespace sercl

#endif  // SERCL_LOSSES_H_
