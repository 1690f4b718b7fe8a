// sercl/evaluation.h

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

#ifndef SERCL_EVALUATION_H_
#define SERCL_EVALUATION_H_

#include <cstdint>
#include <string>
#include <vector>

#include "sercl/tensor.h"

namespace sercl {

// Rows are true classes, columns predictions. Rows with no samples are
// flagged empty and left as zeros in the normalized view.
struct ConfusionMatrix {
  Tensor counts;      // (n, n)
  Tensor normalized;  // (n, n), each non-empty row sums to 1
  std::vector<bool> empty_rows;

  int n() const { return counts.rank() == 2 ? counts.dim(0) : 0; }
};

ConfusionMatrix confusion_matrix(const std::vector<int> &preds,
                                 const std::vector<int> &labels, int n);

// Mean of the normalized diagonal. Every true class must have a sample.
double ua(const ConfusionMatrix &cm);

// Fraction of correct predictions.
double wa(const std::vector<int> &preds, const std::vector<int> &labels);

// Elementwise mean of the normalized forms; counts are summed. Every input
// must be free of empty rows.
ConfusionMatrix average_confusion(const std::vector<ConfusionMatrix> &cms);

// Row-wise argmax; first maximum wins ties.
std::vector<int> argmax_rows(const Tensor &scores);

// ------------------------------------------------------------------ folds

struct Fold {
  std::vector<int> train, dev, test;  // dataset indices
};

// Stratified 5 subsets; fold k trains on four and halves the held-out
// subset (again stratified) into dev and test. Needs >= 10 samples per
// class. Deterministic per seed; callers redraw with a new seed per
// repetition.
std::vector<Fold> cv_splits(const std::vector<int> &labels,
                            std::uint64_t seed);

// -------------------------------------------------------------------- pca

struct PcaResult {
  Tensor coords;                  // (m, out_dim)
  Tensor components;              // (d, out_dim), orthonormal columns
  std::vector<double> explained;  // top out_dim variance fractions
  bool degenerate = false;        // all features identical
};

// Mean-centered projection onto the leading eigenvectors of the sample
// covariance (cyclic Jacobi). Eigenvector sign: largest-magnitude
// component positive.
PcaResult pca_embed(const Tensor &features, int out_dim = 2);

// ----------------------------------------------------------------- report

struct FoldScore {
  int repetition = 0;
  int fold = 0;
  double ua = 0.0;
  double wa = 0.0;
};

struct EvalReport {
  ConfusionMatrix confusion;
  double ua = 0.0;
  double wa = 0.0;
  std::vector<FoldScore> folds;
};

// Key/value header plus a row-per-line matrix block.
std::string format_report(const EvalReport &report,
                          const std::vector<std::string> &class_names);

}  // namespace sercl

#endif  // SERCL_EVALUATION_H_
