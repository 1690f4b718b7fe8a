// sercl/evaluation.cc

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

#include "sercl/evaluation.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>

#include "sercl/error.h"
#include "sercl/rng.h"

namespace sercl {

namespace {

void check_classes(const std::vector<int> &v, int n, const char *what) {
  for (int y : v) {
    if (y < 0 || y >= n) {
      throw DataError(std::string(what) + ": class " + std::to_string(y) +
                      " outside 0.." + std::to_string(n - 1));
    }
  }
}

}  // namespace

ConfusionMatrix confusion_matrix(const std::vector<int> &preds,
                                 const std::vector<int> &labels, int n) {
  if (n < 1) throw DataError("confusion: n must be >= 1");
  if (preds.size() != labels.size() || labels.empty()) {
    throw DataError("confusion: preds and labels must be nonempty and equal");
  }
  check_classes(preds, n, "confusion preds");
  check_classes(labels, n, "confusion labels");
  ConfusionMatrix cm;
  cm.counts = Tensor::zeros({n, n});
  cm.normalized = Tensor::zeros({n, n});
  cm.empty_rows.assign(static_cast<size_t>(n), false);
  for (size_t i = 0; i < labels.size(); ++i) {
    cm.counts.at(labels[i], preds[i]) += 1.0;
  }
  for (int t = 0; t < n; ++t) {
    double rs = 0.0;
    for (int p = 0; p < n; ++p) rs += cm.counts.at(t, p);
    if (rs == 0.0) {
      cm.empty_rows[static_cast<size_t>(t)] = true;
      continue;
    }
    for (int p = 0; p < n; ++p) cm.normalized.at(t, p) = cm.counts.at(t, p) / rs;
  }
  return cm;
}

double ua(const ConfusionMatrix &cm) {
  const int n = cm.n();
  if (n < 1) throw DataError("ua: empty confusion matrix");
  double acc = 0.0;
  for (int j = 0; j < n; ++j) {
    if (cm.empty_rows[static_cast<size_t>(j)]) {
      throw DataError("ua: class " + std::to_string(j) + " has no samples");
    }
    acc += cm.normalized.at(j, j);
  }
  return acc / n;
}

double wa(const std::vector<int> &preds, const std::vector<int> &labels) {
  if (preds.size() != labels.size() || labels.empty()) {
    throw DataError("wa: preds and labels must be nonempty and equal");
  }
  std::int64_t correct = 0;
  for (size_t i = 0; i < labels.size(); ++i) {
    if (preds[i] == labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(labels.size());
}

ConfusionMatrix average_confusion(const std::vector<ConfusionMatrix> &cms) {
  if (cms.empty()) throw DataError("average_confusion: empty list");
  const int n = cms[0].n();
  for (const ConfusionMatrix &cm : cms) {
    if (cm.n() != n) throw DataError("average_confusion: size mismatch");
    for (bool e : cm.empty_rows) {
      if (e) throw DataError("average_confusion: input has an empty row");
    }
  }
  ConfusionMatrix out;
  out.counts = Tensor::zeros({n, n});
  out.normalized = Tensor::zeros({n, n});
  out.empty_rows.assign(static_cast<size_t>(n), false);
  for (const ConfusionMatrix &cm : cms) {
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        out.counts.at(i, j) += cm.counts.at(i, j);
        out.normalized.at(i, j) += cm.normalized.at(i, j);
      }
  }
  const double k = static_cast<double>(cms.size());
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) out.normalized.at(i, j) /= k;
  return out;
}

std::vector<int> argmax_rows(const Tensor &scores) {
  if (scores.rank() != 2 || scores.dim(0) < 1) {
    throw DataError("argmax_rows: scores must be a nonempty matrix");
  }
  const int m = scores.dim(0), n = scores.dim(1);
  std::vector<int> out(static_cast<size_t>(m));
  for (int i = 0; i < m; ++i) {
    int best = 0;
    for (int j = 1; j < n; ++j) {
      if (scores.at(i, j) > scores.at(i, best)) best = j;
    }
    out[static_cast<size_t>(i)] = best;
  }
  return out;
}

// --------------------------------------------------------------------- folds

namespace {

template <typename T>
void fisher_yates(std::vector<T> &v, Rng &rng) {
  for (size_t i = v.size(); i > 1; --i) {
    const size_t j = static_cast<size_t>(rng.below(i));
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace

std::vector<Fold> cv_splits(const std::vector<int> &labels,
                            std::uint64_t seed) {
  if (labels.empty()) throw DataError("cv_splits: empty dataset");
  const int n = 1 + *std::max_element(labels.begin(), labels.end());
  check_classes(labels, n, "cv_splits labels");

  std::vector<std::vector<int>> by_class(static_cast<size_t>(n));
  for (size_t i = 0; i < labels.size(); ++i) {
    by_class[static_cast<size_t>(labels[i])].push_back(static_cast<int>(i));
  }
  for (int c = 0; c < n; ++c) {
    if (by_class[static_cast<size_t>(c)].size() < 10) {
      throw DataError("cv_splits: class " + std::to_string(c) +
                      " has fewer than 10 samples");
    }
  }

  Rng rng(seed);
  const int kSubsets = 5;
  std::vector<std::vector<int>> subsets(kSubsets);
  for (int c = 0; c < n; ++c) {
    std::vector<int> &idx = by_class[static_cast<size_t>(c)];
    fisher_yates(idx, rng);
    // rotate the remainder start per class so extras spread over subsets
    for (size_t k = 0; k < idx.size(); ++k) {
      subsets[(k + static_cast<size_t>(c)) % kSubsets].push_back(idx[k]);
    }
  }

  std::vector<Fold> folds;
  folds.reserve(kSubsets);
  for (int f = 0; f < kSubsets; ++f) {
    Fold fold;
    for (int s = 0; s < kSubsets; ++s) {
      if (s == f) continue;
      fold.train.insert(fold.train.end(), subsets[s].begin(),
                        subsets[s].end());
    }
    // stratified halving of the held-out subset: alternate per class
    std::vector<std::vector<int>> held_by_class(static_cast<size_t>(n));
    for (int i : subsets[static_cast<size_t>(f)]) {
      held_by_class[static_cast<size_t>(labels[static_cast<size_t>(i)])]
          .push_back(i);
    }
    for (int c = 0; c < n; ++c) {
      const std::vector<int> &h = held_by_class[static_cast<size_t>(c)];
      for (size_t k = 0; k < h.size(); ++k) {
        ((k + static_cast<size_t>(c)) % 2 == 0 ? fold.dev : fold.test)
            .push_back(h[k]);
      }
    }
    std::sort(fold.train.begin(), fold.train.end());
    std::sort(fold.dev.begin(), fold.dev.end());
    std::sort(fold.test.begin(), fold.test.end());
    folds.push_back(std::move(fold));
  }
  return folds;
}

// ----------------------------------------------------------------------- pca

namespace {

// cyclic Jacobi on a symmetric matrix; returns eigenvalues in-place on the
// diagonal, accumulates rotations into vecs (columns are eigenvectors)
void jacobi_eigen(Tensor &a, Tensor &vecs) {
  const int d = a.dim(0);
  vecs = Tensor::zeros({d, d});
  for (int i = 0; i < d; ++i) vecs.at(i, i) = 1.0;
  double scale = 0.0;
  for (int i = 0; i < d; ++i) scale = std::max(scale, std::abs(a.at(i, i)));
  scale = std::max(scale, 1e-300);
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (int p = 0; p < d; ++p)
      for (int q = p + 1; q < d; ++q) off += a.at(p, q) * a.at(p, q);
    if (std::sqrt(off) < 1e-14 * scale) break;
    for (int p = 0; p < d; ++p) {
      for (int q = p + 1; q < d; ++q) {
        const double apq = a.at(p, q);
        if (std::abs(apq) < 1e-300) continue;
        const double theta = (a.at(q, q) - a.at(p, p)) / (2.0 * apq);
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (int k = 0; k < d; ++k) {
          const double akp = a.at(k, p), akq = a.at(k, q);
          a.at(k, p) = c * akp - s * akq;
          a.at(k, q) = s * akp + c * akq;
        }
        for (int k = 0; k < d; ++k) {
          const double apk = a.at(p, k), aqk = a.at(q, k);
          a.at(p, k) = c * apk - s * aqk;
          a.at(q, k) = s * apk + c * aqk;
        }
        for (int k = 0; k < d; ++k) {
          const double vkp = vecs.at(k, p), vkq = vecs.at(k, q);
          vecs.at(k, p) = c * vkp - s * vkq;
          vecs.at(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
}

}  // namespace

PcaResult pca_embed(const Tensor &features, int out_dim) {
  if (features.rank() != 2) throw DataError("pca: features must be (m, d)");
  const int m = features.dim(0), d = features.dim(1);
  if (out_dim < 1 || out_dim > d) throw DataError("pca: bad out_dim");
  if (m <= out_dim) throw DataError("pca: need more samples than out_dim");

  std::vector<double> mean(static_cast<size_t>(d), 0.0);
  for (int i = 0; i < m; ++i)
    for (int k = 0; k < d; ++k) mean[static_cast<size_t>(k)] += features.at(i, k);
  for (double &x : mean) x /= m;

  Tensor cov = Tensor::zeros({d, d});
  for (int i = 0; i < m; ++i) {
    for (int a = 0; a < d; ++a) {
      const double xa = features.at(i, a) - mean[static_cast<size_t>(a)];
      for (int b = a; b < d; ++b) {
        cov.at(a, b) += xa * (features.at(i, b) - mean[static_cast<size_t>(b)]);
      }
    }
  }
  for (int a = 0; a < d; ++a)
    for (int b = a; b < d; ++b) {
      cov.at(a, b) /= (m - 1);
      cov.at(b, a) = cov.at(a, b);
    }

  PcaResult res;
  double total = 0.0;
  for (int a = 0; a < d; ++a) total += cov.at(a, a);
  if (total < 1e-24) {
    res.degenerate = true;
    res.coords = Tensor::zeros({m, out_dim});
    res.components = Tensor::zeros({d, out_dim});
    res.explained.assign(static_cast<size_t>(out_dim), 0.0);
    return res;
  }

  Tensor vecs;
  jacobi_eigen(cov, vecs);
  std::vector<int> order(static_cast<size_t>(d));
  for (int i = 0; i < d; ++i) order[static_cast<size_t>(i)] = i;
  std::sort(order.begin(), order.end(), [&cov](int a, int b) {
    return cov.at(a, a) > cov.at(b, b);
  });

  res.components = Tensor::zeros({d, out_dim});
  res.explained.resize(static_cast<size_t>(out_dim));
  for (int j = 0; j < out_dim; ++j) {
    const int e = order[static_cast<size_t>(j)];
    int big = 0;
    for (int k = 1; k < d; ++k) {
      if (std::abs(vecs.at(k, e)) > std::abs(vecs.at(big, e))) big = k;
    }
    const double sign = vecs.at(big, e) < 0 ? -1.0 : 1.0;
    for (int k = 0; k < d; ++k) res.components.at(k, j) = sign * vecs.at(k, e);
    res.explained[static_cast<size_t>(j)] =
        std::max(0.0, cov.at(e, e)) / total;
  }

  res.coords = Tensor::zeros({m, out_dim});
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < out_dim; ++j) {
      double acc = 0.0;
      for (int k = 0; k < d; ++k) {
        acc += (features.at(i, k) - mean[static_cast<size_t>(k)]) *
               res.components.at(k, j);
      }
      res.coords.at(i, j) = acc;
    }
  return res;
}

// -------------------------------------------------------------------- report

std::string format_report(const EvalReport &report,
                          const std::vector<std::string> &class_names) {
  const int n = report.confusion.n();
  if (static_cast<int>(class_names.size()) != n) {
    throw DataError("report: class name count mismatch");
  }
  char buf[128];
  std::string out;
  std::snprintf(buf, sizeof buf, "ua\t%.6f\n", report.ua);
  out += buf;
  std::snprintf(buf, sizeof buf, "wa\t%.6f\n", report.wa);
  out += buf;
  std::snprintf(buf, sizeof buf, "classes\t%d\n", n);
  out += buf;
  for (const FoldScore &f : report.folds) {
    std::snprintf(buf, sizeof buf, "fold\t%d\t%d\t%.6f\t%.6f\n", f.repetition,
                  f.fold, f.ua, f.wa);
    out += buf;
  }
  out += "confusion_normalized\n";
  for (int i = 0; i < n; ++i) {
    out += class_names[static_cast<size_t>(i)];
    for (int j = 0; j < n; ++j) {
      std::snprintf(buf, sizeof buf, "\t%.12f",
                    report.confusion.normalized.at(i, j));
      out += buf;
    }
    out += "\n";
  }
  return out;
}

}  // namespace sercl
