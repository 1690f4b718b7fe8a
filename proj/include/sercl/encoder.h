// sercl/encoder.h

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

#ifndef SERCL_ENCODER_H_
#define SERCL_ENCODER_H_

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "sercl/tape.h"
#include "sercl/tensor.h"

namespace sercl {

// One convolution layer: out_channels filters of kernel_h x kernel_w,
// applied with a shared stride on both axes, then PReLU, then an optional
// pool x pool max pool (pool = 1 disables it).
struct ConvLayerSpec {
  int out_channels = 0;
  int kernel_h = 0;
  int kernel_w = 0;
  int stride = 1;
  int pool = 1;
};

struct EncoderConfig {
  std::vector<ConvLayerSpec> conv_stack = default_conv_stack();
  int input_bins = 128;  // spectrogram bin count the model is built for
  int rnn_width = 128;
  int feature_dim = 64;
  int n_classes = 4;

  static std::vector<ConvLayerSpec> default_conv_stack();

  // Throws UsageError: stack nonempty, positive extents, first-layer kernel
  // at least as large as every later kernel, feature_dim >= 1, n_classes >= 2.
  void validate() const;
};

struct ConvLayerParams {
  Tensor kernel;  // (out_channels, in_channels, kernel_h, kernel_w)
  Tensor bias;    // (out_channels)
  Tensor slope;   // (1), PReLU
};

// Gates follow the update/reset convention:
//   z_t = sigmoid(Wz x_t + Uz h_{t-1} + bz)
//   r_t = sigmoid(Wr x_t + Ur h_{t-1} + br)
//   g_t = tanh(Wh x_t + Uh (r_t * h_{t-1}) + bh)
//   h_t = z_t * h_{t-1} + (1 - z_t) * g_t
struct GruParams {
  Tensor wz, uz, bz;
  Tensor wr, ur, br;
  Tensor wh, uh, bh;
};

struct ModelParams {
  std::vector<ConvLayerParams> conv;
  GruParams gru_fwd, gru_bwd;
  Tensor fc1_weight;  // (2*rnn_width, feature_dim)
  Tensor fc1_bias;    // (feature_dim)
  Tensor fc1_slope;   // (1)
  Tensor fc2_weight;  // (feature_dim, n_classes), column j belongs to class j
  Tensor fc2_bias;    // (n_classes)

  // Stable (name, tensor) enumeration; checkpoint and optimizer order.
  std::vector<std::pair<std::string, const Tensor *>> named() const;
  std::vector<std::pair<std::string, Tensor *>> named();
};

// Deep features with their labels. Labels are 0-based class indices.
struct FeatureBatch {
  Tensor z;                 // (m, feature_dim)
  std::vector<int> labels;  // size m

  int size() const { return z.rank() == 2 ? z.dim(0) : 0; }
  void validate(int n_classes) const;  // throws DataError
};

// Spectrogram batch zero-padded at the tail to a common frame count.
struct PaddedBatch {
  Tensor specs;                   // (m, max_frames, n_bins)
  std::vector<int> valid_frames;  // per-utterance frame counts

  int size() const { return static_cast<int>(valid_frames.size()); }
};

PaddedBatch pad_batch(const std::vector<Tensor> &specs);

// ------------------------------------------------------------ shape oracle

struct LayerShape {
  int channels = 0;
  int time = 0;
  int freq = 0;
};

// Output extents after each conv layer (post pool). Throws DataError when an
// intermediate is smaller than the layer's kernel or pool window.
std::vector<LayerShape> simulate_shapes(const EncoderConfig &cfg, int n_frames,
                                        int n_bins);

int rnn_steps(const EncoderConfig &cfg, int n_frames);  // T' for an utterance
int rnn_input_width(const EncoderConfig &cfg);  // C*freq fed to each GRU step

// ------------------------------------------------------------------ params

ModelParams init_params(const EncoderConfig &cfg, std::uint64_t seed);

// ------------------------------------------------------------- tape route

struct ConvLayerVars {
  Var kernel, bias, slope;
};

struct GruVars {
  Var wz, uz, bz, wr, ur, br, wh, uh, bh;
};

struct ParamVars {
  std::vector<ConvLayerVars> conv;
  GruVars gru_fwd, gru_bwd;
  Var fc1_weight, fc1_bias, fc1_slope, fc2_weight, fc2_bias;

  std::vector<Var> flat() const;  // named() order
};

ParamVars declare_params(Tape &t, const ModelParams &p, bool with_grad);

// Inverse of flat(): reassembles vars laid out in named() order. Gradient
// checks feed params through Program inputs with this.
ParamVars bind_params(const EncoderConfig &cfg, const std::vector<Var> &vars);

// Parameter values in named() order.
std::vector<Tensor> param_tensors(const ModelParams &p);

// spec is (n_frames, n_bins) with no padding rows.
Var build_cnn(Tape &t, const EncoderConfig &cfg, const ParamVars &pv,
              const Tensor &spec);                              // (T', C*freq)
Var build_birnn(Tape &t, const EncoderConfig &cfg, const ParamVars &pv,
                Var seq);                                       // (2*rnn_width)
Var build_feature(Tape &t, const EncoderConfig &cfg, const ParamVars &pv,
                  const Tensor &spec);                          // z, (d)
Var build_logits(Tape &t, const EncoderConfig &cfg, const ParamVars &pv,
                 Var z);                                        // (n)

// ------------------------------------------------------------ value route

struct SeqBatch {
  std::vector<Tensor> seq;  // per utterance (T'_i, C*freq)
};

SeqBatch cnn_encode(const EncoderConfig &cfg, const ModelParams &p,
                    const PaddedBatch &batch);
Tensor bi_rnn_compress(const EncoderConfig &cfg, const ModelParams &p,
                       const SeqBatch &batch);          // (m, 2*rnn_width)
Tensor encode_one(const EncoderConfig &cfg, const ModelParams &p,
                  const Tensor &spec);                  // (d)
FeatureBatch encode(const EncoderConfig &cfg, const ModelParams &p,
                    const PaddedBatch &batch, const std::vector<int> &labels);
Tensor classify(const EncoderConfig &cfg, const ModelParams &p,
                const Tensor &z);                       // (m, n) logits

}  // namespace sercl

#endif  // SERCL_ENCODER_H_
