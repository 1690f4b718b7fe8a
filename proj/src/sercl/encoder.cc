// sercl/encoder.cc

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

#include "sercl/encoder.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "sercl/error.h"
#include "sercl/rng.h"

namespace sercl {

std::vector<ConvLayerSpec> EncoderConfig::default_conv_stack() {
  return {{16, 7, 7, 2, 1}, {32, 3, 3, 1, 2}, {32, 3, 3, 1, 2}};
}

void EncoderConfig::validate() const {
  if (conv_stack.empty()) throw UsageError("encoder: conv stack is empty");
  for (size_t i = 0; i < conv_stack.size(); ++i) {
    const ConvLayerSpec &l = conv_stack[i];
    if (l.out_channels < 1 || l.kernel_h < 1 || l.kernel_w < 1 ||
        l.stride < 1 || l.pool < 1) {
      throw UsageError("encoder: conv layer " + std::to_string(i) +
                       " has a non-positive extent");
    }
  }
  // large kernels first, as small or smaller after
  for (size_t i = 1; i < conv_stack.size(); ++i) {
    if (conv_stack[i].kernel_h > conv_stack[0].kernel_h ||
        conv_stack[i].kernel_w > conv_stack[0].kernel_w) {
      throw UsageError("encoder: conv layer " + std::to_string(i) +
                       " kernel exceeds the first layer kernel");
    }
  }
  if (input_bins < 1) throw UsageError("encoder: input_bins must be >= 1");
  if (rnn_width < 1) throw UsageError("encoder: rnn_width must be >= 1");
  if (feature_dim < 1) throw UsageError("encoder: feature_dim must be >= 1");
  if (n_classes < 2) throw UsageError("encoder: n_classes must be >= 2");
}

void FeatureBatch::validate(int n_classes) const {
  if (z.rank() != 2 || z.dim(0) < 1) {
    throw DataError("feature batch: z must be a nonempty matrix");
  }
  if (static_cast<int>(labels.size()) != z.dim(0)) {
    throw DataError("feature batch: label count does not match z rows");
  }
  for (int y : labels) {
    if (y < 0 || y >= n_classes) {
      throw DataError("feature batch: label " + std::to_string(y) +
                      " outside 0.." + std::to_string(n_classes - 1));
    }
  }
  if (!z.all_finite()) throw DataError("feature batch: z has non-finite values");
}

PaddedBatch pad_batch(const std::vector<Tensor> &specs) {
  if (specs.empty()) throw DataError("pad_batch: empty batch");
  const int bins = specs[0].rank() == 2 ? specs[0].dim(1) : -1;
  int max_frames = 0;
  for (const Tensor &s : specs) {
    if (s.rank() != 2 || s.dim(0) < 1) {
      throw DataError("pad_batch: each spectrogram must be (frames, bins)");
    }
    if (s.dim(1) != bins) {
      throw DataError("pad_batch: inconsistent bin counts");
    }
    max_frames = std::max(max_frames, s.dim(0));
  }
  PaddedBatch b;
  const int m = static_cast<int>(specs.size());
  b.specs = Tensor::zeros({m, max_frames, bins});
  b.valid_frames.resize(static_cast<size_t>(m));
  for (int i = 0; i < m; ++i) {
    const Tensor &s = specs[static_cast<size_t>(i)];
    b.valid_frames[static_cast<size_t>(i)] = s.dim(0);
    for (int t = 0; t < s.dim(0); ++t)
      for (int f = 0; f < bins; ++f) b.specs.at(i, t, f) = s.at(t, f);
  }
  return b;
}

namespace {

Tensor slice_utterance(const PaddedBatch &b, int i) {
  const int vf = b.valid_frames[static_cast<size_t>(i)];
  const int bins = b.specs.dim(2);
  if (vf < 1 || vf > b.specs.dim(1)) {
    throw DataError("batch: valid_frames out of range");
  }
  Tensor s = Tensor::zeros({vf, bins});
  for (int t = 0; t < vf; ++t)
    for (int f = 0; f < bins; ++f) s.at(t, f) = b.specs.at(i, t, f);
  return s;
}

}  // namespace

// -------------------------------------------------------------- shape oracle

std::vector<LayerShape> simulate_shapes(const EncoderConfig &cfg, int n_frames,
                                        int n_bins) {
  std::vector<LayerShape> out;
  int t = n_frames, f = n_bins;
  for (size_t i = 0; i < cfg.conv_stack.size(); ++i) {
    const ConvLayerSpec &l = cfg.conv_stack[i];
    if (t < l.kernel_h || f < l.kernel_w) {
      throw DataError("cnn: input " + std::to_string(t) + "x" +
                      std::to_string(f) + " smaller than layer " +
                      std::to_string(i) + " kernel");
    }
    t = (t - l.kernel_h) / l.stride + 1;
    f = (f - l.kernel_w) / l.stride + 1;
    if (l.pool > 1) {
      if (t < l.pool || f < l.pool) {
        throw DataError("cnn: layer " + std::to_string(i) +
                        " output smaller than its pool window");
      }
      t /= l.pool;
      f /= l.pool;
    }
    out.push_back({l.out_channels, t, f});
  }
  return out;
}

int rnn_steps(const EncoderConfig &cfg, int n_frames) {
  return simulate_shapes(cfg, n_frames, cfg.input_bins).back().time;
}

int rnn_input_width(const EncoderConfig &cfg) {
  // frequency extent is fixed by input_bins; time extent is irrelevant here,
  // so feed a frame count guaranteed to survive the stack
  int probe = 1;
  for (const ConvLayerSpec &l : cfg.conv_stack) {
    probe = std::max(probe, l.kernel_h * l.stride * std::max(l.pool, 1));
  }
  probe *= static_cast<int>(cfg.conv_stack.size()) + 1;
  const LayerShape last =
      simulate_shapes(cfg, probe * 8, cfg.input_bins).back();
  return last.channels * last.freq;
}

// -------------------------------------------------------------------- params

namespace {

Tensor he_tensor(std::vector<int> shape, int fan_in, Rng &rng) {
  Tensor t = Tensor::zeros(std::move(shape));
  const double sd = std::sqrt(2.0 / static_cast<double>(fan_in));
  for (double &v : t.v) v = rng.gaussian(0.0, sd);
  return t;
}

GruParams init_gru(int width, int in_width, Rng &rng) {
  GruParams g;
  g.wz = he_tensor({width, in_width}, in_width, rng);
  g.uz = he_tensor({width, width}, width, rng);
  g.bz = Tensor::zeros({width});
  g.wr = he_tensor({width, in_width}, in_width, rng);
  g.ur = he_tensor({width, width}, width, rng);
  g.br = Tensor::zeros({width});
  g.wh = he_tensor({width, in_width}, in_width, rng);
  g.uh = he_tensor({width, width}, width, rng);
  g.bh = Tensor::zeros({width});
  return g;
}

}  // namespace

ModelParams init_params(const EncoderConfig &cfg, std::uint64_t seed) {
  cfg.validate();
  Rng rng(seed);
  ModelParams p;
  int in_ch = 1;
  for (const ConvLayerSpec &l : cfg.conv_stack) {
    ConvLayerParams cp;
    const int fan_in = in_ch * l.kernel_h * l.kernel_w;
    cp.kernel = he_tensor({l.out_channels, in_ch, l.kernel_h, l.kernel_w},
                          fan_in, rng);
    cp.bias = Tensor::zeros({l.out_channels});
    cp.slope = Tensor::full({1}, 0.25);
    p.conv.push_back(std::move(cp));
    in_ch = l.out_channels;
  }
  const int gru_in = rnn_input_width(cfg);
  p.gru_fwd = init_gru(cfg.rnn_width, gru_in, rng);
  p.gru_bwd = init_gru(cfg.rnn_width, gru_in, rng);
  const int rnn_out = 2 * cfg.rnn_width;
  p.fc1_weight = he_tensor({rnn_out, cfg.feature_dim}, rnn_out, rng);
  p.fc1_bias = Tensor::zeros({cfg.feature_dim});
  p.fc1_slope = Tensor::full({1}, 0.25);
  p.fc2_weight = he_tensor({cfg.feature_dim, cfg.n_classes}, cfg.feature_dim,
                           rng);
  p.fc2_bias = Tensor::zeros({cfg.n_classes});
  return p;
}

namespace {

template <typename Params, typename TensorPtr>
std::vector<std::pair<std::string, TensorPtr>> named_impl(Params &p) {
  std::vector<std::pair<std::string, TensorPtr>> out;
  for (size_t i = 0; i < p.conv.size(); ++i) {
    const std::string base = "conv" + std::to_string(i);
    out.emplace_back(base + ".kernel", &p.conv[i].kernel);
    out.emplace_back(base + ".bias", &p.conv[i].bias);
    out.emplace_back(base + ".slope", &p.conv[i].slope);
  }
  auto gru = [&out](const std::string &base, auto &g) {
    out.emplace_back(base + ".wz", &g.wz);
    out.emplace_back(base + ".uz", &g.uz);
    out.emplace_back(base + ".bz", &g.bz);
    out.emplace_back(base + ".wr", &g.wr);
    out.emplace_back(base + ".ur", &g.ur);
    out.emplace_back(base + ".br", &g.br);
    out.emplace_back(base + ".wh", &g.wh);
    out.emplace_back(base + ".uh", &g.uh);
    out.emplace_back(base + ".bh", &g.bh);
  };
  gru("gru_fwd", p.gru_fwd);
  gru("gru_bwd", p.gru_bwd);
  out.emplace_back("fc1.weight", &p.fc1_weight);
  out.emplace_back("fc1.bias", &p.fc1_bias);
  out.emplace_back("fc1.slope", &p.fc1_slope);
  out.emplace_back("fc2.weight", &p.fc2_weight);
  out.emplace_back("fc2.bias", &p.fc2_bias);
  return out;
}

}  // namespace

std::vector<std::pair<std::string, const Tensor *>> ModelParams::named()
    const {
  return named_impl<const ModelParams, const Tensor *>(*this);
}

std::vector<std::pair<std::string, Tensor *>> ModelParams::named() {
  return named_impl<ModelParams, Tensor *>(*this);
}

// ---------------------------------------------------------------- tape route

std::vector<Var> ParamVars::flat() const {
  std::vector<Var> out;
  for (const ConvLayerVars &c : conv) {
    out.push_back(c.kernel);
    out.push_back(c.bias);
    out.push_back(c.slope);
  }
  for (const GruVars *g : {&gru_fwd, &gru_bwd}) {
    out.push_back(g->wz);
    out.push_back(g->uz);
    out.push_back(g->bz);
    out.push_back(g->wr);
    out.push_back(g->ur);
    out.push_back(g->br);
    out.push_back(g->wh);
    out.push_back(g->uh);
    out.push_back(g->bh);
  }
  out.push_back(fc1_weight);
  out.push_back(fc1_bias);
  out.push_back(fc1_slope);
  out.push_back(fc2_weight);
  out.push_back(fc2_bias);
  return out;
}

ParamVars declare_params(Tape &t, const ModelParams &p, bool with_grad) {
  auto put = [&t, with_grad](const Tensor &src) {
    Tensor copy = src;
    copy.requires_grad = with_grad;
    return t.leaf(std::move(copy));
  };
  ParamVars pv;
  for (const ConvLayerParams &c : p.conv) {
    pv.conv.push_back({put(c.kernel), put(c.bias), put(c.slope)});
  }
  auto put_gru = [&put](const GruParams &g) {
    GruVars v;
    v.wz = put(g.wz);
    v.uz = put(g.uz);
    v.bz = put(g.bz);
    v.wr = put(g.wr);
    v.ur = put(g.ur);
    v.br = put(g.br);
    v.wh = put(g.wh);
    v.uh = put(g.uh);
    v.bh = put(g.bh);
    return v;
  };
  pv.gru_fwd = put_gru(p.gru_fwd);
  pv.gru_bwd = put_gru(p.gru_bwd);
  pv.fc1_weight = put(p.fc1_weight);
  pv.fc1_bias = put(p.fc1_bias);
  pv.fc1_slope = put(p.fc1_slope);
  pv.fc2_weight = put(p.fc2_weight);
  pv.fc2_bias = put(p.fc2_bias);
  return pv;
}

ParamVars bind_params(const EncoderConfig &cfg, const std::vector<Var> &vars) {
  const size_t expect = 3 * cfg.conv_stack.size() + 18 + 5;
  if (vars.size() != expect) {
    throw Error("bind_params: got " + std::to_string(vars.size()) +
                " vars, config needs " + std::to_string(expect));
  }
  size_t i = 0;
  auto next = [&vars, &i]() { return vars[i++]; };
  ParamVars pv;
  for (size_t l = 0; l < cfg.conv_stack.size(); ++l) {
    ConvLayerVars c;
    c.kernel = next();
    c.bias = next();
    c.slope = next();
    pv.conv.push_back(c);
  }
  auto next_gru = [&next]() {
    GruVars v;
    v.wz = next();
    v.uz = next();
    v.bz = next();
    v.wr = next();
    v.ur = next();
    v.br = next();
    v.wh = next();
    v.uh = next();
    v.bh = next();
    return v;
  };
  pv.gru_fwd = next_gru();
  pv.gru_bwd = next_gru();
  pv.fc1_weight = next();
  pv.fc1_bias = next();
  pv.fc1_slope = next();
  pv.fc2_weight = next();
  pv.fc2_bias = next();
  return pv;
}

std::vector<Tensor> param_tensors(const ModelParams &p) {
  std::vector<Tensor> out;
  for (const auto &[name, tensor] : p.named()) out.push_back(*tensor);
  return out;
}

Var build_cnn(Tape &t, const EncoderConfig &cfg, const ParamVars &pv,
              const Tensor &spec) {
  if (spec.rank() != 2) throw DataError("cnn: spectrogram must be rank 2");
  if (spec.dim(1) != cfg.input_bins) {
    throw DataError("cnn: spectrogram has " + std::to_string(spec.dim(1)) +
                    " bins, model expects " + std::to_string(cfg.input_bins));
  }
  simulate_shapes(cfg, spec.dim(0), spec.dim(1));  // receptive-field check
  Tensor img = spec;
  img.shape = {1, spec.dim(0), spec.dim(1)};
  Var x = t.constant(std::move(img));
  for (size_t i = 0; i < cfg.conv_stack.size(); ++i) {
    const ConvLayerSpec &l = cfg.conv_stack[i];
    const ConvLayerVars &w = pv.conv[i];
    x = t.conv2d(x, w.kernel, l.stride, l.stride);
    x = t.channel_bias_add(x, w.bias);
    x = t.prelu(x, w.slope);
    if (l.pool > 1) x = t.maxpool2d(x, l.pool, l.pool);
  }
  return t.flatten_time(x);
}

namespace {

Var gru_step(Tape &t, const GruVars &g, Var x, Var h) {
  Var z = t.sigmoid_(t.add(t.add(t.matvec(g.wz, x), t.matvec(g.uz, h)), g.bz));
  Var r = t.sigmoid_(t.add(t.add(t.matvec(g.wr, x), t.matvec(g.ur, h)), g.br));
  Var cand = t.tanh_(
      t.add(t.add(t.matvec(g.wh, x), t.matvec(g.uh, t.mul(r, h))), g.bh));
  return t.add(t.mul(z, h), t.mul(t.scale_shift(z, -1.0, 1.0), cand));
}

}  // namespace

Var build_birnn(Tape &t, const EncoderConfig &cfg, const ParamVars &pv,
                Var seq) {
  const Tensor &sv = t.value(seq);
  if (sv.rank() != 2 || sv.dim(0) < 1) {
    throw DataError("birnn: empty sequence");
  }
  const int steps = sv.dim(0);
  Var h_fwd = t.constant(Tensor::zeros({cfg.rnn_width}));
  for (int s = 0; s < steps; ++s) {
    h_fwd = gru_step(t, pv.gru_fwd, t.row(seq, s), h_fwd);
  }
  Var h_bwd = t.constant(Tensor::zeros({cfg.rnn_width}));
  for (int s = steps - 1; s >= 0; --s) {
    h_bwd = gru_step(t, pv.gru_bwd, t.row(seq, s), h_bwd);
  }
  // forward output at the last valid step, backward output at step 1
  return t.concat(h_fwd, h_bwd);
}

Var build_feature(Tape &t, const EncoderConfig &cfg, const ParamVars &pv,
                  const Tensor &spec) {
  Var seq = build_cnn(t, cfg, pv, spec);
  Var h = build_birnn(t, cfg, pv, seq);
  Var lin = t.add(t.vecmat(h, pv.fc1_weight), pv.fc1_bias);
  return t.prelu(lin, pv.fc1_slope);
}

Var build_logits(Tape &t, const EncoderConfig &cfg, const ParamVars &pv,
                 Var z) {
  const Tensor &zv = t.value(z);
  if (zv.rank() != 1 || zv.dim(0) != cfg.feature_dim) {
    throw DataError("logits: feature has wrong dimension");
  }
  return t.add(t.vecmat(z, pv.fc2_weight), pv.fc2_bias);
}

// --------------------------------------------------------------- value route

SeqBatch cnn_encode(const EncoderConfig &cfg, const ModelParams &p,
                    const PaddedBatch &batch) {
  cfg.validate();
  SeqBatch out;
  out.seq.reserve(static_cast<size_t>(batch.size()));
  for (int i = 0; i < batch.size(); ++i) {
    Tape t;
    ParamVars pv = declare_params(t, p, false);
    Var seq = build_cnn(t, cfg, pv, slice_utterance(batch, i));
    out.seq.push_back(t.value(seq));
  }
  return out;
}

Tensor bi_rnn_compress(const EncoderConfig &cfg, const ModelParams &p,
                       const SeqBatch &batch) {
  if (batch.seq.empty()) throw DataError("birnn: empty batch");
  const int m = static_cast<int>(batch.seq.size());
  Tensor out = Tensor::zeros({m, 2 * cfg.rnn_width});
  for (int i = 0; i < m; ++i) {
    Tape t;
    ParamVars pv = declare_params(t, p, false);
    Var seq = t.constant(batch.seq[static_cast<size_t>(i)]);
    Var h = build_birnn(t, cfg, pv, seq);
    const Tensor &hv = t.value(h);
    for (int j = 0; j < hv.dim(0); ++j) out.at(i, j) = hv.at(j);
  }
  return out;
}

Tensor encode_one(const EncoderConfig &cfg, const ModelParams &p,
                  const Tensor &spec) {
  Tape t;
  ParamVars pv = declare_params(t, p, false);
  Var z = build_feature(t, cfg, pv, spec);
  return t.value(z);
}

FeatureBatch encode(const EncoderConfig &cfg, const ModelParams &p,
                    const PaddedBatch &batch, const std::vector<int> &labels) {
  cfg.validate();
  if (static_cast<int>(labels.size()) != batch.size()) {
    throw DataError("encode: label count does not match batch size");
  }
  FeatureBatch fb;
  fb.z = Tensor::zeros({batch.size(), cfg.feature_dim});
  fb.labels = labels;
  for (int i = 0; i < batch.size(); ++i) {
    const Tensor z = encode_one(cfg, p, slice_utterance(batch, i));
    for (int j = 0; j < cfg.feature_dim; ++j) fb.z.at(i, j) = z.at(j);
  }
  fb.validate(cfg.n_classes);
  return fb;
}

Tensor classify(const EncoderConfig &cfg, const ModelParams &p,
                const Tensor &z) {
  if (z.rank() != 2 || z.dim(1) != cfg.feature_dim) {
    throw DataError("classify: features must be (m, " +
                    std::to_string(cfg.feature_dim) + ")");
  }
  const int m = z.dim(0), d = cfg.feature_dim, n = cfg.n_classes;
  Tensor logits = Tensor::zeros({m, n});
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) {
      double acc = p.fc2_bias.at(j);
      for (int k = 0; k < d; ++k) acc += z.at(i, k) * p.fc2_weight.at(k, j);
      logits.at(i, j) = acc;
    }
  return logits;
}

}  // namespace sercl
