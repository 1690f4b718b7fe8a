// sercl/tape.cc

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

#include "sercl/tape.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sercl/error.h"

namespace sercl {

namespace {

double stable_sigmoid(double t) {
  if (t >= 0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

}  // namespace

// ------------------------------------------------------------------ plumbing

Var Tape::push(Tensor value, bool needs_grad, std::function<void(Tape &)> fn) {
  Node n;
  n.value = std::move(value);
  n.needs_grad = needs_grad;
  n.backprop = std::move(fn);
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

Tape::Node &Tape::node(Var v) {
  if (!v.valid() || v.id >= size()) throw Error("Tape: invalid Var");
  return nodes_[static_cast<size_t>(v.id)];
}

const Tape::Node &Tape::cnode(Var v) const {
  if (!v.valid() || v.id >= size()) throw Error("Tape: invalid Var");
  return nodes_[static_cast<size_t>(v.id)];
}

Tensor &Tape::grad_buffer(Var v) {
  Node &n = node(v);
  if (n.grad.empty()) n.grad = Tensor::zeros(n.value.shape);
  return n.grad;
}

void Tape::note_kink(double margin) {
  kink_margin_ = std::min(kink_margin_, margin);
}

void Tape::clear() {
  nodes_.clear();
  backward_run_ = false;
  kink_margin_ = std::numeric_limits<double>::infinity();
}

const Tensor &Tape::value(Var v) const { return cnode(v).value; }

bool Tape::needs_grad(Var v) const { return cnode(v).needs_grad; }

Tensor Tape::grad(Var v) const {
  const Node &n = cnode(v);
  if (!backward_run_) throw Error("Tape::grad: backward has not run");
  if (!n.needs_grad) {
    throw Error("Tape::grad: node does not require gradients");
  }
  if (n.grad.empty()) return Tensor::zeros(n.value.shape);
  return n.grad;
}

void Tape::backward(Var output, const Tensor &output_grad) {
  Node &out = node(output);
  if (!output_grad.same_shape(out.value)) {
    throw Error("Tape::backward: output_grad shape " + output_grad.shape_str() +
                " does not match output " + out.value.shape_str());
  }
  // reset any previous pass
  for (Node &n : nodes_) n.grad = Tensor();
  out.grad = output_grad;
  for (int id = output.id; id >= 0; --id) {
    Node &n = nodes_[static_cast<size_t>(id)];
    if (n.backprop && !n.grad.empty()) n.backprop(*this);
  }
  backward_run_ = true;
}

void Tape::backward(Var output) {
  if (cnode(output).value.numel() != 1) {
    throw Error("Tape::backward: output is not scalar; pass output_grad");
  }
  backward(output, Tensor::scalar(1.0));
}

// -------------------------------------------------------------------- inputs

Var Tape::leaf(Tensor value) {
  check_tensor(value, "Tape::leaf");
  const bool ng = value.requires_grad;
  return push(std::move(value), ng, nullptr);
}

Var Tape::constant(Tensor value) {
  value.requires_grad = false;
  return leaf(std::move(value));
}

// --------------------------------------------------------------- elementwise

Var Tape::add(Var a, Var b) {
  const Tensor &av = value(a), &bv = value(b);
  if (!av.same_shape(bv)) {
    throw Error("add: shape mismatch " + av.shape_str() + " vs " +
                bv.shape_str());
  }
  Tensor out = av;
  for (std::int64_t i = 0; i < out.numel(); ++i) out.v[i] += bv.v[i];
  Var o = push(std::move(out), needs_grad(a) || needs_grad(b), nullptr);
  node(o).backprop = [o, a, b](Tape &t) {
    const Tensor &g = t.cnode(o).grad;
    if (t.needs_grad(a)) {
      Tensor &ga = t.grad_buffer(a);
      for (std::int64_t i = 0; i < g.numel(); ++i) ga.v[i] += g.v[i];
    }
    if (t.needs_grad(b)) {
      Tensor &gb = t.grad_buffer(b);
      for (std::int64_t i = 0; i < g.numel(); ++i) gb.v[i] += g.v[i];
    }
  };
  return o;
}

Var Tape::sub(Var a, Var b) {
  const Tensor &av = value(a), &bv = value(b);
  if (!av.same_shape(bv)) {
    throw Error("sub: shape mismatch " + av.shape_str() + " vs " +
                bv.shape_str());
  }
  Tensor out = av;
  for (std::int64_t i = 0; i < out.numel(); ++i) out.v[i] -= bv.v[i];
  Var o = push(std::move(out), needs_grad(a) || needs_grad(b), nullptr);
  node(o).backprop = [o, a, b](Tape &t) {
    const Tensor &g = t.cnode(o).grad;
    if (t.needs_grad(a)) {
      Tensor &ga = t.grad_buffer(a);
      for (std::int64_t i = 0; i < g.numel(); ++i) ga.v[i] += g.v[i];
    }
    if (t.needs_grad(b)) {
      Tensor &gb = t.grad_buffer(b);
      for (std::int64_t i = 0; i < g.numel(); ++i) gb.v[i] -= g.v[i];
    }
  };
  return o;
}

Var Tape::mul(Var a, Var b) {
  const Tensor &av = value(a), &bv = value(b);
  if (!av.same_shape(bv)) {
    throw Error("mul: shape mismatch " + av.shape_str() + " vs " +
                bv.shape_str());
  }
  Tensor out = av;
  for (std::int64_t i = 0; i < out.numel(); ++i) out.v[i] *= bv.v[i];
  Var o = push(std::move(out), needs_grad(a) || needs_grad(b), nullptr);
  node(o).backprop = [o, a, b](Tape &t) {
    const Tensor &g = t.cnode(o).grad;
    const Tensor &av2 = t.value(a);
    const Tensor &bv2 = t.value(b);
    if (t.needs_grad(a)) {
      Tensor &ga = t.grad_buffer(a);
      for (std::int64_t i = 0; i < g.numel(); ++i) ga.v[i] += g.v[i] * bv2.v[i];
    }
    if (t.needs_grad(b)) {
      Tensor &gb = t.grad_buffer(b);
      for (std::int64_t i = 0; i < g.numel(); ++i) gb.v[i] += g.v[i] * av2.v[i];
    }
  };
  return o;
}

Var Tape::scale_shift(Var x, double a, double b) {
  Tensor out = value(x);
  for (double &t : out.v) t = a * t + b;
  Var o = push(std::move(out), needs_grad(x), nullptr);
  node(o).backprop = [o, x, a](Tape &t) {
    if (!t.needs_grad(x)) return;
    const Tensor &g = t.cnode(o).grad;
    Tensor &gx = t.grad_buffer(x);
    for (std::int64_t i = 0; i < g.numel(); ++i) gx.v[i] += a * g.v[i];
  };
  return o;
}

// ------------------------------------------------------------ linear algebra

Var Tape::matmul(Var a, Var b) {
  const Tensor &av = value(a), &bv = value(b);
  if (av.rank() != 2 || bv.rank() != 2 || av.dim(1) != bv.dim(0)) {
    throw Error("matmul: incompatible shapes " + av.shape_str() + " and " +
                bv.shape_str());
  }
  const int r = av.dim(0), k = av.dim(1), c = bv.dim(1);
  Tensor out = Tensor::zeros({r, c});
  for (int i = 0; i < r; ++i) {
    for (int p = 0; p < k; ++p) {
      const double aip = av.at(i, p);
      for (int j = 0; j < c; ++j) out.at(i, j) += aip * bv.at(p, j);
    }
  }
  Var o = push(std::move(out), needs_grad(a) || needs_grad(b), nullptr);
  node(o).backprop = [o, a, b, r, k, c](Tape &t) {
    const Tensor &g = t.cnode(o).grad;
    const Tensor &av2 = t.value(a);
    const Tensor &bv2 = t.value(b);
    if (t.needs_grad(a)) {
      Tensor &ga = t.grad_buffer(a);
      for (int i = 0; i < r; ++i)
        for (int p = 0; p < k; ++p) {
          double acc = 0.0;
          for (int j = 0; j < c; ++j) acc += g.at(i, j) * bv2.at(p, j);
          ga.at(i, p) += acc;
        }
    }
    if (t.needs_grad(b)) {
      Tensor &gb = t.grad_buffer(b);
      for (int p = 0; p < k; ++p)
        for (int j = 0; j < c; ++j) {
          double acc = 0.0;
          for (int i = 0; i < r; ++i) acc += av2.at(i, p) * g.at(i, j);
          gb.at(p, j) += acc;
        }
    }
  };
  return o;
}

Var Tape::matvec(Var m, Var x) {
  const Tensor &mv = value(m), &xv = value(x);
  if (mv.rank() != 2 || xv.rank() != 1 || mv.dim(1) != xv.dim(0)) {
    throw Error("matvec: incompatible shapes " + mv.shape_str() + " and " +
                xv.shape_str());
  }
  const int r = mv.dim(0), c = mv.dim(1);
  Tensor out = Tensor::zeros({r});
  for (int i = 0; i < r; ++i) {
    double acc = 0.0;
    for (int j = 0; j < c; ++j) acc += mv.at(i, j) * xv.at(j);
    out.at(i) = acc;
  }
  Var o = push(std::move(out), needs_grad(m) || needs_grad(x), nullptr);
  node(o).backprop = [o, m, x, r, c](Tape &t) {
    const Tensor &g = t.cnode(o).grad;
    const Tensor &mv2 = t.value(m);
    const Tensor &xv2 = t.value(x);
    if (t.needs_grad(m)) {
      Tensor &gm = t.grad_buffer(m);
      for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j) gm.at(i, j) += g.at(i) * xv2.at(j);
    }
    if (t.needs_grad(x)) {
      Tensor &gx = t.grad_buffer(x);
      for (int j = 0; j < c; ++j) {
        double acc = 0.0;
        for (int i = 0; i < r; ++i) acc += mv2.at(i, j) * g.at(i);
        gx.at(j) += acc;
      }
    }
  };
  return o;
}

Var Tape::vecmat(Var x, Var m) {
  const Tensor &xv = value(x), &mv = value(m);
  if (xv.rank() != 1 || mv.rank() != 2 || xv.dim(0) != mv.dim(0)) {
    throw Error("vecmat: incompatible shapes " + xv.shape_str() + " and " +
                mv.shape_str());
  }
  const int r = mv.dim(0), c = mv.dim(1);
  Tensor out = Tensor::zeros({c});
  for (int i = 0; i < r; ++i) {
    const double xi = xv.at(i);
    for (int j = 0; j < c; ++j) out.at(j) += xi * mv.at(i, j);
  }
  Var o = push(std::move(out), needs_grad(x) || needs_grad(m), nullptr);
  node(o).backprop = [o, x, m, r, c](Tape &t) {
    const Tensor &g = t.cnode(o).grad;
    const Tensor &xv2 = t.value(x);
    const Tensor &mv2 = t.value(m);
    if (t.needs_grad(x)) {
      Tensor &gx = t.grad_buffer(x);
      for (int i = 0; i < r; ++i) {
        double acc = 0.0;
        for (int j = 0; j < c; ++j) acc += mv2.at(i, j) * g.at(j);
        gx.at(i) += acc;
      }
    }
    if (t.needs_grad(m)) {
      Tensor &gm = t.grad_buffer(m);
      for (int i = 0; i < r; ++i) {
        const double xi = xv2.at(i);
        for (int j = 0; j < c; ++j) gm.at(i, j) += xi * g.at(j);
      }
    }
  };
  return o;
}

Var Tape::bias_add(Var m, Var b) {
  const Tensor &mv = value(m), &bv = value(b);
  if (mv.rank() != 2 || bv.rank() != 1 || mv.dim(1) != bv.dim(0)) {
    throw Error("bias_add: incompatible shapes " + mv.shape_str() + " and " +
                bv.shape_str());
  }
  const int r = mv.dim(0), c = mv.dim(1);
  Tensor out = mv;
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) out.at(i, j) += bv.at(j);
  Var o = push(std::move(out), needs_grad(m) || needs_grad(b), nullptr);
  node(o).backprop = [o, m, b, r, c](Tape &t) {
    const Tensor &g = t.cnode(o).grad;
    if (t.needs_grad(m)) {
      Tensor &gm = t.grad_buffer(m);
      for (std::int64_t i = 0; i < g.numel(); ++i) gm.v[i] += g.v[i];
    }
    if (t.needs_grad(b)) {
      Tensor &gb = t.grad_buffer(b);
      for (int j = 0; j < c; ++j) {
        double acc = 0.0;
        for (int i = 0; i < r; ++i) acc += g.at(i, j);
        gb.at(j) += acc;
      }
    }
  };
  return o;
}

// ---------------------------------------------------------------- conv stack

Var Tape::conv2d(Var input, Var kernel, int stride_h, int stride_w) {
  const Tensor &x = value(input), &k = value(kernel);
  if (x.rank() != 3 || k.rank() != 4 || k.dim(1) != x.dim(0)) {
    throw Error("conv2d: incompatible shapes " + x.shape_str() + " and " +
                k.shape_str());
  }
  if (stride_h < 1 || stride_w < 1) throw Error("conv2d: stride must be >= 1");
  const int ci = x.dim(0), h = x.dim(1), w = x.dim(2);
  const int co = k.dim(0), kh = k.dim(2), kw = k.dim(3);
  if (h < kh || w < kw) {
    throw Error("conv2d: input " + x.shape_str() +
                " smaller than kernel " + k.shape_str());
  }
  const int oh = (h - kh) / stride_h + 1;
  const int ow = (w - kw) / stride_w + 1;
  Tensor out = Tensor::zeros({co, oh, ow});
  for (int c = 0; c < co; ++c)
    for (int i = 0; i < oh; ++i)
      for (int j = 0; j < ow; ++j) {
        double acc = 0.0;
        for (int q = 0; q < ci; ++q)
          for (int a = 0; a < kh; ++a)
            for (int b = 0; b < kw; ++b)
              acc += x.at(q, i * stride_h + a, j * stride_w + b) *
                     k.at(c, q, a, b);
        out.at(c, i, j) = acc;
      }
  Var o = push(std::move(out), needs_grad(input) || needs_grad(kernel),
               nullptr);
  node(o).backprop = [o, input, kernel, stride_h, stride_w, ci, co, kh, kw, oh,
                      ow](Tape &t) {
    const Tensor &g = t.cnode(o).grad;
    const Tensor &x2 = t.value(input);
    const Tensor &k2 = t.value(kernel);
    if (t.needs_grad(input)) {
      Tensor &gx = t.grad_buffer(input);
      for (int c = 0; c < co; ++c)
        for (int i = 0; i < oh; ++i)
          for (int j = 0; j < ow; ++j) {
            const double gv = g.at(c, i, j);
            if (gv == 0.0) continue;
            for (int q = 0; q < ci; ++q)
              for (int a = 0; a < kh; ++a)
                for (int b = 0; b < kw; ++b)
                  gx.at(q, i * stride_h + a, j * stride_w + b) +=
                      gv * k2.at(c, q, a, b);
          }
    }
    if (t.needs_grad(kernel)) {
      Tensor &gk = t.grad_buffer(kernel);
      for (int c = 0; c < co; ++c)
        for (int i = 0; i < oh; ++i)
          for (int j = 0; j < ow; ++j) {
            const double gv = g.at(c, i, j);
            if (gv == 0.0) continue;
            for (int q = 0; q < ci; ++q)
              for (int a = 0; a < kh; ++a)
                for (int b = 0; b < kw; ++b)
                  gk.at(c, q, a, b) +=
                      gv * x2.at(q, i * stride_h + a, j * stride_w + b);
          }
    }
  };
  return o;
}

Var Tape::channel_bias_add(Var x, Var b) {
  const Tensor &xv = value(x), &bv = value(b);
  if (xv.rank() != 3 || bv.rank() != 1 || bv.dim(0) != xv.dim(0)) {
    throw Error("channel_bias_add: incompatible shapes " + xv.shape_str() +
                " and " + bv.shape_str());
  }
  const int c = xv.dim(0), h = xv.dim(1), w = xv.dim(2);
  Tensor out = xv;
  for (int q = 0; q < c; ++q)
    for (int i = 0; i < h; ++i)
      for (int j = 0; j < w; ++j) out.at(q, i, j) += bv.at(q);
  Var o = push(std::move(out), needs_grad(x) || needs_grad(b), nullptr);
  node(o).backprop = [o, x, b, c, h, w](Tape &t) {
    const Tensor &g = t.cnode(o).grad;
    if (t.needs_grad(x)) {
      Tensor &gx = t.grad_buffer(x);
      for (std::int64_t i = 0; i < g.numel(); ++i) gx.v[i] += g.v[i];
    }
    if (t.needs_grad(b)) {
      Tensor &gb = t.grad_buffer(b);
      for (int q = 0; q < c; ++q) {
        double acc = 0.0;
        for (int i = 0; i < h; ++i)
          for (int j = 0; j < w; ++j) acc += g.at(q, i, j);
        gb.at(q) += acc;
      }
    }
  };
  return o;
}

Var Tape::maxpool2d(Var x, int pool_h, int pool_w) {
  const Tensor &xv = value(x);
  if (xv.rank() != 3) throw Error("maxpool2d: input must be rank 3");
  if (pool_h < 1 || pool_w < 1) throw Error("maxpool2d: pool must be >= 1");
  const int c = xv.dim(0), h = xv.dim(1), w = xv.dim(2);
  if (h < pool_h || w < pool_w) {
    throw Error("maxpool2d: input " + xv.shape_str() + " smaller than pool");
  }
  const int oh = (h - pool_h) / pool_h + 1;
  const int ow = (w - pool_w) / pool_w + 1;
  Tensor out = Tensor::zeros({c, oh, ow});
  std::vector<int> argmax(static_cast<size_t>(c) * oh * ow);
  double margin = std::numeric_limits<double>::infinity();
  size_t cell = 0;
  for (int q = 0; q < c; ++q)
    for (int i = 0; i < oh; ++i)
      for (int j = 0; j < ow; ++j, ++cell) {
        double best = -std::numeric_limits<double>::infinity();
        double second = -std::numeric_limits<double>::infinity();
        int best_idx = -1;
        for (int a = 0; a < pool_h; ++a)
          for (int b = 0; b < pool_w; ++b) {
            const int ih = i * pool_h + a;
            const int iw = j * pool_w + b;
            const double v = xv.at(q, ih, iw);
            if (v > best) {
              second = best;
              best = v;
              best_idx = (q * h + ih) * w + iw;
            } else if (v > second) {
              second = v;
            }
          }
        out.at(q, i, j) = best;
        argmax[cell] = best_idx;
        if (pool_h * pool_w > 1) margin = std::min(margin, best - second);
      }
  note_kink(margin);
  Var o = push(std::move(out), needs_grad(x), nullptr);
  node(o).backprop = [o, x, argmax](Tape &t) {
    if (!t.needs_grad(x)) return;
    const Tensor &g = t.cnode(o).grad;
    Tensor &gx = t.grad_buffer(x);
    for (std::int64_t i = 0; i < g.numel(); ++i) {
      gx.v[static_cast<size_t>(argmax[static_cast<size_t>(i)])] += g.v[i];
    }
  };
  return o;
}

// ------------------------------------------------------------ nonlinearities

Var Tape::tanh_(Var x) {
  Tensor out = value(x);
  for (double &t : out.v) t = std::tanh(t);
  Var o = push(std::move(out), needs_grad(x), nullptr);
  node(o).backprop = [o, x](Tape &t) {
    if (!t.needs_grad(x)) return;
    const Tensor &g = t.cnode(o).grad;
    const Tensor &y = t.value(o);
    Tensor &gx = t.grad_buffer(x);
    for (std::int64_t i = 0; i < g.numel(); ++i) {
      gx.v[i] += g.v[i] * (1.0 - y.v[i] * y.v[i]);
    }
  };
  return o;
}

Var Tape::sigmoid_(Var x) {
  Tensor out = value(x);
  for (double &t : out.v) t = stable_sigmoid(t);
  Var o = push(std::move(out), needs_grad(x), nullptr);
  node(o).backprop = [o, x](Tape &t) {
    if (!t.needs_grad(x)) return;
    const Tensor &g = t.cnode(o).grad;
    const Tensor &y = t.value(o);
    Tensor &gx = t.grad_buffer(x);
    for (std::int64_t i = 0; i < g.numel(); ++i) {
      gx.v[i] += g.v[i] * y.v[i] * (1.0 - y.v[i]);
    }
  };
  return o;
}

Var Tape::prelu(Var x, Var slope) {
  const Tensor &xv = value(x), &sv = value(slope);
  if (sv.numel() != 1) throw Error("prelu: slope must be a 1-element tensor");
  const double a = sv.at(0);
  Tensor out = xv;
  double margin = std::numeric_limits<double>::infinity();
  for (double &t : out.v) {
    margin = std::min(margin, std::abs(t));
    if (t < 0) t *= a;
  }
  note_kink(margin);
  Var o = push(std::move(out), needs_grad(x) || needs_grad(slope), nullptr);
  node(o).backprop = [o, x, slope](Tape &t) {
    const Tensor &g = t.cnode(o).grad;
    const Tensor &xv2 = t.value(x);
    const double a2 = t.value(slope).at(0);
    if (t.needs_grad(x)) {
      Tensor &gx = t.grad_buffer(x);
      for (std::int64_t i = 0; i < g.numel(); ++i) {
        // derivative at exactly 0 takes the positive branch
        gx.v[i] += g.v[i] * (xv2.v[i] >= 0 ? 1.0 : a2);
      }
    }
    if (t.needs_grad(slope)) {
      Tensor &gs = t.grad_buffer(slope);
      double acc = 0.0;
      for (std::int64_t i = 0; i < g.numel(); ++i) {
        if (xv2.v[i] < 0) acc += g.v[i] * xv2.v[i];
      }
      gs.at(0) += acc;
    }
  };
  return o;
}

// ------------------------------------------------------------------ shuffles

Var Tape::concat(Var a, Var b) {
  const Tensor &av = value(a), &bv = value(b);
  if (av.rank() != 1 || bv.rank() != 1) {
    throw Error("concat: both inputs must be rank 1");
  }
  const int m = av.dim(0), n = bv.dim(0);
  Tensor out = Tensor::zeros({m + n});
  std::copy(av.v.begin(), av.v.end(), out.v.begin());
  std::copy(bv.v.begin(), bv.v.end(), out.v.begin() + m);
  Var o = push(std::move(out), needs_grad(a) || needs_grad(b), nullptr);
  node(o).backprop = [o, a, b, m, n](Tape &t) {
    const Tensor &g = t.cnode(o).grad;
    if (t.needs_grad(a)) {
      Tensor &ga = t.grad_buffer(a);
      for (int i = 0; i < m; ++i) ga.at(i) += g.at(i);
    }
    if (t.needs_grad(b)) {
      Tensor &gb = t.grad_buffer(b);
      for (int i = 0; i < n; ++i) gb.at(i) += g.at(m + i);
    }
  };
  return o;
}

Var Tape::slice_rows(Var m, int row_begin, int row_end) {
  const Tensor &mv = value(m);
  if (mv.rank() != 2) throw Error("slice_rows: input must be rank 2");
  if (row_begin < 0 || row_end > mv.dim(0) || row_begin >= row_end) {
    throw Error("slice_rows: bad row range");
  }
  const int c = mv.dim(1);
  const int rows = row_end - row_begin;
  Tensor out = Tensor::zeros({rows, c});
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < c; ++j) out.at(i, j) = mv.at(row_begin + i, j);
  Var o = push(std::move(out), needs_grad(m), nullptr);
  node(o).backprop = [o, m, row_begin, rows, c](Tape &t) {
    if (!t.needs_grad(m)) return;
    const Tensor &g = t.cnode(o).grad;
    Tensor &gm = t.grad_buffer(m);
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < c; ++j) gm.at(row_begin + i, j) += g.at(i, j);
  };
  return o;
}

Var Tape::row(Var m, int r) {
  const Tensor &mv = value(m);
  if (mv.rank() != 2) throw Error("row: input must be rank 2");
  if (r < 0 || r >= mv.dim(0)) throw Error("row: index out of range");
  const int c = mv.dim(1);
  Tensor out = Tensor::zeros({c});
  for (int j = 0; j < c; ++j) out.at(j) = mv.at(r, j);
  Var o = push(std::move(out), needs_grad(m), nullptr);
  node(o).backprop = [o, m, r, c](Tape &t) {
    if (!t.needs_grad(m)) return;
    const Tensor &g = t.cnode(o).grad;
    Tensor &gm = t.grad_buffer(m);
    for (int j = 0; j < c; ++j) gm.at(r, j) += g.at(j);
  };
  return o;
}

Var Tape::element(Var x, int i) {
  const Tensor &xv = value(x);
  if (xv.rank() != 1) throw Error("element: input must be rank 1");
  if (i < 0 || i >= xv.dim(0)) throw Error("element: index out of range");
  Var o = push(Tensor::scalar(xv.at(i)), needs_grad(x), nullptr);
  node(o).backprop = [o, x, i](Tape &t) {
    if (!t.needs_grad(x)) return;
    t.grad_buffer(x).at(i) += t.cnode(o).grad.at(0);
  };
  return o;
}

Var Tape::flatten_time(Var x) {
  const Tensor &xv = value(x);
  if (xv.rank() != 3) throw Error("flatten_time: input must be rank 3");
  const int c = xv.dim(0), h = xv.dim(1), w = xv.dim(2);
  Tensor out = Tensor::zeros({h, c * w});
  for (int q = 0; q < c; ++q)
    for (int i = 0; i < h; ++i)
      for (int j = 0; j < w; ++j) out.at(i, q * w + j) = xv.at(q, i, j);
  Var o = push(std::move(out), needs_grad(x), nullptr);
  node(o).backprop = [o, x, c, h, w](Tape &t) {
    if (!t.needs_grad(x)) return;
    const Tensor &g = t.cnode(o).grad;
    Tensor &gx = t.grad_buffer(x);
    for (int q = 0; q < c; ++q)
      for (int i = 0; i < h; ++i)
        for (int j = 0; j < w; ++j) gx.at(q, i, j) += g.at(i, q * w + j);
  };
  return o;
}

// ---------------------------------------------------------------- reductions

Var Tape::sum(Var x) {
  const Tensor &xv = value(x);
  double acc = 0.0;
  for (double t : xv.v) acc += t;
  Var o = push(Tensor::scalar(acc), needs_grad(x), nullptr);
  node(o).backprop = [o, x](Tape &t) {
    if (!t.needs_grad(x)) return;
    const double g = t.cnode(o).grad.at(0);
    Tensor &gx = t.grad_buffer(x);
    for (double &v : gx.v) v += g;
  };
  return o;
}

Var Tape::mean(Var x) {
  const Tensor &xv = value(x);
  const double n = static_cast<double>(xv.numel());
  double acc = 0.0;
  for (double t : xv.v) acc += t;
  Var o = push(Tensor::scalar(acc / n), needs_grad(x), nullptr);
  node(o).backprop = [o, x, n](Tape &t) {
    if (!t.needs_grad(x)) return;
    const double g = t.cnode(o).grad.at(0) / n;
    Tensor &gx = t.grad_buffer(x);
    for (double &v : gx.v) v += g;
  };
  return o;
}

Var Tape::logsumexp(Var x) {
  const Tensor &xv = value(x);
  if (xv.rank() != 1) throw Error("logsumexp: input must be rank 1");
  double m = -std::numeric_limits<double>::infinity();
  for (double t : xv.v) m = std::max(m, t);
  double acc = 0.0;
  for (double t : xv.v) acc += std::exp(t - m);
  const double lse = m + std::log(acc);
  Var o = push(Tensor::scalar(lse), needs_grad(x), nullptr);
  node(o).backprop = [o, x, lse](Tape &t) {
    if (!t.needs_grad(x)) return;
    const double g = t.cnode(o).grad.at(0);
    const Tensor &xv2 = t.value(x);
    Tensor &gx = t.grad_buffer(x);
    for (std::int64_t i = 0; i < xv2.numel(); ++i) {
      gx.v[i] += g * std::exp(xv2.v[i] - lse);
    }
  };
  return o;
}

// ------------------------------------------------------------------- Program

Tensor Program::forward_eval(const std::vector<Tensor> &inputs) {
  tape_.clear();
  input_vars_.clear();
  input_vars_.reserve(inputs.size());
  for (const Tensor &t : inputs) input_vars_.push_back(tape_.leaf(t));
  output_ = fn_(tape_, input_vars_);
  if (!output_.valid()) throw Error("Program: graph produced no output");
  forward_done_ = true;
  return tape_.value(output_);
}

std::vector<Tensor> Program::backward(const Tensor &output_grad) {
  if (!forward_done_) {
    throw Error("Program::backward called before forward_eval");
  }
  tape_.backward(output_, output_grad);
  std::vector<Tensor> grads;
  grads.reserve(input_vars_.size());
  for (Var v : input_vars_) {
    grads.push_back(tape_.needs_grad(v) ? tape_.grad(v) : Tensor());
  }
  return grads;
}

// ---------------------------------------------------------------- grad_check

double grad_check(const GraphFn &fn, const std::vector<Tensor> &point,
                  double eps) {
  std::vector<Tensor> inputs = point;
  for (Tensor &t : inputs) t.requires_grad = true;

  Program prog(fn);
  const Tensor out = prog.forward_eval(inputs);
  if (out.numel() != 1) throw Error("grad_check: graph must be scalar-valued");
  const std::vector<Tensor> analytic = prog.backward(Tensor::scalar(1.0));

  double max_rel = 0.0;
  for (size_t i = 0; i < inputs.size(); ++i) {
    for (std::int64_t c = 0; c < inputs[i].numel(); ++c) {
      std::vector<Tensor> plus = inputs;
      plus[i].v[static_cast<size_t>(c)] += eps;
      std::vector<Tensor> minus = inputs;
      minus[i].v[static_cast<size_t>(c)] -= eps;
      Program p2(fn);
      const double f_plus = p2.forward_eval(plus).at(0);
      const double f_minus = p2.forward_eval(minus).at(0);
      const double numeric = (f_plus - f_minus) / (2.0 * eps);
      const double rel = std::abs(analytic[i].at(static_cast<int>(c)) - numeric) /
                         std::max(1.0, std::abs(numeric));
      max_rel = std::max(max_rel, rel);
    }
  }
  return max_rel;
}

}  // namespace sercl
