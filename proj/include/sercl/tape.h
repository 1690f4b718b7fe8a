// sercl/tape.h

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

#ifndef SERCL_TAPE_H_
#define SERCL_TAPE_H_

#include <functional>
#include <limits>
#include <vector>

#include "sercl/tensor.h"

namespace sercl {

// Handle to a node on a Tape.
struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

// Reverse-mode differentiation tape. Calling a primitive evaluates it
// immediately and records how to push gradients back to its inputs, so the
// node list is topologically ordered by construction. A tape is single-owner
// during a forward/backward pass; distinct tapes may run concurrently.
class Tape {
 public:
  // Inputs. leaf() takes requires_grad from the tensor; constant() never
  // receives a gradient.
  Var leaf(Tensor value);
  Var constant(Tensor value);

  // Elementwise, equal shapes.
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  // a*x + b applied elementwise with scalar constants.
  Var scale_shift(Var x, double a, double b);

  // Linear algebra.
  Var matmul(Var a, Var b);          // (r x k) * (k x c) -> (r x c)
  Var matvec(Var m, Var x);          // (r x c) * (c)     -> (r)
  Var vecmat(Var x, Var m);          // (r) * (r x c)     -> (c)
  Var bias_add(Var m, Var b);        // (r x c) + row-broadcast (c)

  // Convolution stack. Input is (C, H, W); kernel (Co, Ci, kh, kw).
  Var conv2d(Var input, Var kernel, int stride_h, int stride_w);
  Var channel_bias_add(Var x, Var b);  // (C, H, W) + per-channel (C)
  Var maxpool2d(Var x, int pool_h, int pool_w);  // non-overlapping, valid

  // Nonlinearities.
  Var tanh_(Var x);
  Var sigmoid_(Var x);
  Var prelu(Var x, Var slope);  // slope is a 1-element tensor

  // Shuffling.
  Var concat(Var a, Var b);                      // rank-1 ++ rank-1
  Var slice_rows(Var m, int row_begin, int row_end);
  Var row(Var m, int r);                         // rank-2 row -> rank-1
  Var element(Var x, int i);                     // rank-1 entry -> scalar
  Var flatten_time(Var x);  // (C, H, W) -> (H, C*W), time-major steps

  // Reductions.
  Var sum(Var x);
  Var mean(Var x);
  Var logsumexp(Var x);  // rank-1 -> scalar, max-subtracted

  // Runs the recorded adjoint program. The scalar overload seeds with 1.
  void backward(Var output, const Tensor &output_grad);
  void backward(Var output);

  const Tensor &value(Var v) const;
  // Gradient accumulated at v by the last backward(); zeros if v required a
  // gradient but was not reached.
  Tensor grad(Var v) const;
  bool needs_grad(Var v) const;
  bool backward_run() const { return backward_run_; }

  // Smallest distance to a PReLU or max-pool kink observed during forward;
  // +inf when no such primitive was recorded. Gradient checks use this to
  // reject points too close to non-differentiable spots.
  double kink_margin() const { return kink_margin_; }

  int size() const { return static_cast<int>(nodes_.size()); }
  void clear();

 private:
  struct Node {
    Tensor value;
    Tensor grad;  // allocated lazily during backward
    bool needs_grad = false;
    std::function<void(Tape &)> backprop;  // empty for leaves/constants
  };

  std::vector<Node> nodes_;
  bool backward_run_ = false;
  double kink_margin_ = std::numeric_limits<double>::infinity();

  Var push(Tensor value, bool needs_grad, std::function<void(Tape &)> fn);
  Node &node(Var v);
  const Node &cnode(Var v) const;
  Tensor &grad_buffer(Var v);
  void note_kink(double margin);

  friend class TapeGradAccess;
};

// A differentiable program: a function that builds an output node from
// input nodes. forward_eval records a fresh tape; backward replays it.
using GraphFn = std::function<Var(Tape &, const std::vector<Var> &)>;

class Program {
 public:
  explicit Program(GraphFn fn) : fn_(std::move(fn)) {}

  // Evaluates the graph on the inputs. Deterministic: identical inputs give
  // bit-identical outputs.
  Tensor forward_eval(const std::vector<Tensor> &inputs);

  // Gradients of <output, output_grad> for every requires_grad input, in
  // input order; inputs without requires_grad get an empty tensor. Throws
  // if forward_eval has not run on this program.
  std::vector<Tensor> backward(const Tensor &output_grad);

  const Tape &tape() const { return tape_; }
  Var output() const { return output_; }

 private:
  GraphFn fn_;
  Tape tape_;
  std::vector<Var> input_vars_;
  Var output_{};
  bool forward_done_ = false;
};

// Max over all input coordinates of
// |analytic - central difference| / max(1, |central difference|)
// for a scalar-valued graph. 64-bit arithmetic, step eps.
double grad_check(const GraphFn &fn, const std::vector<Tensor> &point,
                  double eps = 1e-5);

}  // namespace sercl

#endif  // SERCL_TAPE_H_
