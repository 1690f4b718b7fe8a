// sercl/test_autodiff.cc

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
#include <random>
#include <vector>

#include "doctest.h"
#include "sercl/error.h"
#include "sercl/tape.h"
#include "sercl/tensor.h"

namespace {

using sercl::grad_check;
using sercl::GraphFn;
using sercl::Program;
using sercl::Tape;
using sercl::Tensor;
using sercl::Var;

std::mt19937 &rng() {
  static std::mt19937 gen(20260801);
  return gen;
}

Tensor rand_tensor(std::vector<int> shape, double lo = -1.0, double hi = 1.0) {
  Tensor t = Tensor::zeros(std::move(shape));
  std::uniform_real_distribution<double> d(lo, hi);
  for (double &v : t.v) v = d(rng());
  return t;
}

// Magnitudes in [0.1, 1.1] with random signs, clear of the PReLU kink.
Tensor rand_kink_free(std::vector<int> shape) {
  Tensor t = Tensor::zeros(std::move(shape));
  std::uniform_real_distribution<double> d(0.1, 1.1);
  std::bernoulli_distribution sign(0.5);
  for (double &v : t.v) v = sign(rng()) ? d(rng()) : -d(rng());
  return t;
}

// Well-separated values (gap >= 0.005) in shuffled order, so max pooling
// stays far from argmax ties under 1e-5 probes.
Tensor rand_separated(std::vector<int> shape) {
  Tensor t = Tensor::zeros(std::move(shape));
  std::vector<double> vals;
  for (size_t i = 0; i < t.v.size(); ++i) {
    vals.push_back(static_cast<double>(i) * 0.01 - 0.5);
  }
  std::shuffle(vals.begin(), vals.end(), rng());
  std::uniform_real_distribution<double> jitter(-2e-3, 2e-3);
  for (size_t i = 0; i < t.v.size(); ++i) t.v[i] = vals[i] + jitter(rng());
  return t;
}

void check_primitive(const GraphFn &fn, const std::vector<Tensor> &inputs) {
  CHECK(grad_check(fn, inputs) < 1e-4);
}

}  // namespace

TEST_CASE("identity graph returns its input bit for bit") {
  Program p([](Tape &, const std::vector<Var> &in) { return in[0]; });
  const Tensor x = rand_tensor({5});
  const Tensor y = p.forward_eval({x});
  CHECK(y.v == x.v);
}

TEST_CASE("affine graph with identity weights and zero bias is identity") {
  Tensor eye = Tensor::zeros({3, 3});
  for (int i = 0; i < 3; ++i) eye.v[static_cast<size_t>(i * 3 + i)] = 1.0;
  Program p([eye](Tape &t, const std::vector<Var> &in) {
    Var w = t.constant(eye);
    Var b = t.constant(Tensor::zeros({3}));
    return t.add(t.matvec(w, in[0]), b);
  });
  const Tensor x = Tensor::vec({0.3, -1.7, 2.5});
  CHECK(p.forward_eval({x}).v == x.v);
}

TEST_CASE("two-layer composition matches a hand-computed oracle") {
  const Tensor w1 = rand_tensor({3, 3});
  const Tensor w2 = rand_tensor({3, 3});
  const Tensor x = rand_tensor({3});
  Program p([&](Tape &t, const std::vector<Var> &in) {
    Var h = t.tanh_(t.matvec(t.constant(w1), in[0]));
    return t.matvec(t.constant(w2), h);
  });
  const Tensor y = p.forward_eval({x});

  double h[3], expect[3];
  for (int i = 0; i < 3; ++i) {
    double acc = 0.0;
    for (int j = 0; j < 3; ++j) acc += w1.at(i, j) * x.v[static_cast<size_t>(j)];
    h[i] = std::tanh(acc);
  }
  for (int i = 0; i < 3; ++i) {
    double acc = 0.0;
    for (int j = 0; j < 3; ++j) acc += w2.at(i, j) * h[j];
    expect[i] = acc;
  }
  for (int i = 0; i < 3; ++i) {
    CHECK(y.v[static_cast<size_t>(i)] ==
          doctest::Approx(expect[i]).epsilon(1e-12));
  }
}

TEST_CASE("forward is deterministic") {
  Program p([](Tape &t, const std::vector<Var> &in) {
    return t.logsumexp(t.tanh_(t.matvec(in[0], in[1])));
  });
  const Tensor m = rand_tensor({4, 6});
  const Tensor x = rand_tensor({6});
  const Tensor a = p.forward_eval({m, x});
  const Tensor b = p.forward_eval({m, x});
  CHECK(a.v == b.v);
}

TEST_CASE("identity backward passes the output grad through") {
  Tape t;
  Tensor x = rand_tensor({4});
  x.requires_grad = true;
  Var v = t.leaf(x);
  const Tensor g = rand_tensor({4});
  t.backward(v, g);
  CHECK(t.grad(v).v == g.v);
}

TEST_CASE("fan-out accumulates additively") {
  Tape t;
  Tensor x = rand_tensor({4});
  x.requires_grad = true;
  Var v = t.leaf(x);
  Var y = t.add(v, v);
  const Tensor g = rand_tensor({4});
  t.backward(y, g);
  const Tensor gv = t.grad(v);
  for (size_t i = 0; i < gv.v.size(); ++i) {
    CHECK(gv.v[i] == doctest::Approx(2.0 * g.v[i]).epsilon(1e-15));
  }
}

TEST_CASE("sum of a matrix-vector product matches finite differences") {
  GraphFn fn = [](Tape &t, const std::vector<Var> &in) {
    return t.sum(t.matvec(in[0], in[1]));
  };
  for (int trial = 0; trial < 5; ++trial) {
    CHECK(grad_check(fn, {rand_tensor({4, 3}), rand_tensor({3})}) < 1e-4);
  }
}

TEST_CASE("linear graphs check out to 1e-9") {
  GraphFn fn = [](Tape &t, const std::vector<Var> &in) {
    return t.sum(t.bias_add(t.matmul(in[0], in[1]), in[2]));
  };
  for (int trial = 0; trial < 5; ++trial) {
    CHECK(grad_check(fn, {rand_tensor({3, 4}), rand_tensor({4, 2}),
                          rand_tensor({2})}) < 1e-9);
  }
}

TEST_CASE("softmax cross-entropy composite checks out") {
  for (int trial = 0; trial < 10; ++trial) {
    const int label = trial % 5;
    GraphFn fn = [label](Tape &t, const std::vector<Var> &in) {
      return t.sub(t.logsumexp(in[0]), t.element(in[0], label));
    };
    CHECK(grad_check(fn, {rand_tensor({5}, -3.0, 3.0)}) < 1e-4);
  }
}

TEST_CASE("three-step gru unroll checks out") {
  // Inputs: x1, x2, x3, then wz, uz, bz, wr, ur, br, wh, uh, bh.
  GraphFn fn = [](Tape &t, const std::vector<Var> &in) {
    Var h = t.constant(Tensor::zeros({4}));
    for (int step = 0; step < 3; ++step) {
      Var x = in[static_cast<size_t>(step)];
      Var z = t.sigmoid_(t.add(t.add(t.matvec(in[3], x), t.matvec(in[4], h)),
                               in[5]));
      Var r = t.sigmoid_(t.add(t.add(t.matvec(in[6], x), t.matvec(in[7], h)),
                               in[8]));
      Var g = t.tanh_(t.add(t.add(t.matvec(in[9], x),
                                  t.matvec(in[10], t.mul(r, h))),
                            in[11]));
      h = t.add(t.mul(z, h), t.mul(t.scale_shift(z, -1.0, 1.0), g));
    }
    return t.sum(h);
  };
  for (int trial = 0; trial < 3; ++trial) {
    std::vector<Tensor> inputs;
    for (int i = 0; i < 3; ++i) inputs.push_back(rand_tensor({3}));
    for (int gate = 0; gate < 3; ++gate) {
      inputs.push_back(rand_tensor({4, 3}));
      inputs.push_back(rand_tensor({4, 4}));
      inputs.push_back(rand_tensor({4}));
    }
    CHECK(grad_check(fn, inputs) < 1e-4);
  }
}

TEST_CASE("every primitive passes 20 random gradient checks") {
  auto quad = [](Tape &t, Var o) { return t.mean(t.mul(o, o)); };

  for (int trial = 0; trial < 20; ++trial) {
    check_primitive(
        [&](Tape &t, const std::vector<Var> &in) {
          return quad(t, t.add(in[0], in[1]));
        },
        {rand_tensor({3, 4}), rand_tensor({3, 4})});
    check_primitive(
        [&](Tape &t, const std::vector<Var> &in) {
          return quad(t, t.sub(in[0], in[1]));
        },
        {rand_tensor({5}), rand_tensor({5})});
    check_primitive(
        [&](Tape &t, const std::vector<Var> &in) {
          return quad(t, t.mul(in[0], in[1]));
        },
        {rand_tensor({2, 3}), rand_tensor({2, 3})});
    check_primitive(
        [&](Tape &t, const std::vector<Var> &in) {
          return t.sum(t.mul(t.scale_shift(in[0], 1.7, -0.3), in[0]));
        },
        {rand_tensor({6})});
    check_primitive(
        [&](Tape &t, const std::vector<Var> &in) {
          return quad(t, t.matmul(in[0], in[1]));
        },
        {rand_tensor({3, 4}), rand_tensor({4, 2})});
    check_primitive(
        [&](Tape &t, const std::vector<Var> &in) {
          return quad(t, t.matvec(in[0], in[1]));
        },
        {rand_tensor({3, 4}), rand_tensor({4})});
    check_primitive(
        [&](Tape &t, const std::vector<Var> &in) {
          return quad(t, t.vecmat(in[0], in[1]));
        },
        {rand_tensor({3}), rand_tensor({3, 4})});
    check_primitive(
        [&](Tape &t, const std::vector<Var> &in) {
          return quad(t, t.bias_add(in[0], in[1]));
        },
        {rand_tensor({3, 4}), rand_tensor({4})});
    check_primitive(
        [&](Tape &t, const std::vector<Var> &in) {
          return quad(t, t.conv2d(in[0], in[1], 1, 1));
        },
        {rand_tensor({2, 5, 6}), rand_tensor({3, 2, 2, 2})});
    check_primitive(
        [&](Tape &t, const std::vector<Var> &in) {
          return quad(t, t.conv2d(in[0], in[1], 2, 2));
        },
        {rand_tensor({2, 7, 7}), rand_tensor({2, 2, 3, 3})});
    check_primitive(
        [&](Tape &t, const std::vector<Var> &in) {
          return quad(t, t.channel_bias_add(in[0], in[1]));
        },
        {rand_tensor({2, 4, 4}), rand_tensor({2})});
    check_primitive(
        [&](Tape &t, const std::vector<Var> &in) {
          return quad(t, t.maxpool2d(in[0], 2, 3));
        },
        {rand_separated({2, 4, 6})});
    check_primitive(
        [&](Tape &t, const std::vector<Var> &in) {
          return quad(t, t.tanh_(in[0]));
        },
        {rand_tensor({7})});
    check_primitive(
        [&](Tape &t, const std::vector<Var> &in) {
          return quad(t, t.sigmoid_(in[0]));
        },
        {rand_tensor({7})});
    check_primitive(
        [&](Tape &t, const std::vector<Var> &in) {
          return quad(t, t.prelu(in[0], in[1]));
        },
        {rand_kink_free({6}), rand_tensor({1}, 0.15, 0.35)});
    check_primitive(
        [&](Tape &t, const std::vector<Var> &in) {
          return quad(t, t.concat(in[0], in[1]));
        },
        {rand_tensor({3}), rand_tensor({4})});
    check_primitive(
        [&](Tape &t, const std::vector<Var> &in) {
          return quad(t, t.slice_rows(in[0], 1, 4));
        },
        {rand_tensor({5, 3})});
    check_primitive(
        [&](Tape &t, const std::vector<Var> &in) {
          return quad(t, t.row(in[0], 2));
        },
        {rand_tensor({4, 3})});
    check_primitive(
        [&](Tape &t, const std::vector<Var> &in) {
          return t.mul(t.element(in[0], 3), t.element(in[0], 1));
        },
        {rand_tensor({5})});
    check_primitive(
        [&](Tape &t, const std::vector<Var> &in) {
          return quad(t, t.flatten_time(in[0]));
        },
        {rand_tensor({2, 3, 4})});
    check_primitive(
        [&](Tape &t, const std::vector<Var> &in) {
          return t.sum(t.mul(in[0], in[0]));
        },
        {rand_tensor({3, 2})});
    check_primitive(
        [&](Tape &t, const std::vector<Var> &in) {
          return t.mean(t.mul(in[0], in[0]));
        },
        {rand_tensor({4})});
    check_primitive(
        [&](Tape &t, const std::vector<Var> &in) {
          return t.logsumexp(in[0]);
        },
        {rand_tensor({6}, -3.0, 3.0)});
  }
}

TEST_CASE("backward distributes over graph sums to 1e-10") {
  const Tensor x = rand_tensor({6});
  auto grad_of = [&x](const GraphFn &fn) {
    Program p(fn);
    Tensor in = x;
    in.requires_grad = true;
    p.forward_eval({in});
    return p.backward(Tensor::scalar(1.0))[0];
  };
  GraphFn f = [](Tape &t, const std::vector<Var> &in) {
    return t.sum(t.mul(in[0], in[0]));
  };
  GraphFn g = [](Tape &t, const std::vector<Var> &in) {
    return t.logsumexp(in[0]);
  };
  GraphFn both = [&](Tape &t, const std::vector<Var> &in) {
    return t.add(f(t, in), g(t, in));
  };
  const Tensor gf = grad_of(f);
  const Tensor gg = grad_of(g);
  const Tensor gb = grad_of(both);
  for (size_t i = 0; i < gb.v.size(); ++i) {
    CHECK(gb.v[i] == doctest::Approx(gf.v[i] + gg.v[i]).epsilon(1e-10));
  }
}

TEST_CASE("prelu at exactly zero takes the positive branch") {
  Tape t;
  Tensor xv = Tensor::vec({-0.5, 0.0, 0.7});
  xv.requires_grad = true;
  Tensor av = Tensor::vec({0.25});
  av.requires_grad = true;
  Var x = t.leaf(xv);
  Var a = t.leaf(av);
  Var y = t.prelu(x, a);
  CHECK(t.value(y).v == std::vector<double>{-0.125, 0.0, 0.7});
  t.backward(t.sum(y));
  CHECK(t.grad(x).v == std::vector<double>{0.25, 1.0, 1.0});
  CHECK(t.grad(a).v == std::vector<double>{-0.5});
}

TEST_CASE("kink margin tracks prelu and pooling distances") {
  Tape t;
  Tensor xv = Tensor::vec({0.3, -0.4});
  Var y = t.prelu(t.leaf(xv), t.constant(Tensor::vec({0.1})));
  CHECK(t.value(y).numel() == 2);
  CHECK(t.kink_margin() == doctest::Approx(0.3).epsilon(1e-15));

  Tape t2;
  Tensor pool = Tensor::zeros({1, 2, 2});
  pool.v = {1.0, 2.0, 3.0, 4.0};
  t2.maxpool2d(t2.leaf(pool), 2, 2);
  CHECK(t2.kink_margin() == doctest::Approx(1.0).epsilon(1e-15));

  Tape t3;
  t3.tanh_(t3.leaf(rand_tensor({3})));
  CHECK(std::isinf(t3.kink_margin()));
}

TEST_CASE("backward before forward is an error") {
  Program p([](Tape &, const std::vector<Var> &in) { return in[0]; });
  CHECK_THROWS_AS(p.backward(Tensor::scalar(1.0)), sercl::Error);
}

TEST_CASE("shape mismatches are rejected") {
  Tape t;
  Var a = t.leaf(rand_tensor({3}));
  Var b = t.leaf(rand_tensor({4}));
  CHECK_THROWS_AS(t.add(a, b), sercl::Error);
  CHECK_THROWS_AS(t.mul(a, b), sercl::Error);

  Var m = t.leaf(rand_tensor({2, 3}));
  Var n = t.leaf(rand_tensor({2, 3}));
  CHECK_THROWS_AS(t.matmul(m, n), sercl::Error);

  Program p([](Tape &tt, const std::vector<Var> &in) {
    return tt.sum(tt.add(in[0], in[1]));
  });
  CHECK_THROWS_AS(p.forward_eval({rand_tensor({3}), rand_tensor({5})}),
                  sercl::Error);
}

TEST_CASE("gradients of unreached inputs are zero") {
  Tape t;
  Tensor a = rand_tensor({3});
  a.requires_grad = true;
  Tensor b = rand_tensor({3});
  b.requires_grad = true;
  Var va = t.leaf(a);
  Var vb = t.leaf(b);
  t.backward(t.sum(va));
  CHECK(t.grad(vb).v == std::vector<double>{0.0, 0.0, 0.0});
}
