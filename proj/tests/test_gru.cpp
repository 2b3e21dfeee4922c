// tests/test_gru.cpp

// Copyright 2026  omr-toolkit authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include <catch2/catch.hpp>

#include <cmath>

#include "omr/gru.hpp"
#include "omr/rng.hpp"

#include "gradcheck.hpp"

using namespace omr;
using omr::testing::dot;
using omr::testing::max_grad_err;
using omr::testing::random_projection;
using omr::testing::random_tensor;

TEST_CASE("gru step with all-zero parameters and state stays at zero", "[gru]") {
  Rng rng(1);
  GruParams p;
  p.init(3, 2, rng);
  p.visit_params("p", [](const std::string&, Param& q) { q.v.fill(0); });
  Tensor x({3}, {1.0, -2.0, 0.5});
  Tensor h({2});
  Tensor h1 = gru_step(x, h, p);
  REQUIRE(h1[0] == 0.0);  // z = 0.5, candidate = 0
  REQUIRE(h1[1] == 0.0);
}

TEST_CASE("saturated update gate freezes the hidden state", "[gru]") {
  Rng rng(2);
  GruParams p;
  p.init(3, 2, rng);
  p.visit_params("p", [](const std::string&, Param& q) { q.v.fill(0); });
  p.bz.v.fill(-1e6);  // z ~ 0  ->  h_t ~ h_prev
  Tensor x({3}, {0.3, -0.7, 2.0});
  Tensor h({2}, {0.25, -0.5});
  Tensor h1 = gru_step(x, h, p);
  REQUIRE(h1[0] == Approx(0.25).margin(1e-6));
  REQUIRE(h1[1] == Approx(-0.5).margin(1e-6));
}

TEST_CASE("gru step gradient check over input, state and all 9 blocks", "[gru]") {
  Rng rng(3);
  GruParams p;
  p.init(3, 2, rng);
  Tensor x = random_tensor({3}, rng);
  Tensor h = random_tensor({2}, rng, -0.5, 0.5);
  Tensor proj = random_projection({2}, 81);

  auto loss = [&] { return dot(proj, gru_step(x, h, p)); };

  GruSeqCache cache;
  gru_step(x, h, p, &cache);
  p.visit_params("p", [](const std::string&, Param& q) { q.g.fill(0); });
  GruStepGrads g = gru_step_backward(cache, p, proj);

  REQUIRE(max_grad_err(x, g.d_x, loss) < 1e-5);
  REQUIRE(max_grad_err(h, g.d_h_prev, loss) < 1e-5);
  p.visit_params("p", [&](const std::string& name, Param& q) {
    INFO(name);
    REQUIRE(max_grad_err(q.v, q.g, loss) < 1e-5);
  });
}

TEST_CASE("gru sequence of length one equals a single step", "[gru]") {
  Rng rng(4);
  GruParams p;
  p.init(4, 3, rng);
  Tensor x = random_tensor({4}, rng);
  Tensor h0({3});
  Tensor step = gru_step(x, h0, p);
  Tensor seq = gru_sequence_forward(x.reshape({1, 4}), p, nullptr);
  for (std::size_t j = 0; j < 3; ++j) REQUIRE(step[j] == seq(0, j));
}

TEST_CASE("gru sequence with zero parameters yields zero outputs", "[gru]") {
  Rng rng(5);
  GruParams p;
  p.init(3, 4, rng);
  p.visit_params("p", [](const std::string&, Param& q) { q.v.fill(0); });
  Tensor xs = random_tensor({7, 3}, rng);
  Tensor ys = gru_sequence_forward(xs, p, nullptr);
  for (std::size_t i = 0; i < ys.numel(); ++i) REQUIRE(ys[i] == 0.0);
}

TEST_CASE("gru rejects empty sequences", "[gru]") {
  Rng rng(6);
  GruParams p;
  p.init(3, 2, rng);
  Tensor xs({0, 3});
  REQUIRE_THROWS_AS(gru_sequence_forward(xs, p, nullptr), DimensionError);
}

TEST_CASE("backpropagation through time matches finite differences", "[gru]") {
  Rng rng(7);
  GruParams p;
  p.init(3, 2, rng);
  Tensor xs = random_tensor({4, 3}, rng);
  Tensor proj = random_projection({4, 2}, 83);

  auto loss = [&] { return dot(proj, gru_sequence_forward(xs, p, nullptr)); };

  GruSeqCache cache;
  gru_sequence_forward(xs, p, &cache);
  p.visit_params("p", [](const std::string&, Param& q) { q.g.fill(0); });
  Tensor d_xs = gru_sequence_backward(cache, p, proj);

  REQUIRE(max_grad_err(xs, d_xs, loss) < 1e-5);
  p.visit_params("p", [&](const std::string& name, Param& q) {
    INFO(name);
    REQUIRE(max_grad_err(q.v, q.g, loss) < 1e-5);
  });
}

TEST_CASE("hidden state stays inside [-1, 1] from a zero start", "[gru]") {
  Rng rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    GruParams p;
    p.init(5, 4, rng);
    // exaggerate the weights to push toward saturation
    p.visit_params("p", [&](const std::string&, Param& q) {
      for (auto& v : q.v.vec()) v *= 5.0;
    });
    Tensor xs = random_tensor({12, 5}, rng, -3.0, 3.0);
    Tensor ys = gru_sequence_forward(xs, p, nullptr);
    for (std::size_t i = 0; i < ys.numel(); ++i) REQUIRE(std::abs(ys[i]) <= 1.0);
  }
}

TEST_CASE("backward half equals forward half on the reversed sequence", "[gru]") {
  Rng rng(9);
  BiGruStack stack(3, 2, 1, rng);
  stack.layers()[0].bwd = stack.layers()[0].fwd;  // share parameters

  Tensor xs = random_tensor({5, 3}, rng);
  Tensor out = stack.forward(xs, nullptr);
  REQUIRE(out.shape() == Shape{5, 4});

  Tensor fwd_on_reversed =
      reverse_rows(gru_sequence_forward(reverse_rows(xs), stack.layers()[0].fwd, nullptr));
  for (std::size_t t = 0; t < 5; ++t)
    for (std::size_t j = 0; j < 2; ++j)
      REQUIRE(out(t, 2 + j) == fwd_on_reversed(t, j));  // exact, not approximate
}

TEST_CASE("bigru output width is twice the hidden size", "[gru]") {
  Rng rng(10);
  BiGruStack stack(6, 256, 2, rng);
  Tensor xs = random_tensor({3, 6}, rng);
  Tensor ys = stack.forward(xs, nullptr);
  REQUIRE(ys.shape() == Shape{3, 512});
}

TEST_CASE("whole bigru stack gradient check at toy size", "[gru]") {
  Rng rng(11);
  BiGruStack stack(4, 3, 2, rng);
  Tensor xs = random_tensor({3, 4}, rng);
  Tensor proj = random_projection({3, 6}, 89);

  auto loss = [&] { return dot(proj, stack.forward(xs, nullptr)); };

  BiGruStack::Cache cache;
  stack.forward(xs, &cache);
  stack.visit_params([](const std::string&, Param& q) { q.g.fill(0); });
  Tensor d_xs = stack.backward(cache, proj);

  REQUIRE(max_grad_err(xs, d_xs, loss) < 1e-5);
  stack.visit_params([&](const std::string& name, Param& q) {
    INFO(name);
    REQUIRE(max_grad_err(q.v, q.g, loss) < 1e-5);
  });
}
