// include/omr/ctc.hpp

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
//
// Connectionist Temporal Classification over the 2L+1 extended label
// sequence (blank, l1, blank, l2, ..., blank). Everything runs in log space.
// Conventions:
//   alpha_t(s) includes the emission at frame t;
//   beta_t(s) covers frames t+1..T-1 only (no emission at t), so
//   sum_s exp(alpha_t(s) + beta_t(s)) equals the total path probability at
//   every t, and the per-frame symbol posterior is
//   gamma_t(k) = sum_{s: lab(s)=k} exp(alpha + beta - logP).
// The gradient returned is with respect to the pre-softmax logits:
//   d_logits = softmax(logits) - gamma = exp(log_probs) - gamma.

#ifndef OMR_CTC_HPP_
#define OMR_CTC_HPP_

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "omr/tensor.hpp"

namespace omr {

constexpr Real kLogZero = -std::numeric_limits<Real>::infinity();

inline Real log_add(Real a, Real b) {
  if (a == kLogZero) return b;
  if (b == kLogZero) return a;
  return a > b ? a + std::log1p(std::exp(b - a))
               : b + std::log1p(std::exp(a - b));
}

// Target cannot be aligned into the available frames.
struct CtcInfeasibleError : std::runtime_error {
  explicit CtcInfeasibleError(const std::string& what)
      : std::runtime_error(what) {}
};

// Brute-force enumeration refused; search space too large.
struct CtcTooLargeError : std::runtime_error {
  explicit CtcTooLargeError(const std::string& what)
      : std::runtime_error(what) {}
};

inline std::size_t ctc_min_frames(std::span<const int> target) {
  std::size_t repeats = 0;
  for (std::size_t i = 1; i < target.size(); ++i)
    if (target[i] == target[i - 1]) ++repeats;
  return target.size() + repeats;
}

struct CtcResult {
  Real loss = 0;
  Tensor d_logits;  // [T, V+1]
};

// log_probs: [T, V+1] rows of log-probabilities, blank at index V.
inline CtcResult ctc_loss(const Tensor& log_probs, std::span<const int> target,
                          int blank = -1) {
  if (log_probs.rank() != 2) throw DimensionError("ctc: log_probs must be [T,V+1]");
  const std::size_t t_len = log_probs.extent(0);
  const std::size_t n_sym = log_probs.extent(1);
  if (t_len == 0 || n_sym == 0) throw DimensionError("ctc: empty log_probs");
  if (blank < 0) blank = static_cast<int>(n_sym) - 1;
  for (int lab : target) {
    if (lab == blank)
      throw DimensionError("ctc: target contains the blank id");
    if (lab < 0 || lab >= static_cast<int>(n_sym))
      throw DimensionError("ctc: target id out of range");
  }
  if (t_len < ctc_min_frames(target))
    throw CtcInfeasibleError("ctc: target needs " +
                             std::to_string(ctc_min_frames(target)) +
                             " frames, only " + std::to_string(t_len) +
                             " available");

  const std::size_t l = target.size();
  const std::size_t s_len = 2 * l + 1;
  auto lab = [&](std::size_t s) -> int {
    return (s % 2 == 0) ? blank : target[s / 2];
  };
  auto lp = [&](std::size_t t, int k) -> Real {
    return log_probs(t, static_cast<std::size_t>(k));
  };

  // alpha
  std::vector<Real> alpha(t_len * s_len, kLogZero);
  alpha[0] = lp(0, blank);
  if (s_len > 1) alpha[1] = lp(0, lab(1));
  for (std::size_t t = 1; t < t_len; ++t) {
    const Real* prev = alpha.data() + (t - 1) * s_len;
    Real* cur = alpha.data() + t * s_len;
    for (std::size_t s = 0; s < s_len; ++s) {
      Real a = prev[s];
      if (s >= 1) a = log_add(a, prev[s - 1]);
      if (s >= 2 && lab(s) != blank && lab(s) != lab(s - 2))
        a = log_add(a, prev[s - 2]);
      cur[s] = a == kLogZero ? kLogZero : a + lp(t, lab(s));
    }
  }
  Real log_p = alpha[(t_len - 1) * s_len + s_len - 1];
  if (s_len > 1)
    log_p = log_add(log_p, alpha[(t_len - 1) * s_len + s_len - 2]);

  // beta (emission-exclusive: beta_{T-1} = 0 on the two terminal states)
  std::vector<Real> beta(t_len * s_len, kLogZero);
  beta[(t_len - 1) * s_len + s_len - 1] = 0;
  if (s_len > 1) beta[(t_len - 1) * s_len + s_len - 2] = 0;
  for (std::size_t t = t_len - 1; t-- > 0;) {
    const Real* nxt = beta.data() + (t + 1) * s_len;
    Real* cur = beta.data() + t * s_len;
    for (std::size_t s = 0; s < s_len; ++s) {
      Real b = nxt[s] == kLogZero ? kLogZero : nxt[s] + lp(t + 1, lab(s));
      if (s + 1 < s_len && nxt[s + 1] != kLogZero)
        b = log_add(b, nxt[s + 1] + lp(t + 1, lab(s + 1)));
      if (s + 2 < s_len && lab(s + 2) != blank && lab(s + 2) != lab(s) &&
          nxt[s + 2] != kLogZero)
        b = log_add(b, nxt[s + 2] + lp(t + 1, lab(s + 2)));
      cur[s] = b;
    }
  }

  CtcResult res;
  res.loss = -log_p;
  res.d_logits = Tensor({t_len, n_sym});
  std::vector<Real> log_gamma(n_sym);
  for (std::size_t t = 0; t < t_len; ++t) {
    std::fill(log_gamma.begin(), log_gamma.end(), kLogZero);
    const Real* a = alpha.data() + t * s_len;
    const Real* b = beta.data() + t * s_len;
    for (std::size_t s = 0; s < s_len; ++s) {
      if (a[s] == kLogZero || b[s] == kLogZero) continue;
      const auto k = static_cast<std::size_t>(lab(s));
      log_gamma[k] = log_add(log_gamma[k], a[s] + b[s]);
    }
    for (std::size_t k = 0; k < n_sym; ++k) {
      const Real gamma =
          log_gamma[k] == kLogZero ? 0.0 : std::exp(log_gamma[k] - log_p);
      res.d_logits(t, k) = std::exp(log_probs(t, k)) - gamma;
    }
  }
  return res;
}

// Collapse a frame-label path: merge adjacent repeats, then strip blanks.
inline std::vector<int> ctc_collapse(std::span<const int> path, int blank) {
  std::vector<int> out;
  int prev = blank;
  for (int k : path) {
    if (k != prev && k != blank) out.push_back(k);
    prev = k;
  }
  return out;
}

// Exhaustive oracle: sums the probability of every frame-label path whose
// collapse equals the target. Only usable at desk scale.
inline Real ctc_brute_force(const Tensor& log_probs, std::span<const int> target,
                            int blank = -1) {
  const std::size_t t_len = log_probs.extent(0);
  const std::size_t n_sym = log_probs.extent(1);
  if (blank < 0) blank = static_cast<int>(n_sym) - 1;
  double paths = std::pow(static_cast<double>(n_sym), static_cast<double>(t_len));
  if (paths > 1e7)
    throw CtcTooLargeError("ctc_brute_force: " + std::to_string(paths) +
                           " paths exceed the enumeration budget");
  std::vector<int> path(t_len, 0);
  Real total = kLogZero;
  const auto count = static_cast<std::uint64_t>(paths);
  for (std::uint64_t code = 0; code < count; ++code) {
    std::uint64_t c = code;
    Real lp = 0;
    for (std::size_t t = 0; t < t_len; ++t) {
      path[t] = static_cast<int>(c % n_sym);
      c /= n_sym;
      lp += log_probs(t, static_cast<std::size_t>(path[t]));
    }
    const std::vector<int> collapsed = ctc_collapse(path, blank);
    if (collapsed.size() == target.size() &&
        std::equal(collapsed.begin(), collapsed.end(), target.begin()))
      total = log_add(total, lp);
  }
  return total == kLogZero ? std::numeric_limits<Real>::infinity() : -total;
}

// Per-frame argmax (ties to the lowest id), merge adjacent repeats, delete
// blanks.
inline std::vector<int> ctc_greedy_decode(const Tensor& log_probs,
                                          int blank = -1) {
  const std::size_t t_len = log_probs.extent(0);
  const std::size_t n_sym = log_probs.extent(1);
  if (blank < 0) blank = static_cast<int>(n_sym) - 1;
  std::vector<int> best(t_len);
  for (std::size_t t = 0; t < t_len; ++t) {
    const Real* row = log_probs.data() + t * n_sym;
    std::size_t arg = 0;
    for (std::size_t k = 1; k < n_sym; ++k)
      if (row[k] > row[arg]) arg = k;
    best[t] = static_cast<int>(arg);
  }
  return ctc_collapse(best, blank);
}

}  // namespace omr

#endif  // OMR_CTC_HPP_
