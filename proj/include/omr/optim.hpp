// include/omr/optim.hpp

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

#ifndef OMR_OPTIM_HPP_
#define OMR_OPTIM_HPP_

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "omr/encoder.hpp"  // Param
#include "omr/tensor.hpp"

namespace omr {

struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

struct AdamConfig {
  Real beta1 = 0.9;
  Real beta2 = 0.999;
  Real eps = 1e-8;
};

struct CosineSchedule {
  Real lr0 = 1e-4;
  Real lr_min = 1e-6;
  long t_max = 64000;
};

// Single cosine cycle, no restarts; t past t_max clamps to lr_min.
inline Real cosine_lr(long t, const CosineSchedule& s) {
  if (t >= s.t_max) return s.lr_min;
  if (t < 0) t = 0;
  const Real phase = 3.14159265358979323846 * static_cast<Real>(t) /
                     static_cast<Real>(s.t_max);
  return s.lr_min + 0.5 * (s.lr0 - s.lr_min) * (1.0 + std::cos(phase));
}

// Adam over an ordered parameter list. Moment buffers are created on bind
// and addressed by position, so the binding order must stay stable.
class Adam {
 public:
  struct Slot {
    std::string name;
    Param* param = nullptr;
    Tensor m, v;
  };

  explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}

  void bind(const std::string& name, Param& p) {
    slots_.push_back(Slot{name, &p, Tensor(p.v.shape()), Tensor(p.v.shape())});
  }

  std::size_t num_slots() const { return slots_.size(); }
  long step_count() const { return t_; }
  std::vector<Slot>& slots() { return slots_; }
  const AdamConfig& config() const { return cfg_; }
  void set_step_count(long t) { t_ = t; }

  // m <- b1*m + (1-b1)*g;  v <- b2*v + (1-b2)*g^2;
  // theta <- theta - lr * mhat / (sqrt(vhat) + eps)
  void step(Real lr) {
    ++t_;
    const Real c1 = 1.0 - std::pow(cfg_.beta1, static_cast<Real>(t_));
    const Real c2 = 1.0 - std::pow(cfg_.beta2, static_cast<Real>(t_));
    for (auto& slot : slots_) {
      Tensor& theta = slot.param->v;
      const Tensor& g = slot.param->g;
      for (std::size_t i = 0; i < theta.numel(); ++i) {
        const Real gi = g[i];
        if (!std::isfinite(gi))
          throw NumericError("adam: non-finite gradient in " + slot.name);
        slot.m[i] = cfg_.beta1 * slot.m[i] + (1.0 - cfg_.beta1) * gi;
        slot.v[i] = cfg_.beta2 * slot.v[i] + (1.0 - cfg_.beta2) * gi * gi;
        const Real mhat = slot.m[i] / c1;
        const Real vhat = slot.v[i] / c2;
        theta[i] -= lr * mhat / (std::sqrt(vhat) + cfg_.eps);
      }
    }
  }

  void zero_grads() {
    for (auto& slot : slots_) slot.param->g.fill(0);
  }

 private:
  AdamConfig cfg_;
  long t_ = 0;
  std::vector<Slot> slots_;
};

}  // namespace omr

#endif  // OMR_OPTIM_HPP_
