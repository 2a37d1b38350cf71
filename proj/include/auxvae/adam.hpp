#pragma once

// Adam optimizer with coupled L2 weight decay.
//
// The decay term is added to the raw gradient before the moment updates
// (classic Adam-with-L2, not AdamW), so decay strength is modulated by the
// adaptive step size. Moment buffers are keyed by parameter path and restored
// verbatim from checkpoints, which keeps resumed trajectories bit-identical.

#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "auxvae/param_store.hpp"

namespace auxvae::nn {

template <class T>
struct AdamState {
  T lr = T(1e-3);
  T beta1 = T(0.9);
  T beta2 = T(0.999);
  T eps = T(1e-8);
  T weight_decay = T(0);
  std::int64_t step_count = 0;
  std::map<std::string, std::vector<T>> m;
  std::map<std::string, std::vector<T>> v;
};

// One update over every parameter in the store. A parameter whose grad buffer
// was never allocated this step is treated as having zero gradient (weight
// decay still applies). Non-finite gradients abort with the offending path.
template <class T>
void adam_step(ParamStore<T>& store, AdamState<T>& state) {
  state.step_count += 1;
  double t = static_cast<double>(state.step_count);
  T bc1 = static_cast<T>(1.0 - std::pow(static_cast<double>(state.beta1), t));
  T bc2 = static_cast<T>(1.0 - std::pow(static_cast<double>(state.beta2), t));

  for (auto& [path, p] : store.mutable_params()) {
    auto& m = state.m[path];
    auto& v = state.v[path];
    if (m.size() != p->val.size()) m.assign(p->val.size(), T(0));
    if (v.size() != p->val.size()) v.assign(p->val.size(), T(0));
    bool has_grad = p->grad.size() == p->val.size();
    for (std::size_t i = 0; i < p->val.size(); ++i) {
      T g = has_grad ? p->grad[i] : T(0);
      if (!std::isfinite(static_cast<double>(g)))
        throw std::runtime_error("adam_step: non-finite gradient in " + path);
      g += state.weight_decay * p->val[i];
      m[i] = state.beta1 * m[i] + (T(1) - state.beta1) * g;
      v[i] = state.beta2 * v[i] + (T(1) - state.beta2) * g * g;
      T m_hat = m[i] / bc1;
      T v_hat = v[i] / bc2;
      p->val[i] -= state.lr * m_hat /
                   (static_cast<T>(std::sqrt(static_cast<double>(v_hat))) +
                    state.eps);
    }
  }
}

}  // namespace auxvae::nn
