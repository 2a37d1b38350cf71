#pragma once

// Finite-difference gradient verification.
//
// grad_check evaluates a scalar-valued function of a ParamStore twice per
// probed coordinate (central differences, h = 1e-5) and compares against the
// analytic gradient from one backward pass. The function must be
// re-evaluable: any randomness inside it has to be reseeded identically on
// every call, otherwise the finite differences measure noise, not gradients.
//
// Intended to run with T = double; float round-off swamps the tolerance.

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "auxvae/param_store.hpp"
#include "auxvae/rng.hpp"
#include "auxvae/tensor.hpp"

namespace auxvae::nn {

struct GradCheckReport {
  double max_rel_err = 0.0;
  std::string worst_param;
  int worst_coord = -1;
  int coords_checked = 0;
};

// Probes up to coords_per_param coordinates of every parameter (all of them
// when the parameter is smaller). Relative error uses max(1, |a|, |b|) in the
// denominator so near-zero gradients are compared absolutely.
template <class T>
GradCheckReport grad_check(
    const std::function<Tensor<T>(ParamStore<T>&)>& f, ParamStore<T>& store,
    int coords_per_param, std::uint64_t seed, T h = T(1e-5)) {
  store.zero_grad();
  auto loss = f(store);
  backward(loss);

  std::map<std::string, std::vector<T>> analytic;
  for (const auto& [path, p] : store.params()) {
    if (p->grad.size() == p->val.size())
      analytic[path] = p->grad;
    else
      analytic[path] = std::vector<T>(p->val.size(), T(0));
  }

  GradCheckReport report;
  Rng rng(seed);
  for (const auto& [path, p] : store.params()) {
    int n = p->size();
    std::vector<int> coords;
    if (n <= coords_per_param) {
      coords.resize(n);
      for (int i = 0; i < n; ++i) coords[i] = i;
    } else {
      for (int i = 0; i < coords_per_param; ++i)
        coords.push_back(static_cast<int>(rng.uniform_int(n)));
    }
    for (int c : coords) {
      T saved = p->val[c];
      p->val[c] = saved + h;
      T up = f(store)->val[0];
      p->val[c] = saved - h;
      T down = f(store)->val[0];
      p->val[c] = saved;
      double fd = (static_cast<double>(up) - static_cast<double>(down)) /
                  (2.0 * static_cast<double>(h));
      double an = static_cast<double>(analytic[path][c]);
      double denom = std::max({1.0, std::abs(fd), std::abs(an)});
      double rel = std::abs(fd - an) / denom;
      ++report.coords_checked;
      if (rel > report.max_rel_err) {
        report.max_rel_err = rel;
        report.worst_param = path;
        report.worst_coord = c;
      }
    }
  }
  return report;
}

}  // namespace auxvae::nn
