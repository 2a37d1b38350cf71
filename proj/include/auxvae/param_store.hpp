#pragma once

// Named parameter registry.
//
// Parameters live in an ordered map keyed by a dotted path such as
// "enc.x.b0.conv.w"; the ordering makes every iteration (initialization,
// optimizer steps, serialization) deterministic. Buffers hold non-trainable
// state (batch-norm running statistics, normalization constants) that must be
// checkpointed but never receives gradients.
//
// Initialization draws from a stream derived from (store seed, path), so a
// parameter with the same path and shape initializes identically regardless of
// which other parameters exist. Model variants that share a submodule
// therefore start from bit-identical weights, which is what makes paired-seed
// comparisons between variants meaningful.

#include <cmath>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "auxvae/rng.hpp"
#include "auxvae/tensor.hpp"

namespace auxvae::nn {

enum class Init { Zeros, Ones, GlorotUniform };

template <class T>
class ParamStore {
 public:
  ParamStore() = default;
  explicit ParamStore(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t seed() const { return seed_; }
  void set_seed(std::uint64_t s) { seed_ = s; }

  // fan_in / fan_out are only used by GlorotUniform and may be 0 otherwise.
  Tensor<T> add_param(const std::string& path, int rows, int cols, Init init,
                      int fan_in = 0, int fan_out = 0) {
    if (params_.count(path))
      throw std::invalid_argument("param already registered: " + path);
    auto t = tensor<T>(rows, cols, /*requires_grad=*/true);
    switch (init) {
      case Init::Zeros:
        break;
      case Init::Ones:
        for (auto& v : t->val) v = T(1);
        break;
      case Init::GlorotUniform: {
        if (fan_in <= 0) fan_in = rows;
        if (fan_out <= 0) fan_out = cols;
        double limit = std::sqrt(6.0 / (fan_in + fan_out));
        Rng rng(derive_seed(seed_, path));
        for (auto& v : t->val)
          v = static_cast<T>(rng.uniform(-limit, limit));
        break;
      }
    }
    params_.emplace(path, t);
    return t;
  }

  Tensor<T> add_buffer(const std::string& path, int rows, int cols,
                       T fill = T(0)) {
    if (buffers_.count(path))
      throw std::invalid_argument("buffer already registered: " + path);
    auto t = tensor<T>(rows, cols, /*requires_grad=*/false);
    for (auto& v : t->val) v = fill;
    buffers_.emplace(path, t);
    return t;
  }

  Tensor<T> param(const std::string& path) const {
    auto it = params_.find(path);
    if (it == params_.end())
      throw std::out_of_range("no such param: " + path);
    return it->second;
  }

  Tensor<T> buffer(const std::string& path) const {
    auto it = buffers_.find(path);
    if (it == buffers_.end())
      throw std::out_of_range("no such buffer: " + path);
    return it->second;
  }

  bool has_param(const std::string& path) const { return params_.count(path); }
  bool has_buffer(const std::string& path) const { return buffers_.count(path); }

  const std::map<std::string, Tensor<T>>& params() const { return params_; }
  const std::map<std::string, Tensor<T>>& buffers() const { return buffers_; }

  std::size_t num_scalars() const {
    std::size_t n = 0;
    for (const auto& [path, t] : params_) n += t->val.size();
    return n;
  }

  void zero_grad() {
    for (auto& [path, t] : params_) t->zero_grad();
  }

  // Deep copy with a different scalar type (float -> double for gradient
  // checking). float values convert exactly.
  template <class U>
  ParamStore<U> cast() const {
    ParamStore<U> out(seed_);
    for (const auto& [path, t] : params_) {
      auto nt = tensor<U>(t->rows, t->cols, true);
      for (std::size_t i = 0; i < t->val.size(); ++i)
        nt->val[i] = static_cast<U>(t->val[i]);
      out.mutable_params().emplace(path, nt);
    }
    for (const auto& [path, t] : buffers_) {
      auto nt = tensor<U>(t->rows, t->cols, false);
      for (std::size_t i = 0; i < t->val.size(); ++i)
        nt->val[i] = static_cast<U>(t->val[i]);
      out.mutable_buffers().emplace(path, nt);
    }
    return out;
  }

  std::map<std::string, Tensor<T>>& mutable_params() { return params_; }
  std::map<std::string, Tensor<T>>& mutable_buffers() { return buffers_; }

 private:
  std::uint64_t seed_ = 0;
  std::map<std::string, Tensor<T>> params_;
  std::map<std::string, Tensor<T>> buffers_;
};

}  // namespace auxvae::nn
