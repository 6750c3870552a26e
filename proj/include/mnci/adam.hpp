#pragma once

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "mnci/common.hpp"

namespace mnci {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// First/second moment accumulators for one dense tensor.
template <class T>
struct AdamState {
  T m, v;
  long step = 0;

  explicit AdamState(const T& like)
      : m(T::Zero(like.rows(), like.cols())), v(T::Zero(like.rows(), like.cols())) {}
};

/// Standard bias-corrected Adam update, applied in place.
template <class T>
void adam_step(AdamState<T>& state, T& param, const T& grad, double lr, const AdamConfig& cfg,
               const std::string& name) {
  if (!grad.allFinite()) throw NumericError("non-finite gradient in " + name);
  if (grad.rows() != param.rows() || grad.cols() != param.cols()) {
    throw std::invalid_argument("gradient shape mismatch for " + name);
  }
  ++state.step;
  state.m = cfg.beta1 * state.m + (1.0 - cfg.beta1) * grad;
  state.v = cfg.beta2 * state.v + (1.0 - cfg.beta2) * grad.cwiseProduct(grad);
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  param.array() -=
      lr * (state.m.array() / bc1) / ((state.v.array() / bc2).sqrt() + cfg.eps);
}

/// Per-entry moments and step counters for a vector of scalars updated
/// sparsely (the per-node influence scalars: only entries touched in a batch
/// advance).
struct AdamScalarArray {
  Vec m, v;
  std::vector<long> steps;

  explicit AdamScalarArray(int n) : m(Vec::Zero(n)), v(Vec::Zero(n)), steps(n, 0) {}
};

inline void adam_step_sparse(AdamScalarArray& state, Vec& params,
                             const std::map<int, double>& grads, double lr,
                             const AdamConfig& cfg, const std::string& name) {
  for (const auto& [idx, g] : grads) {
    if (!std::isfinite(g)) throw NumericError("non-finite gradient in " + name);
    if (idx < 0 || idx >= params.size()) {
      throw std::invalid_argument("gradient index out of range for " + name);
    }
    long& t = state.steps[idx];
    ++t;
    state.m[idx] = cfg.beta1 * state.m[idx] + (1.0 - cfg.beta1) * g;
    state.v[idx] = cfg.beta2 * state.v[idx] + (1.0 - cfg.beta2) * g * g;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
    params[idx] -= lr * (state.m[idx] / bc1) / (std::sqrt(state.v[idx] / bc2) + cfg.eps);
  }
}

}  // namespace mnci
